//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! seed = 7
//! families = ["svm", "cnn"]
//! out = "runs/reference"
//!
//! [corpus]
//! synth_seconds = 181.0      # or synth_spec = "voices.toml", or manifest = "data/manifest.csv"
//! cache = "cache"            # optional, read-only
//!
//! [protocol]
//! train = ["Sorani"]
//! test = ["Sorani", "Kurmanji", "Hawrami"]
//!
//! [params]
//! svm_lambda = 0.001
//! [params.cnn]
//! epochs = 8
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dialect_id::eval::{Family, FamilyParams, Protocol};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// An existing corpus manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// A synthetic-voice spec (TOML) rendered into `<out>/corpus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth_spec: Option<PathBuf>,
    /// The built-in reference voices at this clip length, rendered into `<out>/corpus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth_seconds: Option<f64>,
    /// Feature cache written by `features`; only read here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorpusSource<'a> {
    Manifest(&'a Path),
    SynthSpec(&'a Path),
    Reference(f64),
}

impl CorpusConfig {
    pub fn source(&self) -> anyhow::Result<CorpusSource<'_>> {
        match (&self.manifest, &self.synth_spec, self.synth_seconds) {
            (Some(m), None, None) => Ok(CorpusSource::Manifest(m)),
            (None, Some(s), None) => Ok(CorpusSource::SynthSpec(s)),
            (None, None, Some(secs)) if secs > 0.0 => Ok(CorpusSource::Reference(secs)),
            (None, None, Some(secs)) => bail!("corpus.synth_seconds must be positive, got {secs}"),
            _ => bail!("[corpus] needs exactly one of manifest, synth_spec, synth_seconds"),
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required: every random choice in the run derives from it.
    pub seed: u64,
    pub families: Vec<Family>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub params: FamilyParams,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config = Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))?;
        config.resolve(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        let c = &mut self.corpus;
        for p in [&mut c.manifest, &mut c.synth_spec, &mut c.cache].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.families.is_empty() {
            bail!("families must name at least one of mnb, svm, knn, rf, cnn");
        }
        if self.families.iter().collect::<BTreeSet<_>>().len() != self.families.len() {
            bail!("families lists a family twice");
        }
        for (name, list) in [("train", &self.protocol.train), ("test", &self.protocol.test)] {
            if list.is_empty() {
                bail!("protocol.{name} is empty");
            }
            if list.iter().collect::<BTreeSet<_>>().len() != list.len() {
                bail!("protocol.{name} lists a dialect twice");
            }
        }
        self.corpus.source()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dialect_id::Dialect;

    const MINIMAL: &str = "seed = 3\nfamilies = [\"knn\"]\n[corpus]\nsynth_seconds = 30.0\n";

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.protocol.train, vec![Dialect::Sorani]);
        assert_eq!(c.protocol.test, Dialect::ALL.to_vec());
        assert_eq!(c.params, FamilyParams::default());
        assert_eq!(c.out, PathBuf::from("out"));
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.families = Family::ALL.to_vec();
        c.protocol = Protocol::full();
        c.params.cnn.epochs = 4;
        c.params.cnn_classes = Some(14);
        c.corpus = CorpusConfig {
            manifest: Some("m.csv".into()),
            cache: Some("cache".into()),
            ..Default::default()
        };
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn seed_is_required() {
        let err = ExperimentConfig::from_toml("families = [\"knn\"]\n[corpus]\nsynth_seconds = 30.0\n").unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "seed = 1\nfamilies = []\n[corpus]\nsynth_seconds = 30.0\n",
            "seed = 1\nfamilies = [\"lstm\"]\n[corpus]\nsynth_seconds = 30.0\n",
            "seed = 1\nfamilies = [\"knn\"]\n[corpus]\nsynth_seconds = 30.0\n[protocol]\ntrain = [\"Zazaki\"]\n",
            "seed = 1\nfamilies = [\"knn\"]\n[corpus]\nsynth_seconds = 30.0\nmanifest = \"m.csv\"\n",
            "seed = 1\nfamilies = [\"knn\"]\n[corpus]\n",
            "seed = 1\nfamilies = [\"knn\"]\ncolour = 3\n[corpus]\nsynth_seconds = 30.0\n",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let text = "seed = 1\nfamilies = [\"knn\"]\nout = \"o\"\n[corpus]\nmanifest = \"m.csv\"\ncache = \"/abs/c\"\n";
        let mut c = ExperimentConfig::from_toml(text).unwrap();
        c.resolve(Path::new("/cfg"));
        assert_eq!(c.out, PathBuf::from("/cfg/o"));
        assert_eq!(c.corpus.manifest, Some(PathBuf::from("/cfg/m.csv")));
        assert_eq!(c.corpus.cache, Some(PathBuf::from("/abs/c")));
    }

    #[test]
    fn shipped_configs_parse() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        for name in ["default.toml", "cross_dialect.toml"] {
            let c = ExperimentConfig::load(&root.join(name)).unwrap();
            assert_eq!(c.seed, 7);
        }
        let text = fs::read_to_string(root.join("reference_voices.toml")).unwrap();
        let spec: dialect_id::corpus::SynthSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, dialect_id::corpus::SynthSpec::reference(181.0));
    }
}
