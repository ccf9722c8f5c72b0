//! Command implementations behind the `dialect-id` binary.

mod config;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use dialect_id::cnn::{count_params, CnnConfig, PAPER_CLASSES};
use dialect_id::corpus::{load_manifest, synth_corpus, SynthSpec};
use dialect_id::dataset::{populate_cache, FeatureSummary};

pub use config::{CorpusConfig, CorpusSource, ExperimentConfig};
pub use run::{cmd_run, CellSummary, RunRecord, StageTiming};

/// Clip length of the built-in reference corpus when no spec is given.
pub const REFERENCE_CLIP_SECONDS: f64 = 181.0;

/// Parameter total of the reference network with the default head.
pub const PAPER_TOTAL: usize = 1_028_366;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", chain(.0))]
    Usage(anyhow::Error),
    #[error("{}", chain(.0))]
    Data(anyhow::Error),
    #[error("{failed} of {total} experiment cells failed")]
    Cells { failed: usize, total: usize },
}

/// The error and its causes, skipping causes the previous message already
/// spells out.
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Cells { .. } => 3,
        }
    }
}

fn data(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

fn io(e: std::io::Error) -> CliError {
    CliError::Data(e.into())
}

pub fn read_synth_spec(path: &Path) -> Result<SynthSpec, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading synth spec {}", path.display()))
        .map_err(CliError::Usage)?;
    toml::from_str(&text)
        .with_context(|| format!("in synth spec {}", path.display()))
        .map_err(CliError::Usage)
}

/// Renders a synthetic corpus and prints the manifest path.
pub fn cmd_synth(spec: Option<&Path>, seed: u64, out_dir: &Path, out: &mut impl Write) -> Result<PathBuf, CliError> {
    let spec = match spec {
        Some(p) => read_synth_spec(p)?,
        None => SynthSpec::reference(REFERENCE_CLIP_SECONDS),
    };
    let manifest = synth_corpus(&spec, seed, out_dir).map_err(data)?;
    let path = manifest.root.join("manifest.csv");
    writeln!(out, "{}", path.display()).map_err(io)?;
    Ok(path)
}

/// Populates the feature cache and prints a summary. Clips that fail are
/// listed on stderr and turn the exit code into a data error once the rest
/// of the cache has been written.
pub fn cmd_features(manifest: &Path, cache: &Path, seed: u64, out: &mut impl Write) -> Result<FeatureSummary, CliError> {
    let manifest = load_manifest(manifest).map_err(data)?;
    let summary = populate_cache(&manifest, cache, seed).map_err(data)?;
    writeln!(
        out,
        "clips={} segments={} written={} skipped={} failed={}",
        summary.clips,
        summary.segments,
        summary.files_written,
        summary.files_skipped,
        summary.failures.len()
    )
    .map_err(io)?;
    for (path, why) in &summary.failures {
        eprintln!("failed: {}: {why}", path.display());
    }
    if summary.failures.is_empty() {
        Ok(summary)
    } else {
        Err(data(anyhow!("{} of {} clips could not be processed", summary.failures.len(), summary.clips)))
    }
}

/// Prints the layer table of the reference network. Without a class
/// override the total must match [`PAPER_TOTAL`].
pub fn cmd_paramcheck(classes: Option<usize>, out: &mut impl Write) -> Result<usize, CliError> {
    let config = CnnConfig::paper(classes.unwrap_or(PAPER_CLASSES));
    let count = count_params(&config).map_err(|e| CliError::Usage(e.into()))?;
    let s = config.shapes().map_err(|e| CliError::Usage(e.into()))?;
    let t = |(h, w, c): (usize, usize, usize)| format!("({h},{w},{c})");

    let mut text = format!("{:<16} {:<14} {:>9}\n", "layer", "output", "params");
    for l in &count.layers {
        text += &format!("{:<16} {:<14} {:>9}\n", l.name, l.output, l.params);
    }
    text += &format!(
        "shape chain: {} -> {} -> {} -> {} -> {}\n",
        t(s.conv1),
        t(s.pool1),
        t(s.conv2),
        t(s.pool2),
        s.flat
    );
    let bytes = count.total * 4;
    text += &format!(
        "trainable parameters: {} ({:.2} MB as f32, {} classes)\n",
        count.total,
        bytes as f64 / (1024.0 * 1024.0),
        config.n_classes
    );
    text += &format!("TOTAL={}\n", count.total);
    out.write_all(text.as_bytes()).map_err(io)?;

    if classes.is_none() && count.total != PAPER_TOTAL {
        return Err(data(anyhow!("expected {PAPER_TOTAL} parameters, counted {}", count.total)));
    }
    Ok(count.total)
}
