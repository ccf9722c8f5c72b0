//! The cross-dialect experiment: corpus, features, fits, reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use dialect_id::classical::{serialize, Standardizer};
use dialect_id::cnn::checkpoint;
use dialect_id::corpus::{load_manifest, synth_corpus, Manifest, SynthSpec};
use dialect_id::dataset::{featurize, load_cached, FeaturizedCorpus};
use dialect_id::eval::{cross_eval, emit_report, macro_f1, CrossEval, Family, TrainedModel};
use dialect_id::features::{cache, ImageNorm};
use dialect_id::Dialect;
use serde::{Deserialize, Serialize};

use crate::config::{CorpusSource, ExperimentConfig};
use crate::{data, io, read_synth_spec, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub family: Family,
    pub train: Dialect,
    pub test: Dialect,
    pub macro_f1: Option<f64>,
    pub error: Option<String>,
}

/// Written to `<out>/run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    /// `cache` or `extracted`.
    pub features: String,
    pub segments: usize,
    pub timings: Vec<StageTiming>,
    pub cells: Vec<CellSummary>,
    /// Every file the run wrote, relative to the output directory.
    pub artifacts: Vec<PathBuf>,
}

struct Clock {
    start: Instant,
    timings: Vec<StageTiming>,
}

impl Clock {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: self.start.elapsed().as_secs_f64(),
        });
        self.start = Instant::now();
    }
}

fn load_corpus(config: &ExperimentConfig, written: &mut Vec<PathBuf>) -> Result<Manifest, CliError> {
    let synth = |spec: SynthSpec, written: &mut Vec<PathBuf>| {
        let dir = config.out.join("corpus");
        let m = synth_corpus(&spec, config.seed, &dir).map_err(data)?;
        written.extend(m.records.iter().map(|r| m.clip_path(r)));
        written.push(dir.join("manifest.csv"));
        Ok(m)
    };
    match config.corpus.source().map_err(CliError::Usage)? {
        CorpusSource::Manifest(p) => load_manifest(p).map_err(data),
        CorpusSource::SynthSpec(p) => synth(read_synth_spec(p)?, written),
        CorpusSource::Reference(secs) => synth(SynthSpec::reference(secs), written),
    }
}

/// Uses the cache when it covers every clip; otherwise extracts in memory.
/// The cache is never written here.
fn load_features(config: &ExperimentConfig, manifest: &Manifest) -> Result<(FeaturizedCorpus, &'static str), CliError> {
    if let Some(dir) = &config.corpus.cache {
        let (corpus, missing) = load_cached(manifest, dir).map_err(data)?;
        if missing.is_empty() {
            return Ok((corpus, "cache"));
        }
        eprintln!(
            "cache {} lacks {} of {} clips; extracting features in memory",
            dir.display(),
            missing.len(),
            manifest.records.len()
        );
    }
    let (corpus, summary) = featurize(manifest, config.seed).map_err(data)?;
    for (path, why) in &summary.failures {
        eprintln!("skipped: {}: {why}", path.display());
    }
    Ok((corpus, "extracted"))
}

fn write_norm(path: &Path, mean: &[f64], std: &[f64]) -> std::io::Result<()> {
    let values: Vec<f32> = mean.iter().chain(std).map(|&v| v as f32).collect();
    cache::write(path, &[2, mean.len()], &values)
}

fn save_models(eval: &CrossEval, dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io)?;
    for fit in &eval.fits {
        let Ok(model) = &fit.outcome else { continue };
        let stem = format!("{}_train-{}", fit.family, fit.train.as_str().to_lowercase());
        match model {
            TrainedModel::Classical { model, standardizer } => {
                let path = dir.join(format!("{stem}.didm"));
                serialize::write(&path, model).map_err(io)?;
                written.push(path);
                if let Some(Standardizer { mean, std }) = standardizer {
                    let path = dir.join(format!("{stem}_standardizer.didf"));
                    write_norm(&path, mean, std).map_err(io)?;
                    written.push(path);
                }
            }
            TrainedModel::Cnn { model, norm } => {
                let path = dir.join(format!("{stem}.didc"));
                checkpoint::save(&path, model).map_err(data)?;
                written.push(path);
                let ImageNorm { mean, std } = norm;
                let path = dir.join(format!("{stem}_imagenorm.didf"));
                write_norm(&path, mean, std).map_err(io)?;
                written.push(path);
            }
        }
    }
    Ok(())
}

fn cell_summaries(eval: &CrossEval) -> Vec<CellSummary> {
    eval.cells
        .iter()
        .map(|c| CellSummary {
            family: c.family,
            train: c.train,
            test: c.test,
            macro_f1: c.outcome.as_ref().ok().map(|r| macro_f1(&r.report)),
            error: c.outcome.as_ref().err().cloned(),
        })
        .collect()
}

/// Runs the experiment described by `config`, writing only below
/// `config.out`. Cell failures are recorded and reported through the error
/// after every artifact has been written.
pub fn cmd_run(config: &ExperimentConfig, out: &mut impl Write) -> Result<RunRecord, CliError> {
    config.validate().map_err(CliError::Usage)?;
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))
        .map_err(CliError::Data)?;
    let mut clock = Clock::new();
    let mut written = Vec::new();

    let manifest = load_corpus(config, &mut written)?;
    clock.lap("corpus");
    let (corpus, source) = load_features(config, &manifest)?;
    clock.lap("features");
    if corpus.records.is_empty() {
        return Err(data(anyhow!("the corpus has no usable segments")));
    }
    let eval = cross_eval(&config.families, &corpus, &config.protocol, &config.params, config.seed);
    clock.lap("train_eval");

    written.extend(emit_report(&eval, &config.out).map_err(data)?);
    save_models(&eval, &config.out.join("models"), &mut written)?;
    clock.lap("report");

    let cells = cell_summaries(&eval);
    for c in &cells {
        match (c.macro_f1, &c.error) {
            (Some(f1), _) => writeln!(out, "{} {} -> {}: macro-F1 {f1:.4}", c.family, c.train, c.test),
            (None, e) => writeln!(out, "{} {} -> {}: FAILED {}", c.family, c.train, c.test, e.as_deref().unwrap_or("")),
        }
        .map_err(io)?;
    }

    let record_path = config.out.join("run.json");
    written.push(record_path.clone());
    let record = RunRecord {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        features: source.to_string(),
        segments: corpus.records.len(),
        timings: clock.timings,
        cells,
        artifacts: written
            .iter()
            .map(|p| p.strip_prefix(&config.out).unwrap_or(p).to_path_buf())
            .collect(),
    };
    let json = serde_json::to_string_pretty(&record).map_err(data)?;
    fs::write(&record_path, json + "\n").map_err(io)?;
    writeln!(out, "wrote {} files under {}", record.artifacts.len(), config.out.display()).map_err(io)?;

    let failed = record.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::Cells {
            failed,
            total: record.cells.len(),
        });
    }
    Ok(record)
}
