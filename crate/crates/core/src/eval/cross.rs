//! Train-on-one-dialect, test-on-each-dialect evaluation grid.
//!
//! A model is fitted once per `(family, train dialect)` on the fit portion of
//! that dialect and scored on the held-out portion of every test dialect. The
//! diagonal is therefore an ordinary held-out evaluation. Each fit gets a
//! sub-seed derived from the family and dialect names only, so reordering the
//! protocol never changes a cell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{class_report, confusion, macro_f1, ClassReport, ConfusionMatrix};
use crate::classical::{
    knn_fit, mnb_fit, rf_fit, svm_fit, Classifier, LabeledSet, RfParams, SavedModel, Standardizer, SvmParams,
};
use crate::cnn::{train, CnnConfig, CnnModel, EpochStats, TrainConfig};
use crate::corpus::Dialect;
use crate::dataset::{FeatureRecord, FeaturizedCorpus, Portion};
use crate::features::ImageNorm;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mnb,
    Svm,
    Knn,
    Rf,
    Cnn,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Mnb, Family::Svm, Family::Knn, Family::Rf, Family::Cnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Mnb => "mnb",
            Family::Svm => "svm",
            Family::Knn => "knn",
            Family::Rf => "rf",
            Family::Cnn => "cnn",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown classifier family {s:?} (expected one of mnb, svm, knn, rf, cnn)"))
    }
}

/// Hyperparameters of every family. Seeds inside are ignored; each fit
/// derives its own from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyParams {
    pub mnb_alpha: f64,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub knn_k: usize,
    pub rf_trees: usize,
    pub cnn: TrainConfig,
    /// Output width of the CNN; `None` uses the corpus speaker count.
    pub cnn_classes: Option<usize>,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            mnb_alpha: 1.0,
            svm_lambda: 1e-3,
            svm_epochs: 50,
            knn_k: 5,
            rf_trees: 100,
            cnn: TrainConfig::default(),
            cnn_classes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protocol {
    pub train: Vec<Dialect>,
    pub test: Vec<Dialect>,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            train: vec![Dialect::Sorani],
            test: Dialect::ALL.to_vec(),
        }
    }
}

impl Protocol {
    /// Every dialect trained and tested against every other.
    pub fn full() -> Self {
        Self {
            train: Dialect::ALL.to_vec(),
            test: Dialect::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub confusion: ConfusionMatrix,
    pub report: ClassReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub family: Family,
    pub train: Dialect,
    pub test: Dialect,
    /// Failures are reported per cell and do not stop the run.
    pub outcome: Result<CellReport, String>,
}

/// A fitted model together with the input transform it expects.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Classical { model: SavedModel, standardizer: Option<Standardizer> },
    Cnn { model: Box<CnnModel<f32>>, norm: ImageNorm },
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub family: Family,
    pub train: Dialect,
    pub n_train: usize,
    pub outcome: Result<TrainedModel, String>,
    /// Per-epoch trace, CNN only.
    pub trace: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossDialectMatrix {
    pub family: Family,
    pub train: Vec<Dialect>,
    pub test: Vec<Dialect>,
    /// `grid[i][j]`: macro-F1 trained on `train[i]`, tested on `test[j]`.
    pub grid: Vec<Vec<Option<f64>>>,
}

impl CrossDialectMatrix {
    pub fn get(&self, train: Dialect, test: Dialect) -> Option<f64> {
        let i = self.train.iter().position(|&d| d == train)?;
        let j = self.test.iter().position(|&d| d == test)?;
        self.grid[i][j]
    }
}

#[derive(Debug, Clone)]
pub struct CrossEval {
    pub speakers: Vec<String>,
    pub cells: Vec<Cell>,
    pub fits: Vec<Fit>,
    pub matrices: Vec<CrossDialectMatrix>,
}

impl CrossEval {
    pub fn cell(&self, family: Family, train: Dialect, test: Dialect) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.family == family && c.train == train && c.test == test)
    }

    pub fn matrix(&self, family: Family) -> Option<&CrossDialectMatrix> {
        self.matrices.iter().find(|m| m.family == family)
    }
}

fn stats_row(r: &FeatureRecord) -> Vec<f64> {
    r.stats.iter().map(|&v| f64::from(v)).collect()
}

fn hist_row(r: &FeatureRecord) -> Vec<f64> {
    r.hist.iter().map(|&v| f64::from(v)).collect()
}

fn labeled(records: &[&FeatureRecord], n_classes: usize, row: fn(&FeatureRecord) -> Vec<f64>) -> Result<LabeledSet, String> {
    let rows: Vec<Vec<f64>> = records.iter().map(|r| row(r)).collect();
    LabeledSet::from_rows(&rows, records.iter().map(|r| r.speaker).collect(), n_classes).map_err(|e| e.to_string())
}

fn fit_model(
    family: Family,
    train_set: &[&FeatureRecord],
    n_classes: usize,
    params: &FamilyParams,
    seed: u64,
) -> Result<(TrainedModel, Vec<EpochStats>), String> {
    let classical = |model: SavedModel, standardizer| Ok((TrainedModel::Classical { model, standardizer }, Vec::new()));
    match family {
        Family::Mnb => {
            let data = labeled(train_set, n_classes, hist_row)?;
            classical(SavedModel::Mnb(mnb_fit(&data, params.mnb_alpha).map_err(|e| e.to_string())?), None)
        }
        Family::Svm | Family::Knn | Family::Rf => {
            let raw = labeled(train_set, n_classes, stats_row)?;
            let z = Standardizer::fit(&raw);
            let data = z.transform(&raw);
            let model = match family {
                Family::Svm => SavedModel::Svm(
                    svm_fit(
                        &data,
                        &SvmParams {
                            lambda: params.svm_lambda,
                            epochs: params.svm_epochs,
                            seed,
                        },
                    )
                    .map_err(|e| e.to_string())?,
                ),
                Family::Knn => SavedModel::Knn(knn_fit(&data, params.knn_k.min(data.len())).map_err(|e| e.to_string())?),
                _ => SavedModel::Rf(
                    rf_fit(
                        &data,
                        &RfParams {
                            n_trees: params.rf_trees,
                            max_features: None,
                            seed,
                        },
                    )
                    .map_err(|e| e.to_string())?,
                ),
            };
            classical(model, Some(z))
        }
        Family::Cnn => {
            let norm = ImageNorm::fit(train_set.iter().map(|r| r.image.as_slice()));
            let images: Vec<Vec<f32>> = train_set.iter().map(|r| norm.apply(&r.image)).collect();
            let data: Vec<(&[f32], usize)> = images.iter().zip(train_set).map(|(x, r)| (x.as_slice(), r.speaker)).collect();
            let classes = params.cnn_classes.unwrap_or(n_classes);
            let mut model = CnnModel::<f32>::new(CnnConfig::paper(classes), seed::derive(seed, &["init"])).map_err(|e| e.to_string())?;
            let tc = TrainConfig { seed, ..params.cnn };
            let trace = train(&mut model, &data, &tc).map_err(|e| e.to_string())?;
            Ok((
                TrainedModel::Cnn {
                    model: Box::new(model),
                    norm,
                },
                trace,
            ))
        }
    }
}

impl TrainedModel {
    pub fn predict(&self, r: &FeatureRecord) -> Result<usize, String> {
        match self {
            TrainedModel::Classical { model, standardizer } => {
                let x = match model {
                    SavedModel::Mnb(_) => hist_row(r),
                    _ => stats_row(r),
                };
                let x = standardizer.as_ref().map_or(x.clone(), |z| z.transform_row(&x));
                let p = match model {
                    SavedModel::Mnb(m) => m.predict(&x),
                    SavedModel::Svm(m) => m.predict(&x),
                    SavedModel::Knn(m) => m.predict(&x),
                    SavedModel::Rf(m) => m.predict(&x),
                };
                p.map(|p| p.class).map_err(|e| e.to_string())
            }
            TrainedModel::Cnn { model, norm } => model
                .predict(&norm.apply(&r.image))
                .map(|p| p.class)
                .map_err(|e| e.to_string()),
        }
    }
}

fn evaluate(model: &TrainedModel, test_set: &[&FeatureRecord], speakers: &[String]) -> Result<CellReport, String> {
    if test_set.is_empty() {
        return Err("no held-out segments for this dialect".into());
    }
    let truth: Vec<usize> = test_set.iter().map(|r| r.speaker).collect();
    let pred = test_set.iter().map(|r| model.predict(r)).collect::<Result<Vec<_>, _>>()?;
    // Predictions beyond the speaker list (a wider CNN head) count as errors
    // against an extra column that is dropped from the report.
    let n = speakers.len() + 1;
    let pred: Vec<usize> = pred.into_iter().map(|p| p.min(n - 1)).collect();
    let full = confusion(&truth, &pred, n).map_err(|e| e.to_string())?;
    let mut labels = speakers.to_vec();
    labels.push(String::new());
    let mut report = class_report(&full, &labels).map_err(|e| e.to_string())?;
    report.rows.pop();
    let report = ClassReport::from_class_rows(report.rows);
    let mut cm = ConfusionMatrix::zeros(speakers.len());
    for t in 0..speakers.len() {
        for p in 0..speakers.len() {
            cm.counts[t * speakers.len() + p] = full.get(t, p);
        }
    }
    Ok(CellReport { confusion: cm, report })
}

/// Runs every `(family, train, test)` cell of the protocol.
pub fn cross_eval(
    families: &[Family],
    corpus: &FeaturizedCorpus,
    protocol: &Protocol,
    params: &FamilyParams,
    seed: u64,
) -> CrossEval {
    let n_classes = corpus.n_classes();
    let jobs: Vec<(Family, Dialect)> = families
        .iter()
        .flat_map(|&f| protocol.train.iter().map(move |&d| (f, d)))
        .collect();

    let fits: Vec<Fit> = jobs
        .par_iter()
        .map(|&(family, train)| {
            let train_set: Vec<&FeatureRecord> = corpus.select(train, Portion::Fit).collect();
            let cell_seed = seed::derive(seed, &[family.as_str(), train.as_str()]);
            let result = if train_set.is_empty() {
                Err(format!("no training segments for {train}"))
            } else {
                fit_model(family, &train_set, n_classes, params, cell_seed)
            };
            let (outcome, trace) = match result {
                Ok((m, t)) => (Ok(m), t),
                Err(e) => (Err(e), Vec::new()),
            };
            Fit {
                family,
                train,
                n_train: train_set.len(),
                outcome,
                trace,
            }
        })
        .collect();

    let cells: Vec<Cell> = fits
        .par_iter()
        .flat_map_iter(|fit| {
            protocol.test.iter().map(move |&test| {
                let outcome = match &fit.outcome {
                    Err(e) => Err(format!("training failed: {e}")),
                    Ok(model) => {
                        let test_set: Vec<&FeatureRecord> = corpus.select(test, Portion::HeldOut).collect();
                        evaluate(model, &test_set, &corpus.speakers)
                    }
                };
                Cell {
                    family: fit.family,
                    train: fit.train,
                    test,
                    outcome,
                }
            })
        })
        .collect();

    let matrices = families
        .iter()
        .map(|&family| CrossDialectMatrix {
            family,
            train: protocol.train.clone(),
            test: protocol.test.clone(),
            grid: protocol
                .train
                .iter()
                .map(|&tr| {
                    protocol
                        .test
                        .iter()
                        .map(|&te| {
                            cells
                                .iter()
                                .find(|c| c.family == family && c.train == tr && c.test == te)
                                .and_then(|c| c.outcome.as_ref().ok())
                                .map(|r| macro_f1(&r.report))
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();

    CrossEval {
        speakers: corpus.speakers.clone(),
        cells,
        fits,
        matrices,
    }
}
