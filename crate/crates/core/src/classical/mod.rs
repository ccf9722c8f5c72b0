//! Classical classifiers behind one fit/predict contract.
//!
//! Every model is immutable after fitting, and every `predict` is a pure
//! function. Class argmax ties always resolve to the lowest class index.

mod knn;
mod mnb;
mod rf;
pub mod serialize;
mod svm;

pub use knn::{euclidean, cosine, knn_fit, KnnModel};
pub use mnb::{mnb_fit, MnbModel};
pub use rf::{gini, rf_fit, Node, RfModel, RfParams, Tree};
pub use serialize::SavedModel;
pub use svm::{svm_fit, SvmModel, SvmParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error("training set is empty")]
    Empty,
    #[error("no classes to fit")]
    NoClasses,
    #[error("need at least two distinct labels, found {0}")]
    SingleClass(usize),
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("feature {index} = {value} is not a non-negative integer count")]
    NotCount { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    Param(String),
}

/// Feature rows with class labels; `features` is `N x dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: Vec<f64>,
    pub dim: usize,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, n_classes: usize) -> Result<Self, ClassicalError> {
        if labels.is_empty() {
            return Err(ClassicalError::Empty);
        }
        if features.len() != labels.len() * dim {
            return Err(ClassicalError::Dimension {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(ClassicalError::Label { label, n_classes });
        }
        Ok(Self {
            features,
            dim,
            labels,
            n_classes,
        })
    }

    /// Builds a set from row slices.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<usize>, n_classes: usize) -> Result<Self, ClassicalError> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let features = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(features, dim, labels, n_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    fn distinct_labels(&self) -> usize {
        let mut seen = vec![false; self.n_classes];
        self.labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    }
}

/// Predicted class plus the per-class scores it was chosen from.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        Self {
            class: argmax(&scores),
            scores,
        }
    }
}

/// First index of the maximum; `NaN` never wins.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() {
            best = i;
        }
    }
    best
}

pub trait Classifier {
    fn dim(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<Prediction, ClassicalError>;

    fn check_dim(&self, x: &[f64]) -> Result<(), ClassicalError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ClassicalError::Dimension {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    fn accuracy(&self, data: &LabeledSet) -> Result<f64, ClassicalError> {
        let mut correct = 0;
        for i in 0..data.len() {
            if self.predict(data.row(i))?.class == data.labels[i] {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

/// Per-feature z-scoring fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &LabeledSet) -> Self {
        let n = data.len() as f64;
        let mut mean = vec![0.0; data.dim];
        for i in 0..data.len() {
            mean.iter_mut().zip(data.row(i)).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; data.dim];
        for i in 0..data.len() {
            for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(1e-8)).collect();
        Self { mean, std }
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, data: &LabeledSet) -> LabeledSet {
        let features = (0..data.len())
            .flat_map(|i| self.transform_row(data.row(i)))
            .collect();
        LabeledSet {
            features,
            ..data.clone()
        }
    }
}
