//! Multinomial naive Bayes over token counts.
//!
//! Scores are `log p(c) + Σ_t count(t)·log p(t|c)`; the evidence term `p(t)`
//! is the same for every class and is left out of the argmax.

use super::{ClassicalError, Classifier, LabeledSet, Prediction};

#[derive(Debug, Clone, PartialEq)]
pub struct MnbModel {
    pub log_priors: Vec<f64>,
    /// `n_classes x n_tokens`, row-major, Laplace smoothed.
    pub log_likelihoods: Vec<f64>,
    pub n_tokens: usize,
}

pub fn mnb_fit(data: &LabeledSet, alpha: f64) -> Result<MnbModel, ClassicalError> {
    if data.n_classes == 0 {
        return Err(ClassicalError::NoClasses);
    }
    if data.is_empty() {
        return Err(ClassicalError::Empty);
    }
    if !(alpha > 0.0) {
        return Err(ClassicalError::Param(format!("smoothing alpha must be > 0, got {alpha}")));
    }
    if let Some((index, &value)) = data
        .features
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && v.fract() == 0.0))
    {
        return Err(ClassicalError::NotCount { index, value });
    }

    let (c, k) = (data.n_classes, data.dim);
    let mut class_n = vec![0usize; c];
    let mut counts = vec![0.0; c * k];
    for i in 0..data.len() {
        let label = data.labels[i];
        class_n[label] += 1;
        for (acc, v) in counts[label * k..(label + 1) * k].iter_mut().zip(data.row(i)) {
            *acc += v;
        }
    }

    let n = data.len() as f64;
    let log_priors = class_n.iter().map(|&nc| (nc as f64 / n).ln()).collect();
    let mut log_likelihoods = vec![0.0; c * k];
    for class in 0..c {
        let row = &counts[class * k..(class + 1) * k];
        let denom = row.iter().sum::<f64>() + alpha * k as f64;
        for (out, &count) in log_likelihoods[class * k..(class + 1) * k].iter_mut().zip(row) {
            *out = ((count + alpha) / denom).ln();
        }
    }
    Ok(MnbModel {
        log_priors,
        log_likelihoods,
        n_tokens: k,
    })
}

impl MnbModel {
    pub fn likelihood_row(&self, class: usize) -> &[f64] {
        &self.log_likelihoods[class * self.n_tokens..(class + 1) * self.n_tokens]
    }
}

impl Classifier for MnbModel {
    fn dim(&self) -> usize {
        self.n_tokens
    }

    fn n_classes(&self) -> usize {
        self.log_priors.len()
    }

    fn predict(&self, hist: &[f64]) -> Result<Prediction, ClassicalError> {
        self.check_dim(hist)?;
        let scores = (0..self.n_classes())
            .map(|c| {
                let ll: f64 = self
                    .likelihood_row(c)
                    .iter()
                    .zip(hist)
                    .filter(|(_, &n)| n != 0.0)
                    .map(|(l, n)| l * n)
                    .sum();
                self.log_priors[c] + ll
            })
            .collect();
        Ok(Prediction::from_scores(scores))
    }
}
