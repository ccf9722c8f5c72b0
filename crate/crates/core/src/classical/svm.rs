//! Linear one-vs-rest SVM trained with Pegasos steps.
//!
//! The bias is learned as the weight of a constant extra feature, so it is
//! regularised together with `w`. Each class keeps the epoch-end iterate with
//! the lowest primal objective, which removes the last-step jitter of plain
//! stochastic subgradient descent.

use rand::seq::SliceRandom;

use super::{ClassicalError, Classifier, LabeledSet, Prediction};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// `n_classes x dim`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub dim: usize,
    pub lambda: f64,
}

impl SvmModel {
    pub fn weight(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn score(&self, class: usize, x: &[f64]) -> f64 {
        dot(self.weight(class), x) + self.biases[class]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `λ/2·‖w‖² + mean hinge` over the augmented weights `w = (w, b)`.
fn objective(data: &LabeledSet, class: usize, w: &[f64], lambda: f64) -> f64 {
    let d = data.dim;
    let hinge: f64 = (0..data.len())
        .map(|i| {
            let y = if data.labels[i] == class { 1.0 } else { -1.0 };
            (1.0 - y * (dot(&w[..d], data.row(i)) + w[d])).max(0.0)
        })
        .sum();
    0.5 * lambda * dot(w, w) + hinge / data.len() as f64
}

fn fit_binary(data: &LabeledSet, class: usize, params: &SvmParams) -> Vec<f64> {
    let d = data.dim;
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut best = w.clone();
    let mut best_obj = objective(data, class, &w, lambda);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seed::rng(params.seed, &["svm", &class.to_string()]);
    let mut t = 0usize;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = data.row(i);
            let y = if data.labels[i] == class { 1.0 } else { -1.0 };
            let margin = y * (dot(&w[..d], x) + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w[..d].iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                w[d] += eta * y;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
        let obj = objective(data, class, &w, lambda);
        if obj < best_obj {
            best_obj = obj;
            best.copy_from_slice(&w);
        }
    }
    best
}

pub fn svm_fit(data: &LabeledSet, params: &SvmParams) -> Result<SvmModel, ClassicalError> {
    if data.n_classes == 0 {
        return Err(ClassicalError::NoClasses);
    }
    let distinct = data.distinct_labels();
    if data.len() < 2 || distinct < 2 {
        return Err(ClassicalError::SingleClass(distinct));
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(ClassicalError::Param(format!("lambda must be positive, got {}", params.lambda)));
    }
    let d = data.dim;
    let mut weights = Vec::with_capacity(data.n_classes * d);
    let mut biases = Vec::with_capacity(data.n_classes);
    for class in 0..data.n_classes {
        let w = fit_binary(data, class, params);
        weights.extend_from_slice(&w[..d]);
        biases.push(w[d]);
    }
    Ok(SvmModel {
        weights,
        biases,
        dim: d,
        lambda: params.lambda,
    })
}

impl Classifier for SvmModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_classes(&self) -> usize {
        self.biases.len()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction, ClassicalError> {
        self.check_dim(x)?;
        let scores = (0..self.n_classes()).map(|c| self.score(c, x)).collect();
        Ok(Prediction::from_scores(scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64) -> SvmParams {
        SvmParams {
            seed,
            ..SvmParams::default()
        }
    }

    #[test]
    fn separable_pair_meets_margins() {
        let data = LabeledSet::from_rows(&[[1.0, 0.0], [-1.0, 0.0]], vec![0, 1], 2).unwrap();
        for seed in 0..10 {
            let m = svm_fit(&data, &params(seed)).unwrap();
            assert_eq!(m.accuracy(&data).unwrap(), 1.0);
            for c in 0..2 {
                for i in 0..2 {
                    let y = if data.labels[i] == c { 1.0 } else { -1.0 };
                    assert!(y * m.score(c, data.row(i)) >= 1.0 - 1e-2, "seed {seed} class {c} row {i}");
                }
            }
        }
    }

    #[test]
    fn xor_is_not_separable() {
        let data = LabeledSet::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], vec![0, 1, 1, 0], 2).unwrap();
        let m = svm_fit(&data, &params(3)).unwrap();
        assert!(m.accuracy(&data).unwrap() <= 0.75);
    }

    #[test]
    fn deterministic_given_seed() {
        let rows: Vec<[f64; 3]> = (0..30).map(|i| [(i as f64).sin(), (i as f64 * 0.7).cos(), i as f64 / 30.0]).collect();
        let labels = (0..30).map(|i| i % 3).collect::<Vec<_>>();
        let data = LabeledSet::from_rows(&rows, labels, 3).unwrap();
        assert_eq!(svm_fit(&data, &params(9)).unwrap(), svm_fit(&data, &params(9)).unwrap());
    }

    #[test]
    fn scores_are_affine() {
        let m = SvmModel {
            weights: vec![1.0, 0.0],
            biases: vec![0.0],
            dim: 2,
            lambda: 1e-3,
        };
        assert_eq!(m.score(0, &[2.0, 0.0]), 2.0);
        let neg = SvmModel {
            weights: vec![-1.0, 0.0, 0.5, 0.5],
            biases: vec![0.0, -0.1],
            dim: 2,
            lambda: 1e-3,
        };
        let pos = SvmModel {
            weights: neg.weights.iter().map(|w| -w).collect(),
            biases: neg.biases.iter().map(|b| -b).collect(),
            ..neg.clone()
        };
        let x = [0.3, -2.0];
        let s = neg.predict(&x).unwrap().scores;
        let argmin = if s[1] < s[0] { 1 } else { 0 };
        assert_eq!(pos.predict(&x).unwrap().class, argmin);
    }

    #[test]
    fn tie_goes_low() {
        let m = SvmModel {
            weights: vec![0.0; 3],
            biases: vec![0.1, 0.9, 0.9],
            dim: 1,
            lambda: 1e-3,
        };
        assert_eq!(m.predict(&[5.0]).unwrap().class, 1);
    }

    #[test]
    fn errors() {
        let one = LabeledSet::from_rows(&[[1.0], [2.0]], vec![1, 1], 2).unwrap();
        assert_eq!(svm_fit(&one, &params(0)), Err(ClassicalError::SingleClass(1)));
        let data = LabeledSet::from_rows(&[[1.0], [2.0]], vec![0, 1], 2).unwrap();
        let m = svm_fit(&data, &params(0)).unwrap();
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(ClassicalError::Dimension { expected: 1, got: 2 })));
    }
}
