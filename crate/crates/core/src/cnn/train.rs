//! Mini-batch training with Adam.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::layers::Mode;
use super::model::CnnModel;
use super::tensor::Real;
use super::CnnError;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 10,
            seed: 0,
        }
    }
}

/// Training-mode loss and accuracy, averaged over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

impl<T: Real> CnnModel<T> {
    /// One Adam update from a mean gradient.
    pub fn adam_step(&mut self, grads: &[Vec<T>], tc: &TrainConfig) {
        let a = &mut self.adam;
        a.step += 1;
        let t = a.step as i32;
        let (b1, b2) = (T::of(tc.beta1), T::of(tc.beta2));
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let (lr, eps) = (T::of(tc.learning_rate), T::of(tc.epsilon));
        for (block, g) in grads.iter().enumerate() {
            let (p, m, v) = (&mut self.params[block], &mut a.m[block], &mut a.v[block]);
            for i in 0..g.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

fn validate(tc: &TrainConfig) -> Result<(), CnnError> {
    if tc.batch_size == 0 || tc.epochs == 0 {
        return Err(CnnError::Config("batch size and epochs must be at least 1".into()));
    }
    if !(tc.learning_rate >= 0.0) || !(0.0..1.0).contains(&tc.beta1) || !(0.0..1.0).contains(&tc.beta2) || !(tc.epsilon > 0.0) {
        return Err(CnnError::Config(format!("invalid optimiser settings {tc:?}")));
    }
    Ok(())
}

/// Trains in place on `(image, label)` pairs and returns the epoch trace.
///
/// Sample order is reshuffled every epoch and dropout masks come from a
/// separate stream, both derived from `tc.seed`, so equal inputs give
/// bit-identical runs.
pub fn train<T: Real>(model: &mut CnnModel<T>, data: &[(&[T], usize)], tc: &TrainConfig) -> Result<Vec<EpochStats>, CnnError> {
    validate(tc)?;
    if data.is_empty() {
        return Err(CnnError::Empty);
    }
    if let Some(&(_, label)) = data.iter().find(|(_, l)| *l >= model.config.n_classes) {
        return Err(CnnError::Label {
            label,
            n_classes: model.config.n_classes,
        });
    }
    let mut order_rng = seed::rng(tc.seed, &["cnn", "shuffle"]);
    let mut drop_rng = seed::rng(tc.seed, &["cnn", "dropout"]);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(tc.epochs);

    for epoch in 0..tc.epochs {
        order.shuffle(&mut order_rng);
        let (mut loss, mut correct) = (0.0, 0);
        for chunk in order.chunks(tc.batch_size) {
            let batch: Vec<(&[T], usize)> = chunk.iter().map(|&i| data[i]).collect();
            let (l, c, grads) = model.batch_gradient(&batch, Mode::Train, &mut drop_rng)?;
            loss += l * batch.len() as f64;
            correct += c;
            model.adam_step(&grads, tc);
        }
        trace.push(EpochStats {
            epoch: epoch + 1,
            loss: loss / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::config::CnnConfig;

    /// Two classes told apart by which half of the image is bright.
    fn toy() -> (CnnConfig, Vec<(Vec<f32>, usize)>) {
        let config = CnnConfig {
            n_classes: 2,
            ..CnnConfig::tiny()
        };
        let (h, w) = (config.input_h, config.input_w);
        let data = (0..16)
            .map(|i| {
                let label = i % 2;
                let level = 0.5 + 0.05 * (i / 2) as f32;
                let img = (0..h * w)
                    .map(|p| if ((p % w) < w / 2) == (label == 0) { level } else { -level })
                    .collect();
                (img, label)
            })
            .collect();
        (config, data)
    }

    fn view(data: &[(Vec<f32>, usize)]) -> Vec<(&[f32], usize)> {
        data.iter().map(|(x, l)| (x.as_slice(), *l)).collect()
    }

    #[test]
    fn toy_fit_reaches_full_accuracy() {
        let (config, data) = toy();
        let mut m = CnnModel::<f32>::new(config, 1).unwrap();
        let tc = TrainConfig {
            learning_rate: 1e-2,
            batch_size: 4,
            epochs: 20,
            seed: 1,
            ..TrainConfig::default()
        };
        train(&mut m, &view(&data), &tc).unwrap();
        let acc = data.iter().filter(|(x, l)| m.predict(x).unwrap().class == *l).count();
        assert_eq!(acc, 16);
    }

    #[test]
    fn same_seed_same_trace() {
        let (config, data) = toy();
        let tc = TrainConfig {
            batch_size: 5,
            epochs: 3,
            seed: 7,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = CnnModel::<f32>::new(config, 2).unwrap();
            let trace = train(&mut m, &view(&data), &tc).unwrap();
            (trace, m)
        };
        let (ta, ma) = run();
        let (tb, mb) = run();
        assert_eq!(ta, tb);
        assert_eq!(ma, mb);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let (config, data) = toy();
        let mut m = CnnModel::<f32>::new(config, 3).unwrap();
        let before = m.params.clone();
        let tc = TrainConfig {
            learning_rate: 0.0,
            epochs: 4,
            batch_size: 3,
            ..TrainConfig::default()
        };
        train(&mut m, &view(&data), &tc).unwrap();
        assert_eq!(m.params, before);
        assert_eq!(m.adam.step, 4 * 6);
    }

    #[test]
    fn small_steps_descend() {
        // Full-batch eval-mode loss over the first 5 steps at lr 1e-4; at most
        // one seed may show an increase.
        let (config, data) = toy();
        let config = CnnConfig {
            drop1: 0.0,
            drop2: 0.0,
            drop3: 0.0,
            ..config
        };
        let batch = view(&data);
        let tc = TrainConfig {
            learning_rate: 1e-4,
            ..TrainConfig::default()
        };
        let mut failures = 0;
        for seed in 0..5 {
            let mut m = CnnModel::<f32>::new(config, seed).unwrap();
            let mut rng = crate::seed::rng(seed, &["t"]);
            let mut last = f64::INFINITY;
            let mut ok = true;
            for _ in 0..5 {
                let (loss, _, grads) = m.batch_gradient(&batch, Mode::Eval, &mut rng).unwrap();
                ok &= loss <= last;
                last = loss;
                m.adam_step(&grads, &tc);
            }
            failures += usize::from(!ok);
        }
        assert!(failures <= 1);
    }

    #[test]
    fn rejects_bad_input() {
        let (config, data) = toy();
        let mut m = CnnModel::<f32>::new(config, 0).unwrap();
        assert_eq!(train(&mut m, &[], &TrainConfig::default()), Err(CnnError::Empty));
        let bad = vec![(data[0].0.as_slice(), 5)];
        assert!(matches!(train(&mut m, &bad, &TrainConfig::default()), Err(CnnError::Label { .. })));
        let tc = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&mut m, &view(&data), &tc), Err(CnnError::Config(_))));
    }
}
