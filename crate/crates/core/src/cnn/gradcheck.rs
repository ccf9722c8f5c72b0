//! Finite-difference check of the analytic gradients.
//!
//! A central difference is only an oracle where the loss is smooth over
//! `[θ-h, θ+h]`. ReLU gates and max-pool winners make it piecewise smooth, so
//! a network draw is used only if no perturbation changes that routing.

use rand::Rng;

use super::config::CnnConfig;
use super::layers::Mode;
use super::model::{CnnModel, N_BLOCKS};
use super::CnnError;
use crate::seed;

const MASK_SEED: u64 = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub model_seed: u64,
    /// Largest `|analytic - numeric| / (|analytic| + 1e-8)` over all parameters.
    pub worst: f64,
    pub checked: usize,
}

struct Case {
    model: CnnModel<f64>,
    xs: Vec<Vec<f64>>,
    mode: Mode,
}

impl Case {
    /// Random biases and two random inputs labelled 0 and `n_classes - 1`.
    fn new(config: CnnConfig, model_seed: u64, mode: Mode) -> Result<Self, CnnError> {
        let mut model = CnnModel::<f64>::new(config, model_seed)?;
        let mut rng = seed::rng(model_seed, &["gradcheck"]);
        for block in [1, 3, 5, 7] {
            model.params[block].iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
        }
        let xs = (0..2)
            .map(|_| (0..config.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Ok(Self { model, xs, mode })
    }

    fn batch(&self) -> Vec<(&[f64], usize)> {
        vec![(&self.xs[0], 0), (&self.xs[1], self.model.config.n_classes - 1)]
    }

    fn loss(&self) -> Result<f64, CnnError> {
        let mut rng = seed::rng(MASK_SEED, &["mask"]);
        Ok(self.model.batch_gradient(&self.batch(), self.mode, &mut rng)?.0)
    }

    fn routing(&self) -> Result<Vec<Vec<usize>>, CnnError> {
        let mut rng = seed::rng(MASK_SEED, &["mask"]);
        self.xs
            .iter()
            .map(|x| Ok(self.model.forward(x, self.mode, &mut rng)?.routing()))
            .collect()
    }

    fn worst_error(&mut self, h: f64) -> Result<Option<(f64, usize)>, CnnError> {
        let mut rng = seed::rng(MASK_SEED, &["mask"]);
        let (_, _, grads) = self.model.batch_gradient(&self.batch(), self.mode, &mut rng)?;
        let base = self.routing()?;
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for block in 0..N_BLOCKS {
            for i in 0..self.model.params[block].len() {
                let orig = self.model.params[block][i];
                self.model.params[block][i] = orig + h;
                let (up, r_up) = (self.loss()?, self.routing()?);
                self.model.params[block][i] = orig - h;
                let (down, r_down) = (self.loss()?, self.routing()?);
                self.model.params[block][i] = orig;
                if r_up != base || r_down != base {
                    return Ok(None);
                }
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[block][i];
                worst = worst.max((analytic - numeric).abs() / (analytic.abs() + 1e-8));
                checked += 1;
            }
        }
        Ok(Some((worst, checked)))
    }
}

/// Checks every parameter of one random draw. `None` means a perturbation
/// of size `h` crossed a kink, so the draw says nothing either way.
pub fn gradient_check(config: CnnConfig, model_seed: u64, mode: Mode, h: f64) -> Result<Option<GradCheck>, CnnError> {
    Ok(Case::new(config, model_seed, mode)?
        .worst_error(h)?
        .map(|(worst, checked)| GradCheck {
            model_seed,
            worst,
            checked,
        }))
}

/// Checks draws `0..max_draws` until `wanted` of them are smooth.
pub fn smooth_gradient_checks(
    config: CnnConfig,
    mode: Mode,
    wanted: usize,
    max_draws: u64,
    h: f64,
) -> Result<Vec<GradCheck>, CnnError> {
    let mut out = Vec::new();
    for model_seed in 0..max_draws {
        if out.len() == wanted {
            break;
        }
        if let Some(c) = gradient_check(config, model_seed, mode, h)? {
            out.push(c);
        }
    }
    Ok(out)
}
