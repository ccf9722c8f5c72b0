//! Network parameters, forward pass with cache, and exact backward pass.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{CnnConfig, Shapes};
use super::layers::{
    col2im, conv_from_patches, dense_forward, dropout_mask, im2col, maxpool2, maxpool2_backward, relu_backward,
    relu_in_place, softmax, softmax_xent, Mode,
};
use super::tensor::Real;
use super::CnnError;
use crate::classical::argmax;
use crate::seed;

pub const CONV1_W: usize = 0;
pub const CONV1_B: usize = 1;
pub const CONV2_W: usize = 2;
pub const CONV2_B: usize = 3;
pub const DENSE_W: usize = 4;
pub const DENSE_B: usize = 5;
pub const OUT_W: usize = 6;
pub const OUT_B: usize = 7;
pub const N_BLOCKS: usize = 8;

/// Names and shapes of the parameter blocks, in storage order.
pub fn param_shapes(c: &CnnConfig) -> Result<Vec<(&'static str, Vec<usize>)>, CnnError> {
    let s = c.shapes()?;
    let k = c.kernel;
    Ok(vec![
        ("conv1.w", vec![k, k, c.input_c, c.conv1_filters]),
        ("conv1.b", vec![c.conv1_filters]),
        ("conv2.w", vec![k, k, c.conv1_filters, c.conv2_filters]),
        ("conv2.b", vec![c.conv2_filters]),
        ("dense.w", vec![s.flat, c.dense_units]),
        ("dense.b", vec![c.dense_units]),
        ("out.w", vec![c.dense_units, c.n_classes]),
        ("out.b", vec![c.n_classes]),
    ])
}

/// Adaptive-moment accumulators, one per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<T: Real = f32> {
    pub config: CnnConfig,
    pub params: Vec<Vec<T>>,
    pub adam: AdamState<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnPrediction {
    pub class: usize,
    pub probs: Vec<f64>,
}

/// Activations kept from the forward pass for the backward pass.
pub struct Cache<T> {
    patches1: Vec<T>,
    z1: Vec<T>,
    arg1: Vec<usize>,
    mask1: Option<Vec<T>>,
    patches2: Vec<T>,
    z2: Vec<T>,
    arg2: Vec<usize>,
    mask2: Option<Vec<T>>,
    h2: Vec<T>,
    z3: Vec<T>,
    mask3: Option<Vec<T>>,
    h3: Vec<T>,
    pub logits: Vec<T>,
}

impl<T: Real> Cache<T> {
    /// Which units were active and which inputs won each pooling window.
    /// Two forward passes with equal routing lie on the same linear piece.
    pub fn routing(&self) -> Vec<usize> {
        let active = |z: &[T]| z.iter().map(|&v| usize::from(v > T::zero())).collect::<Vec<_>>();
        let mut r = active(&self.z1);
        r.extend(active(&self.z2));
        r.extend(active(&self.z3));
        r.extend(&self.arg1);
        r.extend(&self.arg2);
        r
    }
}

fn apply_mask<T: Real>(x: &mut [T], mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        x.iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
    }
}

fn colsum_into<T: Real>(g: &[T], cols: usize, out: &mut [T]) {
    for row in g.chunks_exact(cols) {
        out.iter_mut().zip(row).for_each(|(o, &v)| *o += v);
    }
}

impl<T: Real> CnnModel<T> {
    /// All-zero parameters.
    pub fn zeros(config: CnnConfig) -> Result<Self, CnnError> {
        let params: Vec<Vec<T>> = param_shapes(&config)?
            .into_iter()
            .map(|(_, s)| vec![T::zero(); s.iter().product()])
            .collect();
        let adam = AdamState {
            step: 0,
            m: params.clone(),
            v: params.clone(),
        };
        Ok(Self { config, params, adam })
    }

    /// Glorot-uniform weights and zero biases.
    pub fn new(config: CnnConfig, seed: u64) -> Result<Self, CnnError> {
        let mut model = Self::zeros(config)?;
        let k2 = config.kernel * config.kernel;
        let mut rng = seed::rng(seed, &["cnn", "init"]);
        for (block, (_, shape)) in param_shapes(&config)?.into_iter().enumerate() {
            let (fan_in, fan_out) = match shape.len() {
                4 => (k2 * shape[2], k2 * shape[3]),
                2 => (shape[0], shape[1]),
                _ => continue,
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut model.params[block] {
                *w = T::of(rng.gen_range(-limit..limit));
            }
        }
        Ok(model)
    }

    pub fn shapes(&self) -> Shapes {
        self.config.shapes().expect("model config validated at construction")
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    pub fn zero_grads(&self) -> Vec<Vec<T>> {
        self.params.iter().map(|p| vec![T::zero(); p.len()]).collect()
    }

    /// Runs the network on one `H x W x C` image. Dropout masks are drawn
    /// from `rng` in train mode.
    pub fn forward(&self, x: &[T], mode: Mode, rng: &mut ChaCha8Rng) -> Result<Cache<T>, CnnError> {
        let c = &self.config;
        if x.len() != c.input_len() {
            return Err(CnnError::Shape(format!(
                "input has {} values, model expects {}x{}x{} = {}",
                x.len(),
                c.input_h,
                c.input_w,
                c.input_c,
                c.input_len()
            )));
        }
        let s = self.shapes();
        let k = c.kernel;
        let p = &self.params;
        let mut mask = |n: usize, rate: f64| match mode {
            Mode::Train if rate > 0.0 => Some(dropout_mask::<T, _>(n, rate, rng)),
            _ => None,
        };

        let patches1 = im2col(x, s.input, k);
        let z1 = conv_from_patches(&patches1, &p[CONV1_W], &p[CONV1_B], s.conv1.0 * s.conv1.1, k * k * s.input.2);
        let mut a1 = z1.clone();
        relu_in_place(&mut a1);
        let (mut h1, arg1) = maxpool2(&a1, s.conv1);
        let mask1 = mask(h1.len(), c.drop1);
        apply_mask(&mut h1, &mask1);

        let patches2 = im2col(&h1, s.pool1, k);
        let z2 = conv_from_patches(&patches2, &p[CONV2_W], &p[CONV2_B], s.conv2.0 * s.conv2.1, k * k * s.pool1.2);
        let mut a2 = z2.clone();
        relu_in_place(&mut a2);
        let (mut h2, arg2) = maxpool2(&a2, s.conv2);
        let mask2 = mask(h2.len(), c.drop2);
        apply_mask(&mut h2, &mask2);

        let z3 = dense_forward(&h2, &p[DENSE_W], &p[DENSE_B])?;
        let mut h3 = z3.clone();
        relu_in_place(&mut h3);
        let mask3 = mask(h3.len(), c.drop3);
        apply_mask(&mut h3, &mask3);

        let logits = dense_forward(&h3, &p[OUT_W], &p[OUT_B])?;
        Ok(Cache {
            patches1,
            z1,
            arg1,
            mask1,
            patches2,
            z2,
            arg2,
            mask2,
            h2,
            z3,
            mask3,
            h3,
            logits,
        })
    }

    /// Adds the gradient of the loss for `dlogits` to `grads`.
    pub fn backward(&self, cache: &Cache<T>, dlogits: &[T], grads: &mut [Vec<T>]) {
        let c = &self.config;
        let s = self.shapes();
        let k = c.kernel;
        let p = &self.params;
        let (units, classes) = (c.dense_units, c.n_classes);

        T::gemm(units, 1, classes, &cache.h3, false, dlogits, false, &mut grads[OUT_W], true);
        grads[OUT_B].iter_mut().zip(dlogits).for_each(|(g, &d)| *g += d);
        let mut d3 = vec![T::zero(); units];
        T::gemm(units, classes, 1, &p[OUT_W], false, dlogits, false, &mut d3, false);
        apply_mask(&mut d3, &cache.mask3);
        relu_backward(&mut d3, &cache.z3);

        T::gemm(s.flat, 1, units, &cache.h2, false, &d3, false, &mut grads[DENSE_W], true);
        grads[DENSE_B].iter_mut().zip(&d3).for_each(|(g, &d)| *g += d);
        let mut dh2 = vec![T::zero(); s.flat];
        T::gemm(s.flat, units, 1, &p[DENSE_W], false, &d3, false, &mut dh2, false);
        apply_mask(&mut dh2, &cache.mask2);

        let (p2, k2, f2) = (s.conv2.0 * s.conv2.1, k * k * s.pool1.2, s.conv2.2);
        let mut dz2 = maxpool2_backward(&dh2, &cache.arg2, cache.z2.len());
        relu_backward(&mut dz2, &cache.z2);
        T::gemm(k2, p2, f2, &cache.patches2, true, &dz2, false, &mut grads[CONV2_W], true);
        colsum_into(&dz2, f2, &mut grads[CONV2_B]);
        let mut dpatches2 = vec![T::zero(); p2 * k2];
        T::gemm(p2, f2, k2, &dz2, false, &p[CONV2_W], true, &mut dpatches2, false);
        let mut dh1 = col2im(&dpatches2, s.pool1, k);
        apply_mask(&mut dh1, &cache.mask1);

        let (p1, k1, f1) = (s.conv1.0 * s.conv1.1, k * k * s.input.2, s.conv1.2);
        let mut dz1 = maxpool2_backward(&dh1, &cache.arg1, cache.z1.len());
        relu_backward(&mut dz1, &cache.z1);
        T::gemm(k1, p1, f1, &cache.patches1, true, &dz1, false, &mut grads[CONV1_W], true);
        colsum_into(&dz1, f1, &mut grads[CONV1_B]);
    }

    /// Mean loss and mean gradient over a batch of `(image, label)` pairs.
    pub fn batch_gradient(
        &self,
        batch: &[(&[T], usize)],
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, usize, Vec<Vec<T>>), CnnError> {
        if batch.is_empty() {
            return Err(CnnError::Empty);
        }
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        let mut correct = 0;
        for &(x, label) in batch {
            let cache = self.forward(x, mode, rng)?;
            let (l, dlogits) = softmax_xent(&cache.logits, label)?;
            loss += l.to_f64().unwrap_or(f64::NAN);
            let logits: Vec<f64> = cache.logits.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            if argmax(&logits) == label {
                correct += 1;
            }
            self.backward(&cache, &dlogits, &mut grads);
        }
        let scale = T::one() / T::of(batch.len() as f64);
        grads.iter_mut().flatten().for_each(|g| *g *= scale);
        Ok((loss / batch.len() as f64, correct, grads))
    }

    /// Eval-mode loss of one sample.
    pub fn loss(&self, x: &[T], label: usize) -> Result<f64, CnnError> {
        let cache = self.forward(x, Mode::Eval, &mut seed::rng(0, &["unused"]))?;
        Ok(softmax_xent(&cache.logits, label)?.0.to_f64().unwrap_or(f64::NAN))
    }

    /// Eval-mode class probabilities; argmax ties go to the lowest class.
    pub fn predict(&self, x: &[T]) -> Result<CnnPrediction, CnnError> {
        let cache = self.forward(x, Mode::Eval, &mut seed::rng(0, &["unused"]))?;
        let probs: Vec<f64> = softmax(&cache.logits).iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(CnnPrediction {
            class: argmax(&probs),
            probs,
        })
    }
}

/// Classifies a `12 x 500` MFCC image (or whatever input the config names).
pub fn cnn_predict(model: &CnnModel<f32>, image: &[f32]) -> Result<CnnPrediction, CnnError> {
    model.predict(image)
}
