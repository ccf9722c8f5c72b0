//! Layer kernels. Images are `H x W x C` row-major (channels last).
//!
//! Convolution filters use the `(kh, kw, c_in, c_out)` layout, so a filter
//! bank is directly the `K x c_out` right operand of an im2col product with
//! `K = kh·kw·c_in`. Dense weights are `in x out`.

use rand::Rng;

use super::tensor::{Real, Tensor};
use super::CnnError;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Unrolls every `k x k` window into one row of a `P x (k·k·c)` matrix.
pub fn im2col<T: Real>(x: &[T], (h, w, c): (usize, usize, usize), k: usize) -> Vec<T> {
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let row = k * k * c;
    let mut out = Vec::with_capacity(oh * ow * row);
    for i in 0..oh {
        for j in 0..ow {
            for di in 0..k {
                let start = ((i + di) * w + j) * c;
                out.extend_from_slice(&x[start..start + k * c]);
            }
        }
    }
    out
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the image.
pub fn col2im<T: Real>(cols: &[T], (h, w, c): (usize, usize, usize), k: usize) -> Vec<T> {
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let row = k * k * c;
    let mut dx = vec![T::zero(); h * w * c];
    for i in 0..oh {
        for j in 0..ow {
            let patch = &cols[(i * ow + j) * row..(i * ow + j + 1) * row];
            for di in 0..k {
                let start = ((i + di) * w + j) * c;
                for (d, &g) in dx[start..start + k * c].iter_mut().zip(&patch[di * k * c..(di + 1) * k * c]) {
                    *d += g;
                }
            }
        }
    }
    dx
}

/// `patches (P x K) · filters (K x c_out) + bias`.
pub(crate) fn conv_from_patches<T: Real>(patches: &[T], filters: &[T], bias: &[T], p: usize, kk: usize) -> Vec<T> {
    let cout = bias.len();
    let mut out: Vec<T> = bias.iter().copied().cycle().take(p * cout).collect();
    T::gemm(p, kk, cout, patches, false, filters, false, &mut out, true);
    out
}

/// Valid, stride-1 cross-correlation of `x (H x W x C_in)` with
/// `filters (k x k x C_in x C_out)`.
pub fn conv2d_forward<T: Real>(x: &Tensor<T>, filters: &Tensor<T>, bias: &[T]) -> Result<Tensor<T>, CnnError> {
    let &[h, w, c] = x.shape.as_slice() else {
        return Err(CnnError::Shape(format!("conv input must be HxWxC, got {:?}", x.shape)));
    };
    let &[kh, kw, fc, cout] = filters.shape.as_slice() else {
        return Err(CnnError::Shape(format!("filters must be k x k x C_in x C_out, got {:?}", filters.shape)));
    };
    if kh != kw || fc != c || bias.len() != cout {
        return Err(CnnError::Shape(format!(
            "filters {:?} and {} biases do not fit input {:?}",
            filters.shape,
            bias.len(),
            x.shape
        )));
    }
    if h < kh || w < kw {
        return Err(CnnError::Shape(format!("input {h}x{w} smaller than {kh}x{kw} kernel")));
    }
    let (oh, ow) = (h + 1 - kh, w + 1 - kw);
    let patches = im2col(&x.data, (h, w, c), kh);
    let out = conv_from_patches(&patches, &filters.data, bias, oh * ow, kh * kw * c);
    Tensor::new(vec![oh, ow, cout], out)
}

pub(crate) fn maxpool2<T: Real>(x: &[T], (h, w, c): (usize, usize, usize)) -> (Vec<T>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    for i in 0..oh {
        for j in 0..ow {
            for ch in 0..c {
                let mut best = ((2 * i) * w + 2 * j) * c + ch;
                for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                    let at = ((2 * i + di) * w + 2 * j + dj) * c + ch;
                    if x[at] > x[best] {
                        best = at;
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

/// Non-overlapping 2x2 max pooling with floor semantics. Also returns, for
/// each output, the flat input index that produced it.
pub fn maxpool2_forward<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), CnnError> {
    let &[h, w, c] = x.shape.as_slice() else {
        return Err(CnnError::Shape(format!("pool input must be HxWxC, got {:?}", x.shape)));
    };
    if h < 2 || w < 2 {
        return Err(CnnError::Shape(format!("pool input {h}x{w} too small")));
    }
    let (out, arg) = maxpool2(&x.data, (h, w, c));
    Ok((Tensor::new(vec![h / 2, w / 2, c], out)?, arg))
}

/// Routes pooled gradients back to the argmax positions.
pub fn maxpool2_backward<T: Real>(grad: &[T], arg: &[usize], input_len: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); input_len];
    for (&g, &i) in grad.iter().zip(arg) {
        dx[i] += g;
    }
    dx
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else `1/(1-rate)`.
pub fn dropout_mask<T: Real, R: Rng>(n: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - rate));
    (0..n)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

pub fn dropout<T: Real>(x: &Tensor<T>, rate: f64, mode: Mode, seed: u64) -> Result<Tensor<T>, CnnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(CnnError::Rate(rate));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask: Vec<T> = dropout_mask(x.len(), rate, &mut seed::rng(seed, &["dropout"]));
    let data = x.data.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Tensor::new(x.shape.clone(), data)
}

/// `x · W + b` with `W` stored `in x out`.
pub fn dense_forward<T: Real>(x: &[T], w: &[T], b: &[T]) -> Result<Vec<T>, CnnError> {
    let out = b.len();
    if out == 0 || w.len() != x.len() * out {
        return Err(CnnError::Shape(format!(
            "dense weights of length {} do not fit {} inputs and {} outputs",
            w.len(),
            x.len(),
            out
        )));
    }
    let mut y = b.to_vec();
    T::gemm(1, x.len(), out, x, false, w, false, &mut y, true);
    Ok(y)
}

pub fn relu_in_place<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| {
        if *v < T::zero() {
            *v = T::zero()
        }
    });
}

/// Zeroes gradient entries whose pre-activation was not positive.
pub fn relu_backward<T: Real>(grad: &mut [T], pre: &[T]) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if z <= T::zero() {
            *g = T::zero();
        }
    }
}

pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy loss of `label` and its gradient `softmax - onehot`.
pub fn softmax_xent<T: Real>(logits: &[T], label: usize) -> Result<(T, Vec<T>), CnnError> {
    if label >= logits.len() {
        return Err(CnnError::Label {
            label,
            n_classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
    let mut grad = softmax(logits);
    grad[label] -= T::one();
    Ok((lse - logits[label], grad))
}
