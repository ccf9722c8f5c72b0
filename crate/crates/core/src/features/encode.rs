use super::{
    mfcc, stft_power, FrameParams, MelFilterbank, MfccMatrix, StftError, N_MFCC, SEG_FRAMES,
};
use crate::corpus::{Segment, SEG_SAMPLES};

/// Length of the statistics vector: 12 means followed by 12 standard deviations.
pub const STATS_DIM: usize = 2 * N_MFCC;

const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("segment has {0} samples, expected {SEG_SAMPLES}")]
    SegmentLength(usize),
    #[error("statistics need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error(transparent)]
    Stft(#[from] StftError),
}

/// Per-segment MFCC statistics consumed by the SVM, KNN and random forest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn means(&self) -> &[f64] {
        &self.values[..N_MFCC]
    }

    pub fn stds(&self) -> &[f64] {
        &self.values[N_MFCC..]
    }
}

pub fn stats_vector(m: &MfccMatrix) -> Result<FeatureVector, FeatureError> {
    if m.n_frames < 2 {
        return Err(FeatureError::TooFewFrames(m.n_frames));
    }
    let n = m.n_frames as f64;
    let mut mean = [0.0; N_MFCC];
    for frame in m.frames() {
        for (acc, v) in mean.iter_mut().zip(frame) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = [0.0; N_MFCC];
    for frame in m.frames() {
        for ((acc, v), mu) in var.iter_mut().zip(frame).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let mut values = mean.to_vec();
    values.extend(var.iter().map(|v| (v / n).sqrt()));
    Ok(FeatureVector { values })
}

/// Per-coefficient standardisation statistics for CNN images.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageNorm {
    pub mean: [f64; N_MFCC],
    pub std: [f64; N_MFCC],
}

impl ImageNorm {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; N_MFCC],
            std: [1.0; N_MFCC],
        }
    }

    /// Fits over every frame of every raw image (each `12 x T`, row-major).
    pub fn fit<'a>(images: impl IntoIterator<Item = &'a [f32]>) -> Self {
        let mut sum = [0.0f64; N_MFCC];
        let mut sum_sq = [0.0f64; N_MFCC];
        let mut count = 0usize;
        let images: Vec<&[f32]> = images.into_iter().collect();
        for img in &images {
            let width = img.len() / N_MFCC;
            count += width;
            for (i, row) in img.chunks_exact(width).enumerate() {
                sum[i] += row.iter().map(|&v| f64::from(v)).sum::<f64>();
            }
        }
        if count == 0 {
            return Self::identity();
        }
        let mut mean = [0.0; N_MFCC];
        for (m, s) in mean.iter_mut().zip(&sum) {
            *m = s / count as f64;
        }
        for img in &images {
            let width = img.len() / N_MFCC;
            for (i, row) in img.chunks_exact(width).enumerate() {
                sum_sq[i] += row
                    .iter()
                    .map(|&v| (f64::from(v) - mean[i]).powi(2))
                    .sum::<f64>();
            }
        }
        let mut std = [0.0; N_MFCC];
        for (s, sq) in std.iter_mut().zip(&sum_sq) {
            *s = (sq / count as f64).sqrt().max(STD_FLOOR);
        }
        Self { mean, std }
    }

    pub fn apply(&self, raw: &[f32]) -> Vec<f32> {
        let width = raw.len() / N_MFCC;
        raw.chunks_exact(width)
            .enumerate()
            .flat_map(|(i, row)| {
                let (mu, sigma) = (self.mean[i], self.std[i].max(STD_FLOOR));
                row.iter().map(move |&v| ((f64::from(v) - mu) / sigma) as f32)
            })
            .collect()
    }
}

/// Unnormalised image: the MFCC matrix transposed to `12 x T`.
pub fn raw_image(m: &MfccMatrix) -> Vec<f32> {
    let mut img = vec![0.0f32; N_MFCC * m.n_frames];
    for (t, frame) in m.frames().enumerate() {
        for (i, &c) in frame.iter().enumerate() {
            img[i * m.n_frames + t] = c as f32;
        }
    }
    img
}

pub fn image_from_mfcc(m: &MfccMatrix, norm: &ImageNorm) -> Vec<f32> {
    norm.apply(&raw_image(m))
}

/// Standardised `12 x 500` image of one segment.
pub fn feature_image(
    seg: &Segment,
    params: &FrameParams,
    fb: &MelFilterbank,
    norm: &ImageNorm,
) -> Result<Vec<f32>, FeatureError> {
    if seg.samples.len() != SEG_SAMPLES {
        return Err(FeatureError::SegmentLength(seg.samples.len()));
    }
    let m = mfcc(&stft_power(&seg.samples, params)?, fb);
    debug_assert_eq!(m.n_frames, SEG_FRAMES);
    Ok(image_from_mfcc(&m, norm))
}
