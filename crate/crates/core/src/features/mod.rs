//! Time-frequency analysis and the downstream feature encodings.

pub mod cache;
mod codebook;
mod encode;
mod mel;
mod mfcc;
mod stft;

pub use codebook::{fit_codebook, token_histogram, Codebook, CodebookError, TokenHistogram};
pub use encode::{
    feature_image, image_from_mfcc, raw_image, stats_vector, FeatureError, FeatureVector, ImageNorm,
    STATS_DIM,
};
pub use mel::{hz_to_mel, mel_to_hz, build_mel_filterbank, MelFilterbank};
pub use mfcc::{dct_matrix, mfcc, MfccMatrix, LOG_FLOOR};
pub use stft::{hamming, stft_power, PowerSpectrogram, StftError};

/// Mel bands in the filterbank.
pub const N_MELS: usize = 26;
/// Cepstral coefficients kept per frame (c1..c12).
pub const N_MFCC: usize = 12;
/// Frames per segment: `1 + (SEG_SAMPLES - 400) / 160`.
pub const SEG_FRAMES: usize = 500;
/// Codebook size for the token histogram.
pub const CODEBOOK_SIZE: usize = 64;

/// Framing and transform parameters. The window is always Hamming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameParams {
    pub window_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl Default for FrameParams {
    fn default() -> Self {
        Self {
            window_len: 400,
            hop: 160,
            fft_size: 512,
            sample_rate: crate::corpus::SAMPLE_RATE,
        }
    }
}

impl FrameParams {
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frame count for `n_samples`, or 0 when shorter than one window.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.window_len {
            0
        } else {
            1 + (n_samples - self.window_len) / self.hop
        }
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate) / self.fft_size as f64
    }
}
