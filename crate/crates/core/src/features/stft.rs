use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::FrameParams;

/// One-sided power spectra, `n_frames x n_bins`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub n_frames: usize,
    pub n_bins: usize,
    pub data: Vec<f64>,
}

impl PowerSpectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StftError {
    #[error("input of {len} samples is shorter than one {window}-sample window")]
    TooShort { len: usize, window: usize },
    #[error("invalid frame parameters: {0}")]
    Params(&'static str),
}

/// Symmetric Hamming window.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

pub fn stft_power<S: Copy + Into<f64>>(
    samples: &[S],
    params: &FrameParams,
) -> Result<PowerSpectrogram, StftError> {
    if params.window_len == 0 || params.hop == 0 {
        return Err(StftError::Params("window and hop must be positive"));
    }
    if params.window_len > params.fft_size {
        return Err(StftError::Params("window longer than transform"));
    }
    if params.hop > params.window_len {
        return Err(StftError::Params("hop longer than window"));
    }
    let n_frames = params.n_frames(samples.len());
    if n_frames == 0 {
        return Err(StftError::TooShort {
            len: samples.len(),
            window: params.window_len,
        });
    }

    let window = hamming(params.window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(params.fft_size);
    let n_bins = params.n_bins();
    let mut buf = vec![Complex::new(0.0, 0.0); params.fft_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(n_frames * n_bins);

    for t in 0..n_frames {
        let start = t * params.hop;
        let frame = &samples[start..start + params.window_len];
        for (slot, (&x, w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *slot = Complex::new(x.into() * w, 0.0);
        }
        for slot in &mut buf[params.window_len..] {
            *slot = Complex::new(0.0, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..n_bins].iter().map(|c| c.norm_sqr()));
    }

    Ok(PowerSpectrogram {
        n_frames,
        n_bins,
        data,
    })
}
