use std::f64::consts::PI;

use super::{MelFilterbank, PowerSpectrogram, N_MFCC};

/// Floor added to mel energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// Cepstral coefficients c1..c12, `n_frames x 12`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub n_frames: usize,
    pub coeffs: Vec<f64>,
}

impl MfccMatrix {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.coeffs[t * N_MFCC..(t + 1) * N_MFCC]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.coeffs.chunks_exact(N_MFCC)
    }
}

/// Orthonormal DCT-II basis, `n x n` row-major: row `k` is coefficient `k`.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for i in 0..n {
            d[k * n + i] = scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos();
        }
    }
    d
}

pub fn mfcc(spec: &PowerSpectrogram, fb: &MelFilterbank) -> MfccMatrix {
    assert_eq!(spec.n_bins, fb.n_bins, "spectrogram and filterbank disagree on bins");
    let n_mels = fb.n_mels;
    let dct = dct_matrix(n_mels);
    let mut energies = vec![0.0; n_mels];
    let mut coeffs = Vec::with_capacity(spec.n_frames * N_MFCC);
    for t in 0..spec.n_frames {
        fb.apply(spec.frame(t), &mut energies);
        for e in &mut energies {
            *e = (*e + LOG_FLOOR).ln();
        }
        // c0 is dropped.
        for k in 1..=N_MFCC {
            let row = &dct[k * n_mels..(k + 1) * n_mels];
            coeffs.push(row.iter().zip(&energies).map(|(d, e)| d * e).sum());
        }
    }
    MfccMatrix {
        n_frames: spec.n_frames,
        coeffs,
    }
}
