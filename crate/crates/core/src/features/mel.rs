use super::FrameParams;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters, `n_mels x n_bins`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub n_mels: usize,
    pub n_bins: usize,
    pub weights: Vec<f64>,
    /// `n_mels + 2` corner frequencies in Hz.
    pub corners_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn filter(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    /// Applies the bank to one power frame.
    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate().take(self.n_mels) {
            *o = self.filter(m).iter().zip(power).map(|(w, p)| w * p).sum();
        }
    }
}

/// Filters with corners equally spaced on the mel scale from 0 Hz to
/// Nyquist, evaluated at the exact bin frequencies.
pub fn build_mel_filterbank(params: &FrameParams, n_mels: usize) -> MelFilterbank {
    assert!(n_mels >= 2, "a mel filterbank needs at least two filters");
    let n_bins = params.n_bins();
    let top = hz_to_mel(f64::from(params.sample_rate) / 2.0);
    let corners_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut weights = vec![0.0; n_mels * n_bins];
    for m in 0..n_mels {
        let (lo, mid, hi) = (corners_hz[m], corners_hz[m + 1], corners_hz[m + 2]);
        for k in 0..n_bins {
            let f = params.bin_hz(k);
            let w = if f > lo && f <= mid {
                (f - lo) / (mid - lo)
            } else if f > mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            weights[m * n_bins + k] = w;
        }
    }
    MelFilterbank {
        n_mels,
        n_bins,
        weights,
        corners_hz,
    }
}
