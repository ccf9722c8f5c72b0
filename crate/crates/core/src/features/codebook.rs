//! Vector quantisation of MFCC frames.
//!
//! A k-means codebook maps each frame to a discrete token so that a segment
//! becomes a bag of token counts, the input naive Bayes expects.

use rand::seq::SliceRandom;

use super::MfccMatrix;
use crate::seed;

const MAX_ITERS: usize = 100;
const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub k: usize,
    pub dim: usize,
    /// `k x dim`, row-major.
    pub centroids: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodebookError {
    #[error("need at least {k} frames to fit {k} centroids, got {n}")]
    TooFewFrames { n: usize, k: usize },
    #[error("only {distinct} distinct frames available for {k} centroids")]
    TooFewDistinct { distinct: usize, k: usize },
    #[error("codebook size must be at least 2")]
    TooSmall,
    #[error("frame data length {len} is not a multiple of dimension {dim}")]
    Ragged { len: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenHistogram {
    pub counts: Vec<u32>,
}

impl TokenHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Codebook {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..self.k {
            let d = sq_dist(x, self.centroid(j));
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        best
    }

    /// Sum of squared distances from each point to its nearest centroid.
    pub fn cost(&self, points: &[f64]) -> f64 {
        points
            .chunks_exact(self.dim)
            .map(|p| sq_dist(p, self.centroid(self.nearest(p))))
            .sum()
    }
}

/// Lloyd's algorithm from `k` seeded distinct starting frames.
///
/// `frames` is `N x dim`, row-major.
pub fn fit_codebook(frames: &[f64], dim: usize, k: usize, seed: u64) -> Result<Codebook, CodebookError> {
    if k < 2 {
        return Err(CodebookError::TooSmall);
    }
    if dim == 0 || frames.len() % dim != 0 {
        return Err(CodebookError::Ragged {
            len: frames.len(),
            dim,
        });
    }
    let n = frames.len() / dim;
    if n < k {
        return Err(CodebookError::TooFewFrames { n, k });
    }
    let point = |i: usize| &frames[i * dim..(i + 1) * dim];

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed, &["codebook"]));
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    let mut picked = 0;
    for &i in &order {
        let p = point(i);
        if centroids.chunks_exact(dim).any(|c| c == p) {
            continue;
        }
        centroids.extend_from_slice(p);
        picked += 1;
        if picked == k {
            break;
        }
    }
    if picked < k {
        return Err(CodebookError::TooFewDistinct { distinct: picked, k });
    }

    let mut cb = Codebook { k, dim, centroids };
    let mut assign = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        for (i, a) in assign.iter_mut().enumerate() {
            *a = cb.nearest(point(i));
        }

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(point(i)) {
                *s += v;
            }
        }

        let mut next = sums;
        for j in 0..k {
            if counts[j] > 0 {
                let c = counts[j] as f64;
                next[j * dim..(j + 1) * dim].iter_mut().for_each(|v| *v /= c);
            } else {
                // Reseed an empty cluster at the point worst served by its
                // current centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(point(a), cb.centroid(assign[a]));
                        let db = sq_dist(point(b), cb.centroid(assign[b]));
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                next[j * dim..(j + 1) * dim].copy_from_slice(point(far));
            }
        }

        let shift = (0..k)
            .map(|j| sq_dist(&next[j * dim..(j + 1) * dim], cb.centroid(j)).sqrt())
            .fold(0.0, f64::max);
        cb.centroids = next;
        if shift < TOLERANCE {
            break;
        }
    }
    Ok(cb)
}

pub fn token_histogram(m: &MfccMatrix, cb: &Codebook) -> TokenHistogram {
    let mut counts = vec![0u32; cb.k];
    for frame in m.frames() {
        counts[cb.nearest(frame)] += 1;
    }
    TokenHistogram { counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::N_MFCC;

    #[test]
    fn k_points_k_clusters() {
        let pts = [0.0, 0.0, 5.0, 1.0, -3.0, 2.0, 7.0, 7.0];
        let cb = fit_codebook(&pts, 2, 4, 11).unwrap();
        let mut got: Vec<&[f64]> = (0..4).map(|j| cb.centroid(j)).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, vec![&[-3.0, 2.0][..], &[0.0, 0.0], &[5.0, 1.0], &[7.0, 7.0]]);
        assert_eq!(cb.cost(&pts), 0.0);
    }

    #[test]
    fn separated_clouds_recover_their_means() {
        // Two tight clouds around (0, 0) and (100, 100); the oracle is the
        // closed-form mean of each cloud.
        let mut pts = Vec::new();
        let offsets = [(-0.3, 0.1), (0.2, -0.2), (0.1, 0.4), (-0.1, -0.2), (0.4, 0.0)];
        for &(cx, cy) in &[(0.0, 0.0), (100.0, 100.0)] {
            for &(dx, dy) in &offsets {
                pts.extend_from_slice(&[cx + dx, cy + dy]);
            }
        }
        let mean = |c: usize| {
            let xs: Vec<&[f64]> = pts.chunks(2).skip(c * 5).take(5).collect();
            [
                xs.iter().map(|p| p[0]).sum::<f64>() / 5.0,
                xs.iter().map(|p| p[1]).sum::<f64>() / 5.0,
            ]
        };
        for seed in 0..5 {
            let cb = fit_codebook(&pts, 2, 2, seed).unwrap();
            let (lo, hi) = if cb.centroid(0)[0] < cb.centroid(1)[0] { (0, 1) } else { (1, 0) };
            for (j, c) in [(lo, 0), (hi, 1)] {
                for (a, b) in cb.centroid(j).iter().zip(mean(c)) {
                    assert!((a - b).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let pts: Vec<f64> = (0..600).map(|i| ((i * 37 % 97) as f64).sin()).collect();
        let a = fit_codebook(&pts, 3, 8, 5).unwrap();
        let b = fit_codebook(&pts, 3, 8, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        assert_eq!(
            fit_codebook(&[0.0; 6], 2, 4, 0),
            Err(CodebookError::TooFewFrames { n: 3, k: 4 })
        );
        assert_eq!(
            fit_codebook(&[1.0; 8], 2, 2, 0),
            Err(CodebookError::TooFewDistinct { distinct: 1, k: 2 })
        );
    }

    fn frames(n: usize, value: &[f64]) -> MfccMatrix {
        MfccMatrix {
            n_frames: n,
            coeffs: value.iter().copied().cycle().take(n * N_MFCC).collect(),
        }
    }

    fn grid_codebook(k: usize) -> Codebook {
        let mut centroids = vec![0.0; k * N_MFCC];
        for j in 0..k {
            centroids[j * N_MFCC] = j as f64;
        }
        Codebook {
            k,
            dim: N_MFCC,
            centroids,
        }
    }

    #[test]
    fn point_mass_histogram() {
        let cb = grid_codebook(8);
        let h = token_histogram(&frames(500, cb.centroid(3)), &cb);
        assert_eq!(h.counts[3], 500);
        assert_eq!(h.total(), 500);
    }

    #[test]
    fn ties_go_low() {
        let mut cb = grid_codebook(8);
        for j in 0..8 {
            cb.centroids[j * N_MFCC] = 10.0 + j as f64;
        }
        // Centroids 2 and 5 placed symmetrically around the query.
        cb.centroids[2 * N_MFCC] = -1.0;
        cb.centroids[5 * N_MFCC] = 1.0;
        let h = token_histogram(&frames(1, &[0.0; N_MFCC]), &cb);
        assert_eq!(h.counts[2], 1);
    }

    #[test]
    fn conserves_frames() {
        let pts: Vec<f64> = (0..(300 * N_MFCC)).map(|i| ((i * 13 % 29) as f64).cos()).collect();
        let cb = fit_codebook(&pts, N_MFCC, 16, 1).unwrap();
        let m = MfccMatrix {
            n_frames: 300,
            coeffs: pts,
        };
        assert_eq!(token_histogram(&m, &cb).total(), 300);
    }
}
