//! k-nearest neighbours with cosine-weighted votes.

use super::{ClassicalError, Classifier, LabeledSet, Prediction};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub data: LabeledSet,
    pub k: usize,
}

pub fn euclidean(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine(x: &[f64], y: &[f64]) -> Option<f64> {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Some(dot / (nx * ny))
}

pub fn knn_fit(data: &LabeledSet, k: usize) -> Result<KnnModel, ClassicalError> {
    if data.n_classes == 0 {
        return Err(ClassicalError::NoClasses);
    }
    if k == 0 || k > data.len() {
        return Err(ClassicalError::Param(format!("k = {k} must be in 1..={}", data.len())));
    }
    Ok(KnnModel { data: data.clone(), k })
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, closest first.
    pub fn neighbours(&self, y: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = (0..self.data.len()).map(|i| (euclidean(self.data.row(i), y), i)).collect();
        // Stable sort keeps lower training indices first among equal distances.
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        dist.into_iter().take(self.k).map(|(_, i)| i).collect()
    }
}

impl Classifier for KnnModel {
    fn dim(&self) -> usize {
        self.data.dim
    }

    fn n_classes(&self) -> usize {
        self.data.n_classes
    }

    fn predict(&self, y: &[f64]) -> Result<Prediction, ClassicalError> {
        self.check_dim(y)?;
        let mut scores = vec![0.0; self.n_classes()];
        for i in self.neighbours(y) {
            let w = cosine(self.data.row(i), y).unwrap_or(0.0).max(0.0);
            scores[self.data.labels[i]] += w;
        }
        Ok(Prediction::from_scores(scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_four_five() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert_eq!(euclidean(&[3.0, 4.0], &[0.0, 0.0]), 5.0);
    }

    #[test]
    fn identity_neighbour() {
        let data = LabeledSet::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]], vec![2, 0, 1], 3).unwrap();
        let m = knn_fit(&data, 1).unwrap();
        for i in 0..3 {
            assert_eq!(m.predict(data.row(i)).unwrap().class, data.labels[i]);
        }
    }

    #[test]
    fn hand_enumerated_five_points() {
        // Query (1, 1). Distances: p0 (1,2)=1, p1 (2,0)=√2, p2 (-1,1)=2,
        // p3 (3,3)=2√2, p4 (1,-1)=2. k = 3 takes p0, p1 and p2 (p2 beats p4 on index).
        // Cosines: p0 3/√10 ≈ 0.949 (A), p1 1/√2 ≈ 0.707 (B), p2 0 (B).
        let data = LabeledSet::from_rows(&[[1.0, 2.0], [2.0, 0.0], [-1.0, 1.0], [3.0, 3.0], [1.0, -1.0]], vec![0, 1, 1, 1, 0], 2).unwrap();
        let m = knn_fit(&data, 3).unwrap();
        assert_eq!(m.neighbours(&[1.0, 1.0]), vec![0, 1, 2]);
        let p = m.predict(&[1.0, 1.0]).unwrap();
        assert_eq!(p.class, 0);
        assert!((p.scores[0] - 3.0 / 10f64.sqrt()).abs() < 1e-12);
        assert!((p.scores[1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_weighs_nothing() {
        let data = LabeledSet::from_rows(&[[0.0, 0.0], [1.0, 0.0]], vec![0, 1], 2).unwrap();
        let m = knn_fit(&data, 2).unwrap();
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p.scores, vec![0.0, 0.0]);
        assert_eq!(p.class, 0);
        assert_eq!(m.predict(&[2.0, 0.0]).unwrap().scores, vec![0.0, 1.0]);
    }

    #[test]
    fn k_out_of_range() {
        let data = LabeledSet::from_rows(&[[0.0], [1.0]], vec![0, 1], 2).unwrap();
        assert!(knn_fit(&data, 0).is_err());
        assert!(knn_fit(&data, 3).is_err());
    }

    /// Exhaustive oracle written independently: every point is compared
    /// against every other to rank it.
    fn oracle(rows: &[Vec<f64>], labels: &[usize], c: usize, k: usize, y: &[f64]) -> usize {
        let d: Vec<f64> = rows.iter().map(|r| euclidean(r, y)).collect();
        let mut votes = vec![0.0; c];
        for i in 0..rows.len() {
            let rank = (0..rows.len()).filter(|&j| d[j] < d[i] || (d[j] == d[i] && j < i)).count();
            if rank < k {
                votes[labels[i]] += cosine(&rows[i], y).map_or(0.0, |s| s.max(0.0));
            }
        }
        let mut best = 0;
        for j in 1..c {
            if votes[j] > votes[best] {
                best = j;
            }
        }
        best
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, usize, usize, Vec<f64>)> {
        (1usize..=200, 1usize..=4, 2usize..=5).prop_flat_map(|(n, d, c)| {
            (
                prop::collection::vec(prop::collection::vec(-3i32..=3, d), n),
                prop::collection::vec(0..c, n),
                Just(c),
                1..=n.min(9),
                prop::collection::vec(-3i32..=3, d),
            )
                .prop_map(|(rows, labels, c, k, y)| {
                    // Small integer grids make distance ties common.
                    let f = |v: Vec<i32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
                    (rows.into_iter().map(f).collect(), labels, c, k, f(y))
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn matches_brute_force((rows, labels, c, k, y) in instance()) {
            let data = LabeledSet::from_rows(&rows, labels.clone(), c).unwrap();
            let m = knn_fit(&data, k).unwrap();
            prop_assert_eq!(m.predict(&y).unwrap().class, oracle(&rows, &labels, c, k, &y));
        }

        #[test]
        fn distance_is_symmetric(p in prop::collection::vec(-1e3f64..1e3, 1..8), q in prop::collection::vec(-1e3f64..1e3, 1..8)) {
            let n = p.len().min(q.len());
            prop_assert_eq!(euclidean(&p[..n], &q[..n]), euclidean(&q[..n], &p[..n]));
            prop_assert_eq!(euclidean(&p, &p), 0.0);
        }
    }
}
