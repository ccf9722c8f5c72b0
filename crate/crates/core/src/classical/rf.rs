//! Random forest of Gini-split decision trees.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{argmax, ClassicalError, Classifier, LabeledSet, Prediction};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { counts: Vec<u32> },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes are stored in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(&self, x: &[f64]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the leaf `x` lands in.
    pub fn vote(&self, x: &[f64]) -> usize {
        let counts: Vec<f64> = self.leaf(x).iter().map(|&c| f64::from(c)).collect();
        argmax(&counts)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub dim: usize,
    pub n_classes: usize,
    pub max_features: usize,
    pub seed: u64,
}

/// Gini impurity `1 - Σ p_c²` of a count vector.
pub fn gini(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = f64::from(n);
    1.0 - counts.iter().map(|&c| (f64::from(c) / n).powi(2)).sum::<f64>()
}

struct Grower<'a, R> {
    data: &'a LabeledSet,
    max_features: usize,
    rng: R,
    nodes: Vec<Node>,
}

struct Best {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn counts(&self, rows: &[usize]) -> Vec<u32> {
        let mut counts = vec![0u32; self.data.n_classes];
        rows.iter().for_each(|&i| counts[self.data.labels[i]] += 1);
        counts
    }

    /// Lowest weighted child Gini over midpoints between unique values.
    fn best_on(&self, rows: &mut [usize], feature: usize, total: &[u32]) -> Option<(f64, f64)> {
        let value = |i: usize| self.data.row(i)[feature];
        rows.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let n = rows.len() as f64;
        let mut left = vec![0u32; total.len()];
        let mut best: Option<(f64, f64)> = None;
        for s in 1..rows.len() {
            left[self.data.labels[rows[s - 1]]] += 1;
            let (lo, hi) = (value(rows[s - 1]), value(rows[s]));
            if lo == hi {
                continue;
            }
            let right: Vec<u32> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let w = s as f64 / n;
            let imp = w * gini(&left) + (1.0 - w) * gini(&right);
            if best.map_or(true, |(b, _)| imp < b) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((imp, threshold));
            }
        }
        best
    }

    fn search(&self, rows: &mut [usize], features: &[usize], total: &[u32], parent: f64) -> Option<Best> {
        let mut best: Option<Best> = None;
        for &f in features {
            if let Some((impurity, threshold)) = self.best_on(rows, f, total) {
                if impurity < parent - 1e-12 && best.as_ref().map_or(true, |b| impurity < b.impurity) {
                    best = Some(Best {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize]) -> usize {
        let counts = self.counts(rows);
        let parent = gini(&counts);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: counts.clone() });
        if parent == 0.0 {
            return id;
        }

        let mut features: Vec<usize> = (0..self.data.dim).collect();
        features.shuffle(&mut self.rng);
        let (candidates, rest) = features.split_at(self.max_features.min(self.data.dim));
        // Fall back to the remaining features when the sampled ones cannot
        // improve the node, so trees still grow until pure.
        let best = self
            .search(rows, candidates, &counts, parent)
            .or_else(|| self.search(rows, rest, &counts, parent));
        let Some(best) = best else {
            return id;
        };

        let value = |i: &usize| self.data.row(*i)[best.feature];
        rows.sort_by(|a, b| value(a).total_cmp(&value(b)));
        let split = rows.partition_point(|i| value(i) <= best.threshold);
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }
}

fn fit_tree(data: &LabeledSet, max_features: usize, seed: u64, index: usize) -> Tree {
    let mut rng = seed::rng(seed, &["rf", &index.to_string()]);
    let n = data.len();
    let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut grower = Grower {
        data,
        max_features,
        rng,
        nodes: Vec::new(),
    };
    grower.grow(&mut rows);
    Tree { nodes: grower.nodes }
}

pub fn rf_fit(data: &LabeledSet, params: &RfParams) -> Result<RfModel, ClassicalError> {
    if data.n_classes == 0 {
        return Err(ClassicalError::NoClasses);
    }
    if params.n_trees == 0 {
        return Err(ClassicalError::Param("n_trees must be at least 1".into()));
    }
    let max_features = params
        .max_features
        .unwrap_or_else(|| (data.dim as f64).sqrt().floor() as usize)
        .clamp(1, data.dim.max(1));
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(data, max_features, params.seed, t))
        .collect();
    Ok(RfModel {
        trees,
        dim: data.dim,
        n_classes: data.n_classes,
        max_features,
        seed: params.seed,
    })
}

impl Classifier for RfModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Scores are vote fractions.
    fn predict(&self, x: &[f64]) -> Result<Prediction, ClassicalError> {
        self.check_dim(x)?;
        let mut votes = vec![0.0; self.n_classes];
        for tree in &self.trees {
            votes[tree.vote(x)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        Ok(Prediction::from_scores(votes))
    }
}
