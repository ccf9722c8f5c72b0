//! Binary container for fitted classical models.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "DIDM"  u32 version  u32 family  u32 n_dims  n_dims x u32  values as f32...
//! ```
//!
//! | family | dims                                   | values |
//! |--------|----------------------------------------|--------|
//! | 1 mnb  | `[C, K]`                               | log priors (C), log likelihoods (C x K) |
//! | 2 svm  | `[C, d]`                               | lambda, weights (C x d), biases (C) |
//! | 3 knn  | `[N, d, C, k]`                         | features (N x d), labels (N) |
//! | 4 rf   | `[d, C, max_features, T, n_1..n_T]`    | T trees of `n_t` nodes each |
//!
//! An RF node is `0, counts (C)` for a leaf and `1, feature, threshold, left,
//! right` for a split. Integers stored as f32 are exact below 2^24. Reals are
//! narrowed to f32, so a decoded model equals the original up to f32 rounding.

use std::io;
use std::path::Path;

use super::{KnnModel, LabeledSet, MnbModel, Node, RfModel, SvmModel, Tree};

pub const MAGIC: &[u8; 4] = b"DIDM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Mnb(MnbModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Rf(RfModel),
}

impl SavedModel {
    pub fn family_tag(&self) -> u32 {
        match self {
            Self::Mnb(_) => 1,
            Self::Svm(_) => 2,
            Self::Knn(_) => 3,
            Self::Rf(_) => 4,
        }
    }
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn parts(model: &SavedModel) -> (Vec<usize>, Vec<f64>) {
    match model {
        SavedModel::Mnb(m) => (
            vec![m.log_priors.len(), m.n_tokens],
            m.log_priors.iter().chain(&m.log_likelihoods).copied().collect(),
        ),
        SavedModel::Svm(m) => {
            let mut v = vec![m.lambda];
            v.extend(&m.weights);
            v.extend(&m.biases);
            (vec![m.biases.len(), m.dim], v)
        }
        SavedModel::Knn(m) => {
            let d = &m.data;
            let mut v = d.features.clone();
            v.extend(d.labels.iter().map(|&l| l as f64));
            (vec![d.len(), d.dim, d.n_classes, m.k], v)
        }
        SavedModel::Rf(m) => {
            let mut dims = vec![m.dim, m.n_classes, m.max_features, m.trees.len()];
            dims.extend(m.trees.iter().map(|t| t.nodes.len()));
            let mut v = Vec::new();
            for node in m.trees.iter().flat_map(|t| &t.nodes) {
                match node {
                    Node::Leaf { counts } => {
                        v.push(0.0);
                        v.extend(counts.iter().map(|&c| f64::from(c)));
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => v.extend([1.0, *feature as f64, *threshold, *left as f64, *right as f64]),
                }
            }
            (dims, v)
        }
    }
}

pub fn encode(model: &SavedModel) -> Vec<u8> {
    let (dims, values) = parts(model);
    let mut out = Vec::with_capacity(16 + 4 * (dims.len() + values.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&model.family_tag().to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

struct Values<'a> {
    bytes: &'a [u8],
}

impl Values<'_> {
    fn next(&mut self) -> io::Result<f64> {
        if self.bytes.len() < 4 {
            return Err(bad("truncated model values"));
        }
        let (head, rest) = self.bytes.split_at(4);
        self.bytes = rest;
        Ok(f64::from(f32::from_le_bytes(head.try_into().unwrap())))
    }

    fn take(&mut self, n: usize) -> io::Result<Vec<f64>> {
        (0..n).map(|_| self.next()).collect()
    }

    fn index(&mut self, below: usize) -> io::Result<usize> {
        let v = self.next()?;
        if v < 0.0 || v.fract() != 0.0 || v as usize >= below {
            return Err(bad(format!("index {v} out of range (< {below})")));
        }
        Ok(v as usize)
    }
}

fn read_u32(bytes: &[u8], at: usize) -> io::Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| bad("truncated model header"))
}

pub fn decode(bytes: &[u8]) -> io::Result<SavedModel> {
    if bytes.get(..4) != Some(MAGIC.as_slice()) {
        return Err(bad("not a DIDM model file"));
    }
    let version = read_u32(bytes, 4)?;
    if version != VERSION {
        return Err(bad(format!("unsupported model version {version}")));
    }
    let family = read_u32(bytes, 8)?;
    let n_dims = read_u32(bytes, 12)? as usize;
    let dims: Vec<usize> = (0..n_dims)
        .map(|i| read_u32(bytes, 16 + 4 * i).map(|d| d as usize))
        .collect::<io::Result<_>>()?;
    let mut vals = Values {
        bytes: &bytes[16 + 4 * n_dims..],
    };
    let need = |n: usize| {
        if dims.len() < n {
            Err(bad(format!("family {family} needs {n} dims, got {}", dims.len())))
        } else {
            Ok(())
        }
    };

    let model = match family {
        1 => {
            need(2)?;
            let (c, k) = (dims[0], dims[1]);
            SavedModel::Mnb(MnbModel {
                log_priors: vals.take(c)?,
                log_likelihoods: vals.take(c * k)?,
                n_tokens: k,
            })
        }
        2 => {
            need(2)?;
            let (c, d) = (dims[0], dims[1]);
            let lambda = vals.next()?;
            SavedModel::Svm(SvmModel {
                weights: vals.take(c * d)?,
                biases: vals.take(c)?,
                dim: d,
                lambda,
            })
        }
        3 => {
            need(4)?;
            let (n, d, c, k) = (dims[0], dims[1], dims[2], dims[3]);
            let features = vals.take(n * d)?;
            let labels = (0..n).map(|_| vals.index(c)).collect::<io::Result<_>>()?;
            let data = LabeledSet::new(features, d, labels, c).map_err(|e| bad(e.to_string()))?;
            if k == 0 || k > n {
                return Err(bad(format!("k = {k} out of range for {n} points")));
            }
            SavedModel::Knn(KnnModel { data, k })
        }
        4 => {
            need(4)?;
            let (d, c, max_features, t) = (dims[0], dims[1], dims[2], dims[3]);
            need(4 + t)?;
            let mut trees = Vec::with_capacity(t);
            for &n_nodes in &dims[4..4 + t] {
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    let node = match vals.index(2)? {
                        0 => Node::Leaf {
                            counts: (0..c).map(|_| vals.index(1 << 24).map(|v| v as u32)).collect::<io::Result<_>>()?,
                        },
                        _ => Node::Split {
                            feature: vals.index(d)?,
                            threshold: vals.next()?,
                            left: vals.index(n_nodes)?,
                            right: vals.index(n_nodes)?,
                        },
                    };
                    nodes.push(node);
                }
                trees.push(Tree { nodes });
            }
            SavedModel::Rf(RfModel {
                trees,
                dim: d,
                n_classes: c,
                max_features,
                seed: 0,
            })
        }
        other => return Err(bad(format!("unknown model family {other}"))),
    };
    if !vals.bytes.is_empty() {
        return Err(bad(format!("{} trailing bytes after model values", vals.bytes.len())));
    }
    Ok(model)
}

pub fn write(path: &Path, model: &SavedModel) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, encode(model))
}

pub fn read(path: &Path) -> io::Result<SavedModel> {
    decode(&std::fs::read(path)?)
}
