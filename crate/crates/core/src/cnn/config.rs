//! Architecture description, shape chain and parameter arithmetic.

use serde::{Deserialize, Serialize};

use super::CnnError;

/// Two valid-conv/pool blocks, one hidden dense layer and a softmax output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub input_h: usize,
    pub input_w: usize,
    pub input_c: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub kernel: usize,
    pub dense_units: usize,
    pub n_classes: usize,
    pub drop1: f64,
    pub drop2: f64,
    pub drop3: f64,
}

pub const PAPER_CLASSES: usize = 14;

impl CnnConfig {
    pub fn paper(n_classes: usize) -> Self {
        Self {
            input_h: 12,
            input_w: 500,
            input_c: 1,
            conv1_filters: 32,
            conv2_filters: 64,
            kernel: 3,
            dense_units: 128,
            n_classes,
            drop1: 0.25,
            drop2: 0.25,
            drop3: 0.5,
        }
    }

    /// Smallest input that still survives both conv/pool blocks with a
    /// multi-column feature map; used for finite-difference checks.
    pub fn tiny() -> Self {
        Self {
            input_h: 10,
            input_w: 14,
            input_c: 1,
            conv1_filters: 2,
            conv2_filters: 2,
            kernel: 3,
            dense_units: 4,
            n_classes: 3,
            drop1: 0.25,
            drop2: 0.25,
            drop3: 0.5,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_h * self.input_w * self.input_c
    }

    pub fn shapes(&self) -> Result<Shapes, CnnError> {
        if self.kernel == 0 || self.conv1_filters == 0 || self.conv2_filters == 0 || self.dense_units == 0 || self.input_c == 0 {
            return Err(CnnError::Config("layer widths and kernel must be positive".into()));
        }
        if self.n_classes < 2 {
            return Err(CnnError::Config(format!("need at least 2 classes, got {}", self.n_classes)));
        }
        for rate in [self.drop1, self.drop2, self.drop3] {
            if !(0.0..1.0).contains(&rate) {
                return Err(CnnError::Rate(rate));
            }
        }
        let conv = |(h, w, _): (usize, usize, usize), f: usize, name: &str| {
            if h < self.kernel || w < self.kernel {
                Err(CnnError::Config(format!("{name} input {h}x{w} smaller than {0}x{0} kernel", self.kernel)))
            } else {
                Ok((h - self.kernel + 1, w - self.kernel + 1, f))
            }
        };
        let pool = |(h, w, c): (usize, usize, usize), name: &str| {
            if h < 2 || w < 2 {
                Err(CnnError::Config(format!("{name} input {h}x{w} cannot be pooled 2x2")))
            } else {
                Ok((h / 2, w / 2, c))
            }
        };
        let input = (self.input_h, self.input_w, self.input_c);
        let conv1 = conv(input, self.conv1_filters, "conv1")?;
        let pool1 = pool(conv1, "pool1")?;
        let conv2 = conv(pool1, self.conv2_filters, "conv2")?;
        let pool2 = pool(conv2, "pool2")?;
        Ok(Shapes {
            input,
            conv1,
            pool1,
            conv2,
            pool2,
            flat: pool2.0 * pool2.1 * pool2.2,
        })
    }
}

/// `(height, width, channels)` after each spatial layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shapes {
    pub input: (usize, usize, usize),
    pub conv1: (usize, usize, usize),
    pub pool1: (usize, usize, usize),
    pub conv2: (usize, usize, usize),
    pub pool2: (usize, usize, usize),
    pub flat: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCount {
    pub name: &'static str,
    pub output: String,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCount {
    pub layers: Vec<LayerCount>,
    pub total: usize,
}

impl ParamCount {
    /// Counts of the layers that own weights, in order.
    pub fn weighted(&self) -> Vec<usize> {
        self.layers.iter().filter(|l| l.params > 0).map(|l| l.params).collect()
    }
}

fn hwc((h, w, c): (usize, usize, usize)) -> String {
    format!("({h},{w},{c})")
}

pub fn count_params(config: &CnnConfig) -> Result<ParamCount, CnnError> {
    let s = config.shapes()?;
    let k2 = config.kernel * config.kernel;
    let conv1 = config.conv1_filters * k2 * config.input_c + config.conv1_filters;
    let conv2 = config.conv2_filters * k2 * config.conv1_filters + config.conv2_filters;
    let dense = s.flat * config.dense_units + config.dense_units;
    let out = config.dense_units * config.n_classes + config.n_classes;
    let layer = |name, output, params| LayerCount { name, output, params };
    let layers = vec![
        layer("conv2d_1", hwc(s.conv1), conv1),
        layer("max_pooling2d_1", hwc(s.pool1), 0),
        layer("dropout_1", hwc(s.pool1), 0),
        layer("conv2d_2", hwc(s.conv2), conv2),
        layer("max_pooling2d_2", hwc(s.pool2), 0),
        layer("dropout_2", hwc(s.pool2), 0),
        layer("flatten", format!("({})", s.flat), 0),
        layer("dense_1", format!("({})", config.dense_units), dense),
        layer("dropout_3", format!("({})", config.dense_units), 0),
        layer("dense_2", format!("({})", config.n_classes), out),
    ];
    let total = layers.iter().map(|l| l.params).sum();
    Ok(ParamCount { layers, total })
}
