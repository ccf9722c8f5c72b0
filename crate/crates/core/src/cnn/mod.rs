//! Convolutional speaker classifier with hand-written backpropagation.
//!
//! Layers: conv 3x3 → ReLU → max-pool 2x2 → dropout, twice; flatten; dense →
//! ReLU → dropout; dense → softmax. Everything is generic over [`Real`] so
//! the same code runs in `f64` for finite-difference checks.

pub mod checkpoint;
mod config;
mod gradcheck;
pub mod layers;
mod model;
mod tensor;
mod train;

pub use config::{count_params, CnnConfig, LayerCount, ParamCount, Shapes, PAPER_CLASSES};
pub use gradcheck::{gradient_check, smooth_gradient_checks, GradCheck};
pub use layers::{conv2d_forward, dense_forward, dropout, maxpool2_forward, softmax, softmax_xent, Mode};
pub use model::{cnn_predict, param_shapes, AdamState, CnnModel, CnnPrediction, N_BLOCKS};
pub use tensor::{Real, Tensor};
pub use train::{train, EpochStats, TrainConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CnnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("dropout rate {0} outside [0, 1)")]
    Rate(f64),
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("no training samples")]
    Empty,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
