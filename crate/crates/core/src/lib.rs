//! Cross-dialect speaker identification toolkit.
//!
//! The crate is organised along the processing pipeline:
//!
//! * [`corpus`]: manifests, WAV ingestion, fixed-length segmentation and a
//!   deterministic synthetic-speaker generator.
//! * [`features`]: short-time power spectra, mel filterbank, MFCCs and the
//!   three downstream encodings (CNN image, statistics vector, token histogram).
//! * [`classical`]: multinomial naive Bayes, linear SVM, KNN and random forest.
//! * [`cnn`]: a small convolutional network with hand-written forward and
//!   backward passes.
//! * [`eval`]: confusion matrices, per-class reports and the cross-dialect
//!   train/test protocol.

pub mod classical;
pub mod cnn;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod seed;

pub use corpus::{Dialect, Split};
