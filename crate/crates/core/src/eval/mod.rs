//! Metrics, the cross-dialect protocol and report files.

mod cross;
mod metrics;
pub mod report;

use std::path::PathBuf;

pub use cross::{
    cross_eval, Cell, CellReport, CrossDialectMatrix, CrossEval, Family, FamilyParams, Fit, Protocol, TrainedModel,
};
pub use metrics::{
    class_report, confusion, f1_consistent_with_rounding, f1_score, macro_f1, support_curve, ClassReport, ClassRow,
    ConfusionMatrix, SupportCurve, AVG_LABEL,
};
pub use report::{emit_report, machine_report, parse_machine_report};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{truth} true labels but {pred} predictions")]
    Length { truth: usize, pred: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("{labels} class labels for {n_classes} classes")]
    Labels { labels: usize, n_classes: usize },
    #[error("report line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PartialEq for EvalError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}
