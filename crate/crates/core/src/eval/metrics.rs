//! Confusion matrices and per-class precision/recall/F1 reports.

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    /// Row = true class, column = predicted class.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|t| self.get(t, c)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.n_classes).map(|c| self.get(c, c)).sum::<u64>() as f64 / total as f64
    }
}

pub fn confusion(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::Length {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&t, &p) in truth.iter().zip(pred) {
        if let Some(&label) = [t, p].iter().find(|&&l| l >= n_classes) {
            return Err(EvalError::Label { label, n_classes });
        }
        cm.counts[t * n_classes + p] += 1;
    }
    Ok(cm)
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub rows: Vec<ClassRow>,
    /// Unweighted means of the per-class columns; support is the total.
    pub avg: ClassRow,
}

pub const AVG_LABEL: &str = "Avg";

impl ClassReport {
    /// Builds a report from per-class rows, computing the macro row.
    pub fn from_class_rows(rows: Vec<ClassRow>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&ClassRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let avg = ClassRow {
            label: AVG_LABEL.to_string(),
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            f1: mean(|r| r.f1),
            support: rows.iter().map(|r| r.support).sum(),
        };
        Self { rows, avg }
    }

    /// Rows given as `(label, precision, recall, support)`; F1 is derived.
    pub fn from_pr<S: Into<String>>(rows: impl IntoIterator<Item = (S, f64, f64, u64)>) -> Self {
        Self::from_class_rows(
            rows.into_iter()
                .map(|(label, precision, recall, support)| ClassRow {
                    label: label.into(),
                    precision,
                    recall,
                    f1: f1_score(precision, recall),
                    support,
                })
                .collect(),
        )
    }
}

pub fn class_report(cm: &ConfusionMatrix, labels: &[String]) -> Result<ClassReport, EvalError> {
    if labels.len() != cm.n_classes {
        return Err(EvalError::Labels {
            labels: labels.len(),
            n_classes: cm.n_classes,
        });
    }
    let rows = (0..cm.n_classes)
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            ClassRow {
                label: labels[c].clone(),
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect();
    Ok(ClassReport::from_class_rows(rows))
}

pub fn macro_f1(report: &ClassReport) -> f64 {
    report.avg.f1
}

/// Whether a table row's F1 can be the harmonic mean of its precision and
/// recall once every value is known only to `decimals` places.
///
/// F1 increases in both arguments, so the true F1 lies between the values at
/// the low and high corners of the rounding box around `(p, r)`.
pub fn f1_consistent_with_rounding(p: f64, r: f64, f: f64, decimals: i32) -> bool {
    let half = 0.5 * 10f64.powi(-decimals);
    let lo = f1_score((p - half).max(0.0), (r - half).max(0.0));
    let hi = f1_score((p + half).min(1.0), (r + half).min(1.0));
    f + half >= lo - 1e-12 && f - half <= hi + 1e-12
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportCurve {
    pub group: String,
    /// `(support, f1)` in nondecreasing support order.
    pub points: Vec<(u64, f64)>,
}

/// Per-class `(support, F1)` points of each labelled report.
pub fn support_curve(reports: &[(String, ClassReport)]) -> Vec<SupportCurve> {
    reports
        .iter()
        .map(|(group, report)| {
            let mut points: Vec<(u64, f64)> = report.rows.iter().map(|r| (r.support, r.f1)).collect();
            points.sort_by_key(|p| p.0);
            SupportCurve {
                group: group.clone(),
                points,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                assert_eq!(cm.get(t, p), u64::from(t == p));
            }
        }
        assert_eq!(confusion(&[], &[], 2).unwrap().counts, vec![0; 4]);
        assert_eq!(confusion(&[0, 1, 1], &[1, 1, 0], 2).unwrap().counts, vec![0, 1, 1, 1]);
        assert_eq!(confusion(&[0], &[], 2), Err(EvalError::Length { truth: 1, pred: 0 }));
        assert_eq!(confusion(&[0], &[3], 2), Err(EvalError::Label { label: 3, n_classes: 2 }));
    }

    #[test]
    fn report_from_counts() {
        let cm = confusion(&[0, 0, 1, 1, 1], &[0, 1, 1, 1, 0], 3).unwrap();
        let r = class_report(&cm, &labels(3)).unwrap();
        assert_eq!((r.rows[0].precision, r.rows[0].recall), (0.5, 0.5));
        assert!((r.rows[1].precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.rows[1].recall - 2.0 / 3.0).abs() < 1e-12);
        // Absent and never predicted: everything 0.
        assert_eq!((r.rows[2].precision, r.rows[2].recall, r.rows[2].f1, r.rows[2].support), (0.0, 0.0, 0.0, 0));
        assert_eq!(r.avg.support, 5);
        assert!((macro_f1(&r) - (0.5 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!(class_report(&cm, &labels(2)).is_err());
    }

    #[test]
    fn paper_rows() {
        assert!((f1_score(1.0, 0.6) - 0.75).abs() < 1e-12);
        assert_eq!((f1_score(0.94, 1.0) * 100.0).round() / 100.0, 0.97);
        assert!(f1_consistent_with_rounding(1.0, 0.93, 0.97, 2));
        assert!(!f1_consistent_with_rounding(1.0, 0.5, 0.75, 2));
    }

    #[test]
    fn constant_f1_macro() {
        let r = ClassReport::from_pr((0..4).map(|i| (format!("c{i}"), 0.5, 0.5, 3)));
        assert!((macro_f1(&r) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn support_curve_sorted() {
        let r = ClassReport::from_class_rows(vec![ClassRow {
            label: "a".into(),
            precision: 1.0,
            recall: 0.6,
            f1: 0.75,
            support: 5,
        }]);
        assert_eq!(support_curve(&[("x".into(), r)])[0].points, vec![(5, 0.75)]);
        let r = ClassReport::from_pr([("a", 1.0, 1.0, 9), ("b", 0.5, 0.5, 2), ("c", 0.2, 0.2, 4)]);
        let pts = &support_curve(&[("x".into(), r)])[0].points;
        assert!(pts.windows(2).all(|w| w[0].0 <= w[1].0));
    }
}
