//! Report files: one machine-readable table per cell, one grid per family,
//! and a human-readable summary.
//!
//! Machine tables keep full precision (shortest round-trip decimal form), so
//! parsing one back yields the exact values that were written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::cross::{Cell, CrossDialectMatrix, CrossEval};
use super::metrics::{ClassReport, ClassRow, AVG_LABEL};
use super::EvalError;

pub const REPORT_HEADER: &str = "speaker,precision,recall,f1,support";

pub fn cell_file_name(cell: &Cell) -> String {
    format!("{}_train-{}_test-{}.csv", cell.family, cell.train.as_str().to_lowercase(), cell.test.as_str().to_lowercase())
}

pub fn machine_report(report: &ClassReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in report.rows.iter().chain([&report.avg]) {
        let _ = writeln!(out, "{},{},{},{},{}", r.label, r.precision, r.recall, r.f1, r.support);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> EvalError {
    EvalError::Parse { line, msg: msg.into() }
}

/// Parses a table written by [`machine_report`].
pub fn parse_machine_report(text: &str) -> Result<ClassReport, EvalError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header {REPORT_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let &[label, p, r, f, s] = fields.as_slice() else {
            return Err(parse_err(i + 1, format!("expected 5 fields, got {}", fields.len())));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| parse_err(i + 1, format!("{v:?}: {e}")));
        rows.push(ClassRow {
            label: label.to_string(),
            precision: num(p)?,
            recall: num(r)?,
            f1: num(f)?,
            support: s.trim().parse().map_err(|e| parse_err(i + 1, format!("{s:?}: {e}")))?,
        });
    }
    let avg = match rows.pop() {
        Some(a) if a.label == AVG_LABEL => a,
        _ => return Err(parse_err(0, "missing final Avg row")),
    };
    Ok(ClassReport { rows, avg })
}

fn grid_csv(m: &CrossDialectMatrix) -> String {
    let mut out = String::from("train");
    m.test.iter().for_each(|d| {
        let _ = write!(out, ",{d}");
    });
    out.push('\n');
    for (tr, row) in m.train.iter().zip(&m.grid) {
        out.push_str(tr.as_str());
        for v in row {
            match v {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn human_table(out: &mut String, report: &ClassReport, avg_label: &str) {
    let width = report
        .rows
        .iter()
        .map(|r| r.label.len())
        .chain([avg_label.len(), "Speaker".len()])
        .max()
        .unwrap_or(7);
    let _ = writeln!(out, "{:<width$}  Precision  Recall  F1-Score  Support", "Speaker");
    let mut line = |label: &str, r: &ClassRow| {
        let _ = writeln!(
            out,
            "{label:<width$}  {:>9.2}  {:>6.2}  {:>8.2}  {:>7}",
            r.precision, r.recall, r.f1, r.support
        );
    };
    for r in &report.rows {
        line(&r.label, r);
    }
    line(avg_label, &report.avg);
}

/// Plain-text summary: grids at two decimals, then every cell's table.
pub fn summary_text(eval: &CrossEval) -> String {
    let mut out = String::from("Cross-dialect speaker identification\n");
    let _ = writeln!(out, "speakers: {}", eval.speakers.len());
    for m in &eval.matrices {
        let _ = writeln!(out, "\n== {} macro-F1 (rows: trained on, columns: tested on) ==", m.family);
        let _ = write!(out, "{:<10}", "");
        m.test.iter().for_each(|d| {
            let _ = write!(out, "{:>10}", d.as_str());
        });
        out.push('\n');
        for (tr, row) in m.train.iter().zip(&m.grid) {
            let _ = write!(out, "{:<10}", tr.as_str());
            for v in row {
                match v {
                    Some(v) => {
                        let _ = write!(out, "{v:>10.2}");
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "n/a");
                    }
                }
            }
            out.push('\n');
        }
    }
    for fit in &eval.fits {
        if let (Some(last), Ok(_)) = (fit.trace.last(), &fit.outcome) {
            let _ = writeln!(
                out,
                "\n{} trained on {} ({} segments, {} epochs): final loss {:.4}, training accuracy {:.2}",
                fit.family,
                fit.train,
                fit.n_train,
                fit.trace.len(),
                last.loss,
                last.accuracy
            );
        }
    }
    for cell in &eval.cells {
        let _ = writeln!(out, "\n-- {}: trained on {}, tested on {} --", cell.family, cell.train, cell.test);
        match &cell.outcome {
            Ok(r) => human_table(&mut out, &r.report, &format!("Avg. ({})", cell.test)),
            Err(e) => {
                let _ = writeln!(out, "FAILED: {e}");
            }
        }
    }
    out
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<(), EvalError> {
    fs::write(&path, text).map_err(|source| EvalError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

/// Writes `reports/<cell>.csv`, `grid_<family>.csv` and `summary.txt` under
/// `out_dir` and returns the paths in write order.
pub fn emit_report(eval: &CrossEval, out_dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let reports = out_dir.join("reports");
    fs::create_dir_all(&reports).map_err(|source| EvalError::Io { path: reports.clone(), source })?;
    let mut written = Vec::new();
    for cell in &eval.cells {
        if let Ok(r) = &cell.outcome {
            write(reports.join(cell_file_name(cell)), &machine_report(&r.report), &mut written)?;
        }
    }
    for m in &eval.matrices {
        write(out_dir.join(format!("grid_{}.csv", m.family)), &grid_csv(m), &mut written)?;
    }
    write(out_dir.join("summary.txt"), &summary_text(eval), &mut written)?;
    Ok(written)
}
