use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "method,alpha,split_seed,micro_f1,macro_f1,accuracy,wall_ms";
pub const SUMMARY_HEADER: &str = "method,alpha,runs,micro_f1_mean,micro_f1_std,macro_f1_mean,macro_f1_std,accuracy_mean,accuracy_std,val_micro_f1_mean";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    /// `None` for methods without a teleport parameter.
    pub alpha: Option<f64>,
    pub split_seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Validation micro F1, used for model selection.
    pub val_micro_f1: f64,
    pub wall_ms: u64,
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{}",
            self.method,
            fmt_alpha(self.alpha),
            self.split_seed,
            self.micro_f1,
            self.macro_f1,
            self.accuracy,
            self.wall_ms
        )
    }
}

fn fmt_alpha(alpha: Option<f64>) -> String {
    alpha.map(|a| a.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.method
                .cmp(&b.method)
                .then(a.alpha.unwrap_or(-1.0).total_cmp(&b.alpha.unwrap_or(-1.0)))
                .then(a.split_seed.cmp(&b.split_seed))
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Appends rows to `path`, writing the header first if the file is new
    /// or empty.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        if fresh {
            text.push_str(REPORT_HEADER);
            text.push('\n');
        }
        for r in &self.rows {
            text.push_str(&r.csv_line());
            text.push('\n');
        }
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub alpha: Option<f64>,
    pub runs: usize,
    pub micro_f1: (f64, f64),
    pub macro_f1: (f64, f64),
    pub accuracy: (f64, f64),
    pub val_micro_f1: f64,
}

/// Population mean and standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

type GroupKey = (String, Option<u64>);

fn groups(report: &EvalReport) -> BTreeMap<GroupKey, Vec<&ReportRow>> {
    let mut out: BTreeMap<GroupKey, Vec<&ReportRow>> = BTreeMap::new();
    for r in &report.rows {
        // total_cmp order of non-negative floats matches their bit patterns
        out.entry((r.method.clone(), r.alpha.map(f64::to_bits)))
            .or_default()
            .push(r);
    }
    out
}

/// Per-(method, alpha) aggregates, ordered by method then alpha.
pub fn summarize(report: &EvalReport) -> Result<Vec<SummaryRow>> {
    if report.rows.is_empty() {
        return Err(Error::Input("cannot summarize an empty report".into()));
    }
    Ok(groups(report)
        .into_iter()
        .map(|((method, alpha), rows)| {
            let col = |f: fn(&ReportRow) -> f64| -> Vec<f64> { rows.iter().map(|r| f(r)).collect() };
            SummaryRow {
                method,
                alpha: alpha.map(f64::from_bits),
                runs: rows.len(),
                micro_f1: mean_std(&col(|r| r.micro_f1)),
                macro_f1: mean_std(&col(|r| r.macro_f1)),
                accuracy: mean_std(&col(|r| r.accuracy)),
                val_micro_f1: mean_std(&col(|r| r.val_micro_f1)).0,
            }
        })
        .collect())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.method,
            fmt_alpha(r.alpha),
            r.runs,
            r.micro_f1.0,
            r.micro_f1.1,
            r.macro_f1.0,
            r.macro_f1.1,
            r.accuracy.0,
            r.accuracy.1,
            r.val_micro_f1
        )
        .unwrap();
    }
    out
}

/// The alpha of `method` with the highest mean validation micro F1; ties go
/// to the smaller alpha.
pub fn select_alpha(report: &EvalReport, method: &str) -> Option<f64> {
    let summary = summarize(report).ok()?;
    let mut best: Option<(f64, f64)> = None;
    for r in summary.iter().filter(|r| r.method == method) {
        let Some(a) = r.alpha else { continue };
        if best.is_none_or(|(_, s)| r.val_micro_f1 > s) {
            best = Some((a, r.val_micro_f1));
        }
    }
    best.map(|(a, _)| a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, alpha: Option<f64>, seed: u64, micro: f64) -> ReportRow {
        ReportRow {
            method: method.into(),
            alpha,
            split_seed: seed,
            micro_f1: micro,
            macro_f1: micro,
            accuracy: micro,
            val_micro_f1: micro,
            wall_ms: 0,
        }
    }

    #[test]
    fn single_and_pair() {
        let one = EvalReport {
            rows: vec![row("ld", Some(0.1), 0, 0.7)],
        };
        let s = summarize(&one).unwrap();
        assert_eq!(s[0].micro_f1, (0.7, 0.0));

        let two = EvalReport {
            rows: vec![row("ld", Some(0.1), 0, 0.4), row("ld", Some(0.1), 1, 0.6)],
        };
        let s = summarize(&two).unwrap();
        assert!((s[0].micro_f1.0 - 0.5).abs() < 1e-15);
        assert!((s[0].micro_f1.1 - 0.1).abs() < 1e-15);

        assert!(summarize(&EvalReport::default()).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut r = EvalReport {
            rows: vec![row("ld", Some(0.2), 1, 0.5), row("adj", None, 0, 0.25), row("ld", Some(0.1), 0, 0.5)],
        };
        r.sort();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines[1], "adj,,0,0.250000,0.250000,0.250000,0");
        assert_eq!(lines[2], "ld,0.1,0,0.500000,0.500000,0.500000,0");
        assert!(summary_csv(&summarize(&r).unwrap()).starts_with(SUMMARY_HEADER));
    }

    #[test]
    fn alpha_selection_prefers_small_on_ties() {
        let r = EvalReport {
            rows: vec![
                row("ld", Some(0.3), 0, 0.8),
                row("ld", Some(0.1), 0, 0.8),
                row("ld", Some(0.2), 0, 0.7),
                row("adj", None, 0, 0.9),
            ],
        };
        assert_eq!(select_alpha(&r, "ld"), Some(0.1));
        assert_eq!(select_alpha(&r, "adj"), None);
    }
}
