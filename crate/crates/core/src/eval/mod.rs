//! Scoring and multi-split experiments.
//!
//! F1 conventions: a zero denominator (no predicted and no actual
//! positives) scores 0, both for the pooled micro score and for each
//! per-label score entering the macro average.

mod experiment;
pub mod metrics;
mod report;

pub use experiment::{method_features, run_experiment, run_single, run_sweep, train_and_score, CellOutcome, ExperimentConfig, Method, SplitStrategy};
pub use metrics::{accuracy, macro_f1, micro_f1};
pub use report::{select_alpha, summarize, summary_csv, EvalReport, ReportRow, SummaryRow, REPORT_HEADER, SUMMARY_HEADER};
