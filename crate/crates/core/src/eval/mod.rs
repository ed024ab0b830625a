// SPDX-License-Identifier: MIT OR Apache-2.0

//! Metrics (EER, sampling rate, mean-EER "AUC") and experiment harnesses.

mod harness;
mod metrics;

pub use harness::{
    parse_results_csv, parse_summary_csv, run_ablation, run_comparison, run_single, AblationCell,
    Experiment, RunResult, SummaryRow, SUPERVISED_LABEL,
};
pub use metrics::{
    auc, balance_key, eer, midpoint, rate_pct, round2, sampling_rate, truncate2, ErrorCounts,
    EvalRecord, RunTable,
};
