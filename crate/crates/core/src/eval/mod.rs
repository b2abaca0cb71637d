//! Grading, efficiency and SLO metrics, and run aggregation.

pub mod aggregate;
pub mod grading;
pub mod report;
pub mod slo;

pub use aggregate::{aggregate, summary_csv, SummaryRow, SUMMARY_COLUMNS};
pub use grading::{
    grade, grade_detection, grade_localization, grade_masks, grade_rca, AgentMetadata, Confusion,
    GoalResult, Submission,
};
pub use report::{
    build_report, spec_hash, EfficiencyMetrics, EvaluationReport, ReportInputs, RunOutcome,
};
pub use slo::{check_slos, nearest_rank, FlowSeries, SloConfig, SloMetric, SloViolation};
