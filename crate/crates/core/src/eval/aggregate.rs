use std::collections::BTreeMap;

use serde::Serialize;

use super::report::EvaluationReport;
use crate::incident::Goal;

/// Column names of `summary.csv`.
pub const SUMMARY_COLUMNS: [&str; 12] = [
    "Model",
    "Runs",
    "Time (s)",
    "Virtual time (s)",
    "# Steps",
    "# Tools",
    "# In tokens",
    "# Out tokens",
    "# Rea. Tokens",
    "Det. Acc.",
    "Loc. Acc.",
    "RCA Acc.",
];

/// Means over one group of runs. Accuracies are fractions of runs with an exact match.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub runs: usize,
    pub time_s: f64,
    pub virtual_time_s: Option<f64>,
    pub steps: Option<f64>,
    pub tools: f64,
    pub input_tokens: Option<f64>,
    pub output_tokens: Option<f64>,
    pub reasoning_tokens: Option<f64>,
    pub det_acc: Option<f64>,
    pub loc_acc: Option<f64>,
    pub rca_acc: Option<f64>,
}

fn mean_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = it.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn goal_acc(rs: &[&EvaluationReport], g: Goal) -> Option<f64> {
    mean_opt(
        rs.iter()
            .map(|r| r.goal(g).map(|x| if x.exact_match { 1.0 } else { 0.0 })),
    )
}

/// Group reports by agent-reported model and average each group.
pub fn aggregate(reports: &[EvaluationReport]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<String, Vec<&EvaluationReport>> = BTreeMap::new();
    for r in reports {
        let m = r
            .efficiency
            .model
            .clone()
            .unwrap_or_else(|| "unknown".into());
        groups.entry(m).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(model, rs)| {
            let n = rs.len() as f64;
            SummaryRow {
                model,
                runs: rs.len(),
                time_s: rs.iter().map(|r| r.efficiency.wall_time_s).sum::<f64>() / n,
                virtual_time_s: mean_opt(rs.iter().map(|r| {
                    r.efficiency
                        .time_to_submit_virtual
                        .map(|t| t as f64 / 1000.0)
                })),
                steps: mean_opt(rs.iter().map(|r| r.efficiency.steps.map(|x| x as f64))),
                tools: rs
                    .iter()
                    .map(|r| r.efficiency.tool_calls as f64)
                    .sum::<f64>()
                    / n,
                input_tokens: mean_opt(
                    rs.iter()
                        .map(|r| r.efficiency.input_tokens.map(|x| x as f64)),
                ),
                output_tokens: mean_opt(
                    rs.iter()
                        .map(|r| r.efficiency.output_tokens.map(|x| x as f64)),
                ),
                reasoning_tokens: mean_opt(
                    rs.iter()
                        .map(|r| r.efficiency.reasoning_tokens.map(|x| x as f64)),
                ),
                det_acc: goal_acc(&rs, Goal::Detect),
                loc_acc: goal_acc(&rs, Goal::Localize),
                rca_acc: goal_acc(&rs, Goal::Rca),
            }
        })
        .collect()
}

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{:.1}%", v * 100.0))
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.runs.to_string(),
            format!("{:.1}", r.time_s),
            num(r.virtual_time_s),
            num(r.steps),
            format!("{:.1}", r.tools),
            num(r.input_tokens),
            num(r.output_tokens),
            num(r.reasoning_tokens),
            pct(r.det_acc),
            pct(r.loc_acc),
            pct(r.rca_acc),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
