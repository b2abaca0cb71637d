use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grading::{grade, GoalResult, Submission};
use super::slo::{check_slos, FlowSeries, SloConfig, SloViolation};
use crate::aal::{Outcome, ToolInvocationRecord};
use crate::incident::{GroundTruth, IncidentSpec};
use crate::topology::Entity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Submitted,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMetrics {
    /// Virtual ms from the first injection (or agent start for controls) to submission.
    pub time_to_submit_virtual: Option<u64>,
    /// Wall-clock seconds of the agent phase.
    pub wall_time_s: f64,
    /// Calls that were not denied.
    pub tool_calls: u64,
    pub tool_errors: u64,
    pub tool_error_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_tokens: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub incident: String,
    pub spec_hash: String,
    pub outcome: RunOutcome,
    pub goals: Vec<GoalResult>,
    pub efficiency: EfficiencyMetrics,
    pub slo: SloConfig,
    pub slo_violations: Vec<SloViolation>,
    /// Records per tool name, denied ones included.
    pub trace_summary: BTreeMap<String, u64>,
    pub submission: Submission,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn goal(&self, g: crate::incident::Goal) -> Option<&GoalResult> {
        self.goals.iter().find(|r| r.goal == g)
    }

    pub fn all_exact(&self) -> bool {
        self.goals.iter().all(|g| g.exact_match)
    }
}

pub fn spec_hash(spec: &IncidentSpec) -> String {
    hex::encode(Sha256::digest(spec.to_json().as_bytes()))
}

/// Everything the evaluator reads; all of it is persisted with a run.
pub struct ReportInputs<'a> {
    pub spec: &'a IncidentSpec,
    pub truth: &'a GroundTruth,
    pub universe: &'a [Entity],
    pub submission: &'a Submission,
    pub outcome: RunOutcome,
    pub records: &'a [ToolInvocationRecord],
    pub agent_start: u64,
    pub agent_end: u64,
    pub submitted_at: Option<u64>,
    pub wall_time_s: f64,
    pub flows: &'a [FlowSeries],
    pub slo: &'a SloConfig,
}

pub fn build_report(x: &ReportInputs<'_>) -> EvaluationReport {
    let mut trace_summary = BTreeMap::new();
    let (mut calls, mut errors) = (0u64, 0u64);
    for r in x.records {
        *trace_summary.entry(r.tool.clone()).or_insert(0) += 1;
        match r.outcome {
            Outcome::Denied { .. } => {}
            Outcome::ToolError { .. } => {
                calls += 1;
                errors += 1;
            }
            Outcome::Ok { .. } => calls += 1,
        }
    }
    let since = x
        .truth
        .injection_times
        .iter()
        .copied()
        .min()
        .unwrap_or(x.agent_start);
    let meta = x.submission.agent_metadata.clone().unwrap_or_default();
    EvaluationReport {
        incident: x.spec.name.clone(),
        spec_hash: spec_hash(x.spec),
        outcome: x.outcome,
        goals: grade(x.submission, x.truth, x.universe, &x.spec.goals),
        efficiency: EfficiencyMetrics {
            time_to_submit_virtual: x.submitted_at.map(|t| t.saturating_sub(since)),
            wall_time_s: x.wall_time_s,
            tool_calls: calls,
            tool_errors: errors,
            tool_error_rate: if calls == 0 {
                0.0
            } else {
                errors as f64 / calls as f64
            },
            model: meta.model,
            steps: meta.steps,
            input_tokens: meta.input_tokens,
            output_tokens: meta.output_tokens,
            reasoning_tokens: meta.reasoning_tokens,
        },
        slo: x.slo.clone(),
        slo_violations: check_slos(x.flows, x.slo, x.agent_start, x.agent_end),
        trace_summary,
        submission: x.submission.clone(),
    }
}
