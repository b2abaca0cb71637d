//! Inject every shipped incident, check its signal, grade a perfect answer.

use std::fmt;

use serde::Serialize;

use super::run::{truth_submission_request, Prepared};
use crate::aal::{AccessPolicy, TimeMode};
use crate::eval::SloConfig;
use crate::incident::liveness::{signal, LIVENESS_STEP_MS, LIVENESS_WINDOW_MS};
use crate::incident::{shipped, IncidentSpec, RootCause};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmokeStatus {
    Pass,
    Fail,
    MissingIncident,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmokeRow {
    pub incident: String,
    pub status: SmokeStatus,
    /// Virtual ms after injection at which every issue had shown its signal.
    pub liveness_ms: Option<u64>,
    pub detail: String,
}

impl fmt::Display for SmokeRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = match self.status {
            SmokeStatus::Pass => "PASS",
            SmokeStatus::Fail => "FAIL",
            SmokeStatus::MissingIncident => "MISSING",
        };
        write!(f, "{st:<8} {:<44} {}", self.incident, self.detail)
    }
}

/// One incident: liveness within the window, then an exact ground-truth submission.
pub fn smoke_one(spec: IncidentSpec) -> SmokeRow {
    let name = spec.name.clone();
    let mut prep = Prepared::new(spec);
    let since = prep.spec.warmup_ms;
    let issues = prep.spec.issues.clone();
    let mut seen: Vec<Option<String>> = vec![None; issues.len()];
    let mut waited = 0;
    // Signals are checked at the start of the agent phase and then every step.
    loop {
        for (i, iss) in issues.iter().enumerate() {
            if seen[i].is_none() {
                seen[i] = signal(iss, prep.state_mut(), since);
            }
        }
        if seen.iter().all(Option::is_some) || waited >= LIVENESS_WINDOW_MS {
            break;
        }
        prep.state_mut()
            .advance(LIVENESS_STEP_MS)
            .expect("tick multiple");
        waited += LIVENESS_STEP_MS;
    }
    if let Some(i) = seen.iter().position(Option::is_none) {
        return SmokeRow {
            incident: name,
            status: SmokeStatus::Fail,
            liveness_ms: None,
            detail: format!(
                "no {} signal within {LIVENESS_WINDOW_MS} ms",
                issues[i].root_cause
            ),
        };
    }
    let truth = prep.truth.clone();
    let mut run = prep.open(AccessPolicy::permissive(), TimeMode::Stepped);
    let resp = run.play(&[truth_submission_request(&truth, 1)]);
    let r = run.finish(SloConfig::default());
    if !r.report.all_exact() {
        return SmokeRow {
            incident: name,
            status: SmokeStatus::Fail,
            liveness_ms: Some(waited),
            detail: format!("ground-truth submission not exact: {resp:?}"),
        };
    }
    let evidence: Vec<String> = seen.into_iter().flatten().collect();
    SmokeRow {
        incident: name,
        status: SmokeStatus::Pass,
        liveness_ms: Some(waited),
        detail: if evidence.is_empty() {
            "control: no issues".into()
        } else {
            evidence.join("; ")
        },
    }
}

/// Every shipped incident plus a row per catalog cause that has no single-issue incident.
pub fn smoke_matrix_of(specs: Vec<IncidentSpec>) -> Vec<SmokeRow> {
    let mut rows = Vec::new();
    for c in RootCause::ALL {
        let covered = specs
            .iter()
            .any(|s| s.issues.len() == 1 && s.issues[0].root_cause == c);
        if !covered {
            rows.push(SmokeRow {
                incident: c.as_str().to_string(),
                status: SmokeStatus::MissingIncident,
                liveness_ms: None,
                detail: "missing incident".into(),
            });
        }
    }
    rows.extend(specs.into_iter().map(smoke_one));
    rows
}

pub fn smoke_matrix() -> Vec<SmokeRow> {
    smoke_matrix_of(shipped::all_incidents())
}
