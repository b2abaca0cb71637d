//! One run: init, warmup, agent phase, evaluation.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::aal::{
    handle_value, AccessPolicy, CloseReason, Session, TimeMode, ToolInvocationRecord,
};
use crate::eval::{
    build_report, EvaluationReport, FlowSeries, ReportInputs, RunOutcome, SloConfig, Submission,
};
use crate::incident::{injection_plan, workload, GroundTruth, IncidentSpec};
use crate::sim::{NetworkState, Snapshot};
use crate::topology::{Entity, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Warmup,
    AgentActive,
    Submitted,
    Evaluated,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub phase: Phase,
    pub virtual_ms: u64,
    pub wall_ts: f64,
}

fn wall_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Bookkeeping persisted next to the report so replay needs nothing else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub outcome: RunOutcome,
    pub agent_start: u64,
    pub agent_end: u64,
    pub submitted_at: Option<u64>,
    pub wall_time_s: f64,
    pub slo: SloConfig,
    pub transitions: Vec<Transition>,
}

/// A warmed-up network waiting for its agent.
pub struct Prepared {
    pub spec: IncidentSpec,
    pub topology: Topology,
    pub truth: GroundTruth,
    state: NetworkState,
    transitions: Vec<Transition>,
}

impl Prepared {
    /// Build the network, start the regular workload, schedule injections and run the warmup.
    pub fn new(spec: IncidentSpec) -> Self {
        let mut transitions = vec![Transition {
            phase: Phase::Init,
            virtual_ms: 0,
            wall_ts: wall_now(),
        }];
        let topology = spec.topology();
        let truth = GroundTruth::derive(&spec, &topology);
        let mut state = NetworkState::new(topology.clone(), spec.seed);
        for f in workload::regular_flows(&spec.workload.regular, &topology, 0) {
            state.add_flow(f);
        }
        for p in injection_plan(&spec, &topology) {
            state.schedule(p.at_ms, p.mutation);
        }
        transitions.push(Transition {
            phase: Phase::Warmup,
            virtual_ms: 0,
            wall_ts: wall_now(),
        });
        state
            .advance(spec.warmup_ms)
            .expect("warmup is validated to be a tick multiple");
        Prepared {
            spec,
            topology,
            truth,
            state,
            transitions,
        }
    }

    /// Direct simulator access before the agent phase (liveness checks).
    pub fn state_mut(&mut self) -> &mut NetworkState {
        &mut self.state
    }

    pub fn open(mut self, policy: AccessPolicy, time_mode: TimeMode) -> ActiveRun {
        let now = self.state.now();
        self.transitions.push(Transition {
            phase: Phase::AgentActive,
            virtual_ms: now,
            wall_ts: wall_now(),
        });
        let session = Session::new(self.state, policy, self.spec.horizon_ms, time_mode);
        ActiveRun {
            spec: self.spec,
            topology: self.topology,
            truth: self.truth,
            session,
            transitions: self.transitions,
            wall_start: Instant::now(),
        }
    }
}

pub struct ActiveRun {
    pub spec: IncidentSpec,
    pub topology: Topology,
    pub truth: GroundTruth,
    pub session: Session,
    transitions: Vec<Transition>,
    wall_start: Instant,
}

/// Everything a finished run produced.
pub struct RunResult {
    pub spec: IncidentSpec,
    pub topology: Topology,
    pub truth: GroundTruth,
    pub submission: Submission,
    pub records: Vec<ToolInvocationRecord>,
    pub snapshots: Vec<Snapshot>,
    pub flows: Vec<FlowSeries>,
    pub meta: RunMeta,
    pub report: EvaluationReport,
}

impl ActiveRun {
    /// Feed requests in order until the session closes. Returns the responses.
    pub fn play(&mut self, requests: &[Value]) -> Vec<Value> {
        let mut out = Vec::new();
        for r in requests {
            if self.session.closed().is_some() {
                break;
            }
            out.push(handle_value(&mut self.session, r));
        }
        out
    }

    /// Close the agent phase and evaluate. An open session counts as aborted.
    pub fn finish(mut self, slo: SloConfig) -> RunResult {
        let wall_time_s = self.wall_start.elapsed().as_secs_f64();
        let agent_start = self.session.agent_start();
        let snapshots = self.session.take_snapshots();
        let records = self.session.records().to_vec();
        let (submission, submitted_at, outcome) =
            match (self.session.closed(), self.session.submission()) {
                (Some(CloseReason::Submitted), Some((s, t))) => {
                    (s.clone(), Some(*t), RunOutcome::Submitted)
                }
                _ => (Submission::default(), None, RunOutcome::Aborted),
            };
        let state = self.session.into_state();
        let agent_end = state.now();
        let mut transitions = self.transitions;
        let end_phase = match outcome {
            RunOutcome::Submitted => Phase::Submitted,
            RunOutcome::Aborted => Phase::Aborted,
        };
        transitions.push(Transition {
            phase: end_phase,
            virtual_ms: agent_end,
            wall_ts: wall_now(),
        });
        let flows: Vec<FlowSeries> = state
            .flows()
            .filter(|f| f.spec.monitored)
            .map(FlowSeries::from)
            .collect();
        let universe = self.topology.entity_universe();
        let report = build_report(&ReportInputs {
            spec: &self.spec,
            truth: &self.truth,
            universe: &universe,
            submission: &submission,
            outcome,
            records: &records,
            agent_start,
            agent_end,
            submitted_at,
            wall_time_s,
            flows: &flows,
            slo: &slo,
        });
        if outcome == RunOutcome::Submitted {
            transitions.push(Transition {
                phase: Phase::Evaluated,
                virtual_ms: agent_end,
                wall_ts: wall_now(),
            });
        }
        RunResult {
            spec: self.spec,
            topology: self.topology,
            truth: self.truth,
            submission,
            records,
            snapshots,
            flows,
            meta: RunMeta {
                outcome,
                agent_start,
                agent_end,
                submitted_at,
                wall_time_s,
                slo,
                transitions,
            },
            report,
        }
    }
}

/// A `tools/call submit` request that reproduces the ground truth exactly.
pub fn truth_submission_request(truth: &GroundTruth, id: u64) -> Value {
    let loc: Vec<String> = truth.entities.iter().map(Entity::to_string).collect();
    let rc: Vec<&str> = truth.cause_set.iter().map(|c| c.as_str()).collect();
    json!({
        "id": id,
        "method": "tools/call",
        "params": {"name": "submit", "arguments": {
            "detected": truth.detected_expected,
            "localization": loc,
            "root_causes": rc,
            "report_text": "ground truth copy",
        }},
    })
}

/// Run `spec` against an in-process transcript of wire requests.
pub fn run_transcript(
    spec: IncidentSpec,
    policy: AccessPolicy,
    requests: &[Value],
    slo: SloConfig,
) -> (RunResult, Vec<Value>) {
    let mut active = Prepared::new(spec).open(policy, TimeMode::Stepped);
    let responses = active.play(requests);
    (active.finish(slo), responses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incident::shipped;

    #[test]
    fn zero_horizon_aborts() {
        let mut spec = shipped::incident("link_down_datacenter").unwrap().unwrap();
        spec.horizon_ms = 0;
        let (r, resp) = run_transcript(
            spec,
            AccessPolicy::permissive(),
            &[json!({"id": 1, "method": "tools/list"})],
            SloConfig::default(),
        );
        assert!(resp.is_empty());
        assert_eq!(r.meta.outcome, RunOutcome::Aborted);
        assert!(!r.report.goals[0].exact_match);
        assert!(!r.submission.detected);
    }

    #[test]
    fn truth_copy_is_exact() {
        let spec = shipped::incident("link_down_datacenter").unwrap().unwrap();
        let truth = GroundTruth::derive(&spec, &spec.topology());
        let (r, resp) = run_transcript(
            spec,
            AccessPolicy::permissive(),
            &[truth_submission_request(&truth, 1)],
            SloConfig::default(),
        );
        assert!(resp[0].get("result").is_some(), "{resp:?}");
        assert_eq!(r.meta.outcome, RunOutcome::Submitted);
        assert!(r.report.all_exact());
        let phases: Vec<Phase> = r.meta.transitions.iter().map(|t| t.phase).collect();
        assert!(phases.windows(2).all(|w| w[0] < w[1]), "{phases:?}");
    }
}
