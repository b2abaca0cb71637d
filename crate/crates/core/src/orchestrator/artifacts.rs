//! Run directories: writing them and re-evaluating from them.

use std::fs;
use std::path::Path;

use super::run::{RunMeta, RunResult};
use crate::aal::parse_events;
use crate::eval::{build_report, EvaluationReport, FlowSeries, ReportInputs, Submission};
use crate::incident::{GroundTruth, IncidentSpec};
use crate::topology::Topology;

pub const TOPOLOGY: &str = "topology.json";
pub const INCIDENT: &str = "incident.json";
pub const EVENTS: &str = "events.jsonl";
pub const SNAPSHOTS: &str = "snapshots";
pub const FLOWS: &str = "flows.jsonl";
pub const REPORT: &str = "report.json";
pub const SUBMISSION: &str = "submission.json";
pub const TRUTH: &str = "truth.json";
pub const RUN: &str = "run.json";

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0} exists and is not empty; pass --overwrite to replace it")]
    Exists(String),
    /// Artifacts are present but inconsistent.
    #[error("integrity: {0}")]
    Integrity(String),
}

fn io(p: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |e| ArtifactError::Io(p.display().to_string(), e)
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

pub fn write_run(dir: &Path, r: &RunResult, overwrite: bool) -> Result<(), ArtifactError> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir).map_err(io(dir))?.next().is_some();
        if nonempty && !overwrite {
            return Err(ArtifactError::Exists(dir.display().to_string()));
        }
        if nonempty {
            fs::remove_dir_all(dir).map_err(io(dir))?;
        }
    }
    fs::create_dir_all(dir.join(SNAPSHOTS)).map_err(io(dir))?;
    let put = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| ArtifactError::Io(p.display().to_string(), e))
    };
    put(TOPOLOGY, r.topology.to_json() + "\n")?;
    put(INCIDENT, r.spec.to_json() + "\n")?;
    put(
        EVENTS,
        r.records.iter().map(|x| x.to_line() + "\n").collect(),
    )?;
    put(
        FLOWS,
        r.flows
            .iter()
            .map(|f| serde_json::to_string(f).expect("flow") + "\n")
            .collect(),
    )?;
    put(SUBMISSION, pretty(&r.submission))?;
    put(TRUTH, pretty(&r.truth))?;
    put(RUN, pretty(&r.meta))?;
    for s in &r.snapshots {
        s.write_to(&dir.join(SNAPSHOTS))
            .map_err(|e| ArtifactError::Integrity(e.to_string()))?;
    }
    put(REPORT, r.report.to_json())
}

fn read(dir: &Path, name: &str) -> Result<String, ArtifactError> {
    let p = dir.join(name);
    fs::read_to_string(&p).map_err(|e| ArtifactError::Io(p.display().to_string(), e))
}

fn parse<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T, ArtifactError> {
    serde_json::from_str(&read(dir, name)?)
        .map_err(|e| ArtifactError::Integrity(format!("{name}: {e}")))
}

/// Recompute the report from persisted inputs. `report.json` itself is not read.
pub fn replay(dir: &Path) -> Result<EvaluationReport, ArtifactError> {
    let spec: IncidentSpec = parse(dir, INCIDENT)?;
    let topo: Topology = parse(dir, TOPOLOGY)?;
    let truth: GroundTruth = parse(dir, TRUTH)?;
    let submission: Submission = parse(dir, SUBMISSION)?;
    let meta: RunMeta = parse(dir, RUN)?;
    let records = parse_events(&read(dir, EVENTS)?).map_err(ArtifactError::Integrity)?;
    let mut flows = Vec::new();
    for (i, l) in read(dir, FLOWS)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let f: FlowSeries = serde_json::from_str(l)
            .map_err(|e| ArtifactError::Integrity(format!("{FLOWS} line {}: {e}", i + 1)))?;
        flows.push(f);
    }
    for r in &records {
        if let Some(id) = &r.snapshot_id {
            if !dir.join(SNAPSHOTS).join(format!("{id}.json")).is_file() {
                return Err(ArtifactError::Integrity(format!(
                    "record {} names missing snapshot {id}",
                    r.seq
                )));
            }
        }
    }
    if truth != GroundTruth::derive(&spec, &topo) {
        return Err(ArtifactError::Integrity(format!(
            "{TRUTH} disagrees with {INCIDENT}"
        )));
    }
    let universe = topo.entity_universe();
    Ok(build_report(&ReportInputs {
        spec: &spec,
        truth: &truth,
        universe: &universe,
        submission: &submission,
        outcome: meta.outcome,
        records: &records,
        agent_start: meta.agent_start,
        agent_end: meta.agent_end,
        submitted_at: meta.submitted_at,
        wall_time_s: meta.wall_time_s,
        flows: &flows,
        slo: &meta.slo,
    }))
}

/// Replay and compare with `report.json` when present; a missing report is regenerated.
pub fn replay_and_check(dir: &Path) -> Result<EvaluationReport, ArtifactError> {
    let report = replay(dir)?;
    let p = dir.join(REPORT);
    if p.is_file() {
        let on_disk = read(dir, REPORT)?;
        if on_disk != report.to_json() {
            return Err(ArtifactError::Integrity(format!(
                "{REPORT} differs from the replayed evaluation"
            )));
        }
    } else {
        fs::write(&p, report.to_json()).map_err(io(&p))?;
    }
    Ok(report)
}

/// Load `report.json` of a run directory.
pub fn load_report(dir: &Path) -> Result<EvaluationReport, ArtifactError> {
    parse(dir, REPORT)
}
