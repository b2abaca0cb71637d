//! Incident specification: the `(scenario, issues, workload)` tuple plus goals.

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::catalog::RootCause;
use super::eligibility;
use crate::sim::{TriggerKind, TICK_MS};
use crate::topology::{
    build_scenario, validate, Component, Entity, NodeId, NodeKind, Scenario, Size, Topology,
};

pub const DEFAULT_WARMUP_MS: u64 = 5000;
pub const DEFAULT_HORIZON_MS: u64 = 600_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Detect,
    Localize,
    Rca,
}

impl Goal {
    pub const ALL: [Goal; 3] = [Goal::Detect, Goal::Localize, Goal::Rca];

    pub fn as_str(self) -> &'static str {
        match self {
            Goal::Detect => "detect",
            Goal::Localize => "localize",
            Goal::Rca => "rca",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRef {
    pub kind: Scenario,
    pub size: Size,
    /// Inline topology, required for `custom` scenarios only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Box<Topology>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub dev: NodeId,
    pub comp: Component,
    pub root_cause: RootCause,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub inject_at_ms: u64,
}

impl Issue {
    pub fn entity(&self) -> Entity {
        Entity {
            node: self.dev.clone(),
            component: self.comp.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularWorkload {
    pub pattern: String,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerWorkload {
    pub kind: TriggerKind,
    /// Host glob, or `all` for every host except `dst`.
    pub src: String,
    pub dst: NodeId,
    /// Seconds between bursts; 0 fires once.
    pub interval: f64,
    /// Mb/s per sender for traffic, requests/s for floods. Absent means the cause default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Burst length in ms; 0 never stops.
    pub burst_len: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub regular: RegularWorkload,
    #[serde(
        default,
        serialize_with = "ser_one_or_many",
        deserialize_with = "de_one_or_many"
    )]
    pub triggering: Vec<TriggerWorkload>,
}

impl Default for Workload {
    fn default() -> Self {
        Workload {
            regular: RegularWorkload {
                pattern: "uniform_all_pairs".into(),
                rho: 0.4,
            },
            triggering: Vec::new(),
        }
    }
}

fn ser_one_or_many<S: Serializer>(v: &[TriggerWorkload], s: S) -> Result<S::Ok, S::Error> {
    match v {
        [] => s.serialize_none(),
        [one] => one.serialize(s),
        many => many.serialize(s),
    }
}

fn de_one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<TriggerWorkload>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(TriggerWorkload),
        Many(Vec<TriggerWorkload>),
    }
    Ok(match Option::<OneOrMany>::deserialize(d)? {
        None => Vec::new(),
        Some(OneOrMany::One(t)) => vec![t],
        Some(OneOrMany::Many(v)) => v,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_ms: u64,
    #[serde(default = "default_horizon")]
    pub horizon_ms: u64,
    pub goals: Vec<Goal>,
    #[serde(default)]
    pub issues: Vec<Issue>,
    #[serde(default)]
    pub workload: Workload,
}

fn default_warmup() -> u64 {
    DEFAULT_WARMUP_MS
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON_MS
}

/// Every problem found while loading a spec.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SpecError {
    pub violations: Vec<String>,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid incident: {}", self.violations.join("; "))
    }
}

impl SpecError {
    pub fn one(msg: impl Into<String>) -> Self {
        SpecError {
            violations: vec![msg.into()],
        }
    }
}

impl IncidentSpec {
    /// The network this incident runs on.
    pub fn topology(&self) -> Topology {
        match (&self.scenario.kind, &self.scenario.topology) {
            (_, Some(t)) => {
                let mut t = (**t).clone();
                t.seed = self.seed;
                t
            }
            (kind, None) => build_scenario(*kind, self.scenario.size, self.seed),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn is_control(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn causes(&self) -> BTreeSet<RootCause> {
        self.issues.iter().map(|i| i.root_cause).collect()
    }
}

/// Parse and fully validate an incident document.
pub fn load_spec(doc: &str) -> Result<IncidentSpec, SpecError> {
    let v: Value =
        serde_json::from_str(doc).map_err(|e| SpecError::one(format!("malformed JSON: {e}")))?;
    load_value(v)
}

pub(crate) fn load_value(mut v: Value) -> Result<IncidentSpec, SpecError> {
    // Root causes are checked by hand so every bad one is reported, not just the first.
    let mut errs = Vec::new();
    if let Some(issues) = v.get_mut("issues").and_then(Value::as_array_mut) {
        for (i, iss) in issues.iter_mut().enumerate() {
            if let Some(rc) = iss.get("root_cause").and_then(Value::as_str) {
                if let Err(e) = rc.parse::<RootCause>() {
                    errs.push(format!("issues[{i}]: {e}"));
                    iss["root_cause"] = Value::String(RootCause::LinkDown.as_str().into());
                    iss["__invalid"] = Value::Bool(true);
                }
            }
        }
    }
    let invalid: Vec<bool> = v
        .get("issues")
        .and_then(Value::as_array)
        .map(|a| a.iter().map(|x| x.get("__invalid").is_some()).collect())
        .unwrap_or_default();
    if let Some(issues) = v.get_mut("issues").and_then(Value::as_array_mut) {
        for iss in issues.iter_mut() {
            if let Some(o) = iss.as_object_mut() {
                o.remove("__invalid");
            }
        }
    }
    let spec: IncidentSpec = match serde_json::from_value(v) {
        Ok(s) => s,
        Err(e) => {
            errs.push(format!("malformed incident: {e}"));
            return Err(SpecError { violations: errs });
        }
    };
    errs.extend(validate_spec_with(&spec, &invalid));
    if errs.is_empty() {
        Ok(spec)
    } else {
        Err(SpecError { violations: errs })
    }
}

/// All violations of `spec`; empty when valid.
pub fn validate_spec(spec: &IncidentSpec) -> Vec<String> {
    validate_spec_with(spec, &[])
}

fn validate_spec_with(spec: &IncidentSpec, skip: &[bool]) -> Vec<String> {
    let mut errs = Vec::new();
    if spec.name.trim().is_empty() {
        errs.push("name is empty".to_string());
    }
    if spec.goals.is_empty() {
        errs.push("goals is empty".to_string());
    }
    if spec.scenario.kind == Scenario::Custom && spec.scenario.topology.is_none() {
        errs.push("custom scenario needs an inline topology".to_string());
        return errs;
    }
    let topo = spec.topology();
    for v in validate(&topo) {
        errs.push(format!("topology: {v}"));
    }
    if !errs.is_empty() {
        return errs;
    }
    for (what, ms) in [
        ("warmup_ms", spec.warmup_ms),
        ("horizon_ms", spec.horizon_ms),
    ] {
        if ms % TICK_MS != 0 {
            errs.push(format!("{what} {ms} is not a multiple of {TICK_MS}"));
        }
    }
    let universe: BTreeSet<Entity> = topo.entity_universe().into_iter().collect();
    let mut seen = BTreeSet::new();
    for (i, iss) in spec.issues.iter().enumerate() {
        if skip.get(i).copied().unwrap_or(false) {
            continue;
        }
        if iss.inject_at_ms % TICK_MS != 0 {
            errs.push(format!(
                "issues[{i}]: inject_at_ms {} is not a multiple of {TICK_MS}",
                iss.inject_at_ms
            ));
        }
        if topo.node(&iss.dev).is_none() {
            errs.push(format!("issues[{i}]: unknown node {}", iss.dev));
            continue;
        }
        let ent = iss.entity();
        if !universe.contains(&ent) {
            errs.push(format!("issues[{i}]: entity {ent} not in universe"));
            continue;
        }
        if !seen.insert(ent.clone()) {
            errs.push(format!("issues[{i}]: entity {ent} targeted twice"));
        }
        if let Err(e) = eligibility::check_target(iss.root_cause, &topo, &iss.dev, &iss.comp) {
            errs.push(format!("issues[{i}]: {e}"));
        }
        for e in check_params(iss.root_cause, &iss.params, &topo) {
            errs.push(format!("issues[{i}]: {e}"));
        }
    }
    let w = &spec.workload;
    if w.regular.pattern != "uniform_all_pairs" {
        errs.push(format!(
            "workload.regular: unknown pattern {}",
            w.regular.pattern
        ));
    }
    if !(0.0..=1.0).contains(&w.regular.rho) {
        errs.push(format!(
            "workload.regular: rho {} outside [0, 1]",
            w.regular.rho
        ));
    }
    for (i, t) in w.triggering.iter().enumerate() {
        match topo.node(&t.dst) {
            None => errs.push(format!("workload.triggering[{i}]: unknown node {}", t.dst)),
            Some(n) if n.kind != NodeKind::Host => errs.push(format!(
                "workload.triggering[{i}]: dst {} is not a host",
                t.dst
            )),
            Some(_) => {}
        }
        if resolve_sources(&topo, &t.src, &t.dst).is_empty() {
            errs.push(format!(
                "workload.triggering[{i}]: src {:?} matches no host",
                t.src
            ));
        }
        if !(t.interval >= 0.0) {
            errs.push(format!("workload.triggering[{i}]: negative interval"));
        }
        if let Some(r) = t.rate {
            if !(r > 0.0) {
                errs.push(format!("workload.triggering[{i}]: nonpositive rate"));
            }
        }
    }
    errs
}

/// Hosts selected by a trigger's `src` field, excluding the destination.
pub fn resolve_sources(topo: &Topology, src: &str, dst: &NodeId) -> Vec<NodeId> {
    topo.host_ids()
        .into_iter()
        .filter(|h| h != dst && (src == "all" || crate::glob::matches(src, h.as_str())))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamType {
    Count,
    Ratio,
    Number,
    Host,
    Ipv4,
    Prefix,
}

#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub ty: ParamType,
}

const fn p(name: &'static str, ty: ParamType) -> ParamSpec {
    ParamSpec { name, ty }
}

/// Parameters each cause accepts. All are optional and have defaults.
pub fn param_schema(c: RootCause) -> &'static [ParamSpec] {
    use ParamType::*;
    use RootCause::*;
    match c {
        LinkFlap => const { &[p("up_ms", Count), p("down_ms", Count)] },
        FaultyCable => const { &[p("error_rate", Ratio)] },
        MtuFragmentationDisabled => const { &[p("mtu", Count)] },
        HostIpMisconfig => const { &[p("ip", Ipv4)] },
        IncorrectNetmask => const { &[p("netmask", Prefix)] },
        OspfAreaMismatch => const { &[p("area", Count)] },
        StaticBlackhole | ForwardingLoop => const { &[p("victim", Host)] },
        FwdEntryMisconfig => const { &[p("victim", Host), p("wrong", Host)] },
        IncastTraffic | Microburst => {
            const {
                &[
                    p("rate_mbps", Number),
                    p("interval_s", Number),
                    p("burst_len_ms", Count),
                ]
            }
        }
        DosFlood => const { &[p("rate_rps", Number)] },
        _ => &[],
    }
}

fn check_params(c: RootCause, params: &Map<String, Value>, topo: &Topology) -> Vec<String> {
    let schema = param_schema(c);
    let mut errs = Vec::new();
    for (k, v) in params {
        let Some(ps) = schema.iter().find(|p| p.name == k) else {
            errs.push(format!("unknown param {k} for {c}"));
            continue;
        };
        let ok = match ps.ty {
            ParamType::Count => v.as_u64().is_some(),
            ParamType::Ratio => v.as_f64().is_some_and(|x| (0.0..=1.0).contains(&x)),
            ParamType::Number => v.as_f64().is_some_and(|x| x > 0.0),
            ParamType::Prefix => v.as_u64().is_some_and(|x| x <= 32),
            ParamType::Ipv4 => v.as_str().is_some_and(|s| s.parse::<Ipv4Addr>().is_ok()),
            ParamType::Host => v
                .as_str()
                .and_then(|s| topo.node(&NodeId::new(s)))
                .is_some_and(|n| n.is_host()),
        };
        if !ok {
            errs.push(format!("malformed param {k}: {v}"));
        }
    }
    if c == RootCause::MtuFragmentationDisabled {
        if let Some(m) = params.get("mtu").and_then(Value::as_u64) {
            if !(crate::topology::MIN_MTU as u64..=crate::topology::MAX_MTU as u64).contains(&m) {
                errs.push(format!("malformed param mtu: {m}"));
            }
        }
    }
    errs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Value {
        serde_json::json!({
            "name": "t",
            "scenario": {"kind": "datacenter_clos", "size": "S"},
            "seed": 0,
            "goals": ["detect", "localize", "rca"],
            "issues": [{"dev": "pod0.leaf0", "comp": "eth0", "root_cause": "link_down", "params": {}, "inject_at_ms": 0}],
            "workload": {"regular": {"pattern": "uniform_all_pairs", "rho": 0.4}, "triggering": null}
        })
    }

    #[test]
    fn loads_minimal() {
        let s = load_value(base()).unwrap();
        assert_eq!(s.warmup_ms, 5000);
        assert_eq!(s.horizon_ms, 600_000);
        assert_eq!(s.issues[0].root_cause, RootCause::LinkDown);
        let again = load_spec(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn out_of_scope_cause() {
        let mut v = base();
        v["issues"][0]["root_cause"] = "bgp_asn_mismatch".into();
        let e = load_value(v).unwrap_err();
        assert_eq!(
            e.violations,
            vec!["issues[0]: out-of-scope root cause: bgp_asn_mismatch"]
        );
    }

    #[test]
    fn unknown_node_is_named() {
        let mut v = base();
        v["issues"][0]["dev"] = "pod9.leaf7".into();
        let e = load_value(v).unwrap_err();
        assert!(e.violations[0].contains("pod9.leaf7"), "{e}");
    }

    #[test]
    fn every_violation_listed() {
        let mut v = base();
        v["issues"] = serde_json::json!([
            {"dev": "nope", "comp": "eth0", "root_cause": "link_down"},
            {"dev": "pod0.h0", "comp": "system", "root_cause": "warp_core_breach"},
            {"dev": "pod0.h0", "comp": "system", "root_cause": "switch_crash"},
        ]);
        v["workload"]["regular"]["rho"] = 1.5.into();
        let e = load_value(v).unwrap_err();
        assert_eq!(e.violations.len(), 4, "{e}");
    }

    #[test]
    fn bad_param_type() {
        let mut v = base();
        v["issues"][0]["root_cause"] = "faulty_cable".into();
        v["issues"][0]["params"] = serde_json::json!({"error_rate": "lots"});
        let e = load_value(v).unwrap_err();
        assert!(e.violations[0].contains("error_rate"), "{e}");
    }
}
