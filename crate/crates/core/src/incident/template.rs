//! Parametric incidents: documents whose fields may hold `"$1"`-style slots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::catalog::RootCause;
use super::eligibility::{eligible_with, PathUsage};
use super::spec::{load_value, IncidentSpec, ScenarioRef, SpecError};
use crate::topology::{Component, Entity};

/// How to fill a template's slots.
#[derive(Clone, Debug)]
pub enum Bindings {
    /// `values[k-1]` fills `$k`.
    Explicit(Vec<String>),
    /// Uniform choice over eligible entities; unbound params fall back to defaults.
    Seed(u64),
}

fn slot_index(v: &Value) -> Option<usize> {
    let s = v.as_str()?.strip_prefix('$')?;
    s.parse::<usize>().ok().filter(|&k| k >= 1)
}

/// Whether a document has any unfilled slot.
pub fn is_template(doc: &Value) -> bool {
    match doc {
        Value::Array(a) => a.iter().any(is_template),
        Value::Object(o) => o.values().any(is_template),
        v => slot_index(v).is_some(),
    }
}

fn fill(v: &mut Value, values: &[String], in_params: bool, missing: &mut Vec<usize>) {
    match v {
        Value::Array(a) => a
            .iter_mut()
            .for_each(|x| fill(x, values, in_params, missing)),
        Value::Object(o) => {
            for (k, x) in o.iter_mut() {
                fill(x, values, in_params || k == "params", missing);
            }
        }
        _ => {
            if let Some(k) = slot_index(v) {
                match values.get(k - 1) {
                    Some(b) if in_params => {
                        *v = serde_json::from_str(b).unwrap_or_else(|_| Value::String(b.clone()));
                    }
                    Some(b) => *v = Value::String(b.clone()),
                    None => missing.push(k),
                }
            }
        }
    }
}

/// Turn a template into a concrete, validated spec.
pub fn expand_template(template: &Value, bindings: &Bindings) -> Result<IncidentSpec, SpecError> {
    let mut doc = template.clone();
    match bindings {
        Bindings::Explicit(values) => {
            let mut missing = Vec::new();
            fill(&mut doc, values, false, &mut missing);
            if !missing.is_empty() {
                missing.sort_unstable();
                missing.dedup();
                let names: Vec<String> = missing.iter().map(|k| format!("${k}")).collect();
                return Err(SpecError::one(format!(
                    "unbound slots: {}",
                    names.join(", ")
                )));
            }
        }
        Bindings::Seed(seed) => bind_seeded(&mut doc, *seed)?,
    }
    if is_template(&doc) {
        return Err(SpecError::one("template has slots outside issue targets"));
    }
    load_value(doc)
}

fn bind_seeded(doc: &mut Value, seed: u64) -> Result<(), SpecError> {
    let scenario: ScenarioRef = doc
        .get("scenario")
        .cloned()
        .ok_or_else(|| SpecError::one("template has no scenario"))
        .and_then(|v| {
            serde_json::from_value(v).map_err(|e| SpecError::one(format!("template scenario: {e}")))
        })?;
    let probe = IncidentSpec {
        name: String::new(),
        description: String::new(),
        scenario,
        seed,
        warmup_ms: 0,
        horizon_ms: 0,
        goals: Vec::new(),
        issues: Vec::new(),
        workload: Default::default(),
    };
    let topo = probe.topology();
    let usage = PathUsage::compute(&topo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: Vec<Entity> = Vec::new();
    let n_issues = doc
        .get("issues")
        .and_then(Value::as_array)
        .map_or(0, Vec::len);
    for i in 0..n_issues {
        let iss = &mut doc["issues"][i];
        let cause: RootCause = iss
            .get("root_cause")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                SpecError::one(format!("issues[{i}]: template issue needs a root_cause"))
            })?
            .parse()
            .map_err(|e| SpecError::one(format!("issues[{i}]: {e}")))?;
        let dev_slot = slot_index(&iss["dev"]).is_some();
        let comp_slot = slot_index(&iss["comp"]).is_some();
        if dev_slot || comp_slot {
            let fixed_dev = iss["dev"]
                .as_str()
                .filter(|_| !dev_slot)
                .map(str::to_string);
            let fixed_comp: Option<Component> = iss["comp"]
                .as_str()
                .filter(|_| !comp_slot)
                .map(|s| s.parse().expect("infallible"));
            let pool: Vec<Entity> = eligible_with(cause, &topo, &usage)
                .into_iter()
                .filter(|e| fixed_dev.as_deref().is_none_or(|d| e.node.as_str() == d))
                .filter(|e| fixed_comp.as_ref().is_none_or(|c| &e.component == c))
                .filter(|e| !taken.contains(e))
                .collect();
            if pool.is_empty() {
                return Err(SpecError::one(format!(
                    "issues[{i}]: no eligible entity for {cause} on {} {}",
                    topo.scenario, topo.size
                )));
            }
            let pick = pool[rng.gen_range(0..pool.len())].clone();
            iss["dev"] = Value::String(pick.node.to_string());
            iss["comp"] = Value::String(pick.component.to_string());
            taken.push(pick);
        }
        if let Some(params) = iss.get_mut("params").and_then(Value::as_object_mut) {
            params.retain(|_, v| slot_index(v).is_none());
        }
    }
    if let Some(name) = doc.get("name").and_then(Value::as_str) {
        doc["name"] = Value::String(format!("{name}-seed{seed}"));
    }
    doc["seed"] = Value::from(seed);
    Ok(())
}
