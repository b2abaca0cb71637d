//! Resolving incident names and describing the shipped suite.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::incident::{
    expand_template, load_spec, shipped, template, Bindings, GroundTruth, IncidentSpec, RootCause,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Incident,
    Control,
    Template,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: EntryKind,
    pub scenario: String,
    pub goals: Vec<String>,
    pub root_causes: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LookupError {
    #[error("incident not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
}

fn scenario_of(v: &Value) -> String {
    format!(
        "{}/{}",
        v["scenario"]["kind"].as_str().unwrap_or("?"),
        v["scenario"]["size"].as_str().unwrap_or("?")
    )
}

pub fn list_incidents() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for spec in shipped::all_incidents() {
        out.push(CatalogEntry {
            kind: if spec.is_control() {
                EntryKind::Control
            } else {
                EntryKind::Incident
            },
            scenario: scenario_of(&serde_json::to_value(&spec).expect("json")),
            goals: spec.goals.iter().map(|g| g.as_str().to_string()).collect(),
            root_causes: spec
                .causes()
                .iter()
                .map(|c| c.as_str().to_string())
                .collect(),
            name: spec.name,
        });
    }
    for (name, doc) in shipped::TEMPLATES {
        let v: Value = serde_json::from_str(doc).expect("shipped template is JSON");
        out.push(CatalogEntry {
            name: name.to_string(),
            kind: EntryKind::Template,
            scenario: scenario_of(&v),
            goals: v["goals"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|g| g.as_str().map(String::from))
                .collect(),
            root_causes: v["issues"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|i| i["root_cause"].as_str().map(String::from))
                .collect(),
        });
    }
    out
}

/// A shipped name, a shipped template (needs bindings) or a path to a JSON file.
pub fn resolve_incident(
    name_or_path: &str,
    bindings: Option<&Bindings>,
) -> Result<IncidentSpec, LookupError> {
    let invalid = |e: crate::incident::SpecError| LookupError::Invalid(e.to_string());
    if let Some(r) = shipped::incident(name_or_path) {
        return r.map_err(invalid);
    }
    let doc: Value = if let Some(t) = shipped::template(name_or_path) {
        t
    } else if Path::new(name_or_path).is_file() {
        let text = std::fs::read_to_string(name_or_path)
            .map_err(|e| LookupError::Invalid(format!("{name_or_path}: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| LookupError::Invalid(format!("{name_or_path}: {e}")))?
    } else {
        return Err(LookupError::NotFound(name_or_path.to_string()));
    };
    if template::is_template(&doc) {
        let b = bindings.ok_or_else(|| {
            LookupError::Invalid(format!(
                "{name_or_path} is a template; pass bindings or a seed"
            ))
        })?;
        expand_template(&doc, b).map_err(invalid)
    } else {
        load_spec(&doc.to_string()).map_err(invalid)
    }
}

/// The resolved spec with issues hidden unless `reveal`; `reveal` adds the ground truth.
pub fn describe(name_or_path: &str, reveal: bool) -> Result<Value, LookupError> {
    let spec = resolve_incident(name_or_path, None)?;
    let mut v = json!({ "spec": serde_json::to_value(&spec).expect("json") });
    if reveal {
        let topo = spec.topology();
        let truth = GroundTruth::derive(&spec, &topo);
        let universe = topo.entity_universe();
        v["ground_truth"] = serde_json::to_value(&truth).expect("json");
        v["entity_universe"] = serde_json::to_value(&universe).expect("json");
        v["catalog"] = RootCause::ALL.iter().map(|c| c.as_str()).collect();
    } else {
        v["spec"]["issues"] = json!(format!(
            "<redacted: {} issue(s); use --reveal>",
            spec.issues.len()
        ));
        v["ground_truth"] = json!("<redacted>");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_redacts_by_default() {
        let v = describe("link_down_datacenter", false).unwrap();
        assert!(v["spec"]["issues"].as_str().unwrap().contains("redacted"));
        assert!(v["ground_truth"].is_string());
        let r = describe("link_down_datacenter", true).unwrap();
        assert!(r["ground_truth"]["entity_mask"].is_array());
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            describe("no_such_incident", false),
            Err(LookupError::NotFound(_))
        ));
    }

    #[test]
    fn templates_need_bindings() {
        assert!(resolve_incident("link_down_template", None).is_err());
        let s = resolve_incident(
            "link_down_template",
            Some(&Bindings::Explicit(vec![
                "pod0.leaf0".into(),
                "eth0".into(),
            ])),
        )
        .unwrap();
        assert_eq!(s.issues[0].dev.as_str(), "pod0.leaf0");
    }
}
