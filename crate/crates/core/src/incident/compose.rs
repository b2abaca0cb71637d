use std::collections::BTreeSet;

use super::spec::{validate_spec, IncidentSpec, SpecError};

/// Merge several single- or multi-issue specs into one run.
pub fn compose(specs: &[IncidentSpec]) -> Result<IncidentSpec, SpecError> {
    let Some(first) = specs.first() else {
        return Err(SpecError::one("nothing to compose"));
    };
    if specs.len() == 1 {
        return Ok(first.clone());
    }
    let mut errs = Vec::new();
    let mut out = first.clone();
    let mut seen: BTreeSet<_> = first.issues.iter().map(|i| i.entity()).collect();
    let mut goals: BTreeSet<_> = first.goals.iter().copied().collect();
    for s in &specs[1..] {
        if s.scenario != first.scenario {
            errs.push(format!(
                "{} uses a different scenario than {}",
                s.name, first.name
            ));
            continue;
        }
        for iss in &s.issues {
            if !seen.insert(iss.entity()) {
                errs.push(format!(
                    "entity {} targeted by more than one issue",
                    iss.entity()
                ));
            }
            out.issues.push(iss.clone());
        }
        goals.extend(s.goals.iter().copied());
        out.workload
            .triggering
            .extend(s.workload.triggering.iter().cloned());
        out.horizon_ms = out.horizon_ms.max(s.horizon_ms);
        out.name = format!("{}+{}", out.name, s.name);
    }
    if !errs.is_empty() {
        return Err(SpecError { violations: errs });
    }
    out.goals = goals.into_iter().collect();
    out.description.clear();
    let v = validate_spec(&out);
    if v.is_empty() {
        Ok(out)
    } else {
        Err(SpecError { violations: v })
    }
}
