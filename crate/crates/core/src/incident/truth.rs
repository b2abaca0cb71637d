use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::catalog::RootCause;
use super::spec::IncidentSpec;
use crate::topology::{Entity, Topology};

/// What a perfect submission contains. Never reachable through the tool layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub detected_expected: bool,
    /// One flag per entry of the entity universe.
    pub entity_mask: Vec<bool>,
    pub entities: Vec<Entity>,
    pub cause_set: BTreeSet<RootCause>,
    /// Absolute virtual ms at which each issue is injected, in issue order.
    pub injection_times: Vec<u64>,
}

impl GroundTruth {
    pub fn derive(spec: &IncidentSpec, topo: &Topology) -> Self {
        let universe = topo.entity_universe();
        let entities: BTreeSet<Entity> = spec.issues.iter().map(|i| i.entity()).collect();
        GroundTruth {
            detected_expected: !spec.issues.is_empty(),
            entity_mask: universe.iter().map(|e| entities.contains(e)).collect(),
            entities: entities.into_iter().collect(),
            cause_set: spec.causes(),
            injection_times: spec
                .issues
                .iter()
                .map(|i| spec.warmup_ms + i.inject_at_ms)
                .collect(),
        }
    }

    /// RCA mask over the catalog order.
    pub fn cause_mask(&self) -> Vec<bool> {
        RootCause::ALL
            .iter()
            .map(|c| self.cause_set.contains(c))
            .collect()
    }
}
