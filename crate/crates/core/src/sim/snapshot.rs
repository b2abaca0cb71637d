use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ForwardingState, InterfaceStats, NetworkState, SimError};
use crate::topology::{InterfaceId, LinkState, NodeId, NodeStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSnapshot {
    pub node: NodeId,
    pub interface: InterfaceId,
    #[serde(flatten)]
    pub stats: InterfaceStats,
}

/// Immutable copy of the observable ground-truth state at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub t: u64,
    pub interfaces: Vec<InterfaceSnapshot>,
    pub node_status: Vec<(NodeId, NodeStatus)>,
    pub link_states: Vec<LinkState>,
    pub forwarding: ForwardingState,
    pub logs_cursor: usize,
}

impl Snapshot {
    pub fn write_to(&self, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir).map_err(|e| SimError::Io(e.to_string()))?;
        let body = serde_json::to_string_pretty(self).expect("snapshot serializes");
        std::fs::write(dir.join(format!("{}.json", self.id)), body)
            .map_err(|e| SimError::Io(e.to_string()))
    }
}

impl NetworkState {
    pub fn snapshot(&mut self) -> Snapshot {
        self.snapshot_seq += 1;
        let mut interfaces = Vec::new();
        for (n, node) in self.topo.nodes.iter().enumerate() {
            for (i, intf) in node.interfaces.iter().enumerate() {
                interfaces.push(InterfaceSnapshot {
                    node: node.id.clone(),
                    interface: intf.id.clone(),
                    stats: self.stats[n][i].clone(),
                });
            }
        }
        Snapshot {
            id: format!("snap-{:06}", self.snapshot_seq),
            t: self.clock.now,
            interfaces,
            node_status: self
                .topo
                .nodes
                .iter()
                .map(|n| (n.id.clone(), n.status))
                .collect(),
            link_states: self.topo.links.iter().map(|l| l.state).collect(),
            forwarding: self.fwd.clone(),
            logs_cursor: self.logs().len(),
        }
    }
}
