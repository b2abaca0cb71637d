//! Which `(dev, comp)` pairs each root cause may target.
//!
//! [`check_target`] is the structural rule used when loading specs.
//! [`eligible_entities`] narrows it to entities that carry traffic on the
//! healthy network, so that seeded expansion always yields an observable fault.

use std::collections::{BTreeMap, BTreeSet};

use super::catalog::{RootCause, Target};
use crate::sim::{NetworkState, RouteAction};
use crate::topology::{Component, Entity, NodeId, NodeKind, Topology};

/// Structural compatibility of a cause with a target entity.
pub fn check_target(
    cause: RootCause,
    topo: &Topology,
    dev: &NodeId,
    comp: &Component,
) -> Result<(), String> {
    let node = topo
        .node(dev)
        .ok_or_else(|| format!("unknown node {dev}"))?;
    let need = |what: &str| Err(format!("{cause} cannot target {dev}/{comp}: needs {what}"));
    let linked_peer = |c: &Component| {
        c.interface()
            .filter(|i| node.interface(i).is_some())
            .and_then(|i| topo.neighbor(dev, i))
            .and_then(|ep| topo.node(&ep.node))
    };
    match cause.target() {
        Target::FabricInterface => {
            if !node.kind.forwards() || linked_peer(comp).is_none() {
                return need("a switch or router interface with a link");
            }
        }
        Target::HostSystem => {
            if !node.is_host() || *comp != Component::System {
                return need("a host's system component");
            }
        }
        Target::ForwarderSystem => {
            if !node.kind.forwards() || *comp != Component::System {
                return need("a switch or router system component");
            }
        }
        Target::HostInterface => {
            if !node.is_host() || comp.interface().is_none() {
                return need("a host interface");
            }
        }
        Target::RouterPeerInterface => {
            if node.kind != NodeKind::Router
                || linked_peer(comp).map(|p| p.kind) != Some(NodeKind::Router)
            {
                return need("a router interface facing another router");
            }
        }
        Target::ForwarderRouting => {
            if !node.kind.forwards() || *comp != Component::Routing {
                return need("a switch or router routing component");
            }
            if cause == RootCause::FwdEntryMisconfig && topo.attached_hosts(dev).len() < 2 {
                return need("a gateway with at least two attached hosts");
            }
        }
        Target::ForwarderAcl => {
            if !node.kind.forwards() || *comp != Component::Acl {
                return need("a switch or router acl component");
            }
        }
        Target::VictimPort => {
            if !node.kind.forwards() || !linked_peer(comp).is_some_and(|p| p.is_host()) {
                return need("a switch or router interface facing a host");
            }
        }
        Target::HostService => {
            if !node.is_host() || *comp != Component::Service || node.config.services.is_empty() {
                return need("a host's service component");
            }
        }
    }
    Ok(())
}

/// Where healthy host-to-host traffic goes.
#[derive(Clone, Debug)]
pub struct PathUsage {
    pub state: NetworkStateView,
    /// Links crossed by at least one host pair.
    pub links: BTreeSet<usize>,
    /// For each transit node, the destination hosts it forwards toward.
    pub dests: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

/// Healthy forwarding facts kept from the probe state.
#[derive(Clone, Debug)]
pub struct NetworkStateView {
    pub next_hop: BTreeMap<(NodeId, NodeId), NodeId>,
}

impl PathUsage {
    pub fn compute(topo: &Topology) -> Self {
        let s = NetworkState::new(topo.clone(), 0);
        let hosts = topo.host_ids();
        let mut links = BTreeSet::new();
        let mut dests: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut next_hop = BTreeMap::new();
        for src in &hosts {
            for dst in &hosts {
                if src == dst {
                    continue;
                }
                let Ok(tr) = s.trace_path(src, dst) else {
                    continue;
                };
                if let Ok((ls, _)) = s.path_links(src, dst) {
                    links.extend(ls);
                }
                for hop in &tr.hops {
                    if &hop.node != dst {
                        dests
                            .entry(hop.node.clone())
                            .or_default()
                            .insert(dst.clone());
                    }
                }
            }
        }
        for (n, node) in topo.nodes.iter().enumerate() {
            if !node.kind.forwards() {
                continue;
            }
            for h in &hosts {
                let ip = topo.node(h).expect("host").interfaces[0].ip;
                if let Some(RouteAction::Forward { next_hop: nh, .. }) =
                    s.forwarding().lookup(n, ip).map(|e| &e.action)
                {
                    next_hop.insert((node.id.clone(), h.clone()), nh.clone());
                }
            }
        }
        PathUsage {
            state: NetworkStateView { next_hop },
            links,
            dests,
        }
    }

    pub fn transits(&self, node: &NodeId) -> bool {
        self.dests.get(node).is_some_and(|d| !d.is_empty())
    }

    fn link_used(&self, topo: &Topology, dev: &NodeId, comp: &Component) -> bool {
        comp.interface()
            .and_then(|i| topo.link_at(dev, i))
            .is_some_and(|l| self.links.contains(&l))
    }

    /// Destination whose traffic `dev` forwards to another forwarding node.
    pub fn loop_victim(&self, topo: &Topology, dev: &NodeId) -> Option<(NodeId, NodeId)> {
        self.dests.get(dev)?.iter().find_map(|h| {
            let nh = self.state.next_hop.get(&(dev.clone(), h.clone()))?;
            topo.node(nh)
                .filter(|n| n.kind.forwards())
                .map(|_| (h.clone(), nh.clone()))
        })
    }
}

/// Entities a seeded template may bind for `cause`, in universe order.
pub fn eligible_entities(cause: RootCause, topo: &Topology) -> Vec<Entity> {
    let usage = PathUsage::compute(topo);
    eligible_with(cause, topo, &usage)
}

pub fn eligible_with(cause: RootCause, topo: &Topology, usage: &PathUsage) -> Vec<Entity> {
    topo.entity_universe()
        .into_iter()
        .filter(|e| check_target(cause, topo, &e.node, &e.component).is_ok())
        .filter(|e| match cause.target() {
            Target::FabricInterface | Target::RouterPeerInterface => {
                usage.link_used(topo, &e.node, &e.component)
            }
            Target::ForwarderSystem | Target::ForwarderAcl => usage.transits(&e.node),
            Target::ForwarderRouting => match cause {
                RootCause::ForwardingLoop => usage.loop_victim(topo, &e.node).is_some(),
                RootCause::FwdEntryMisconfig => true,
                _ => usage.transits(&e.node),
            },
            _ => true,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_scenario, Scenario, Size};

    #[test]
    fn host_crash_on_isp_small_is_the_two_hosts() {
        let t = build_scenario(Scenario::IspMesh, Size::S, 0);
        let e = eligible_entities(RootCause::HostCrash, &t);
        assert_eq!(e.len(), 2);
        assert!(e
            .iter()
            .all(|x| x.node.as_str().starts_with("cust.h") && x.component == Component::System));
    }

    #[test]
    fn idle_spine_is_not_eligible_for_acl() {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        let e = eligible_entities(RootCause::IcmpAclBlock, &t);
        let nodes: Vec<&str> = e.iter().map(|x| x.node.as_str()).collect();
        assert!(nodes.contains(&"spine0"));
        assert!(!nodes.contains(&"spine1"));
        assert!(check_target(
            RootCause::IcmpAclBlock,
            &t,
            &"spine1".into(),
            &Component::Acl
        )
        .is_ok());
    }

    #[test]
    fn structural_rules() {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        assert!(check_target(
            RootCause::SwitchCrash,
            &t,
            &"pod0.h0".into(),
            &Component::System
        )
        .is_err());
        assert!(check_target(
            RootCause::IncastTraffic,
            &t,
            &"pod0.leaf0".into(),
            &"eth2".parse().unwrap()
        )
        .is_ok());
        assert!(check_target(
            RootCause::IncastTraffic,
            &t,
            &"pod0.leaf0".into(),
            &"eth0".parse().unwrap()
        )
        .is_err());
        assert!(eligible_entities(RootCause::OspfAreaMismatch, &t).is_empty());
    }
}
