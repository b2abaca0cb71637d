//! Forwarding-table computation.
//!
//! Dynamic routes are hop-count shortest paths over the adjacency graph with
//! ties broken by the lexicographically smallest next-hop id. Hosts use their
//! gateway as default route. Static routes are overlaid last and win ties
//! against computed entries of the same prefix length.

use std::collections::{BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use super::TopoIndex;
use crate::topology::{
    AdminState, InterfaceId, LinkState, NodeId, NodeKind, NodeStatus, StaticNextHop, Topology,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RouteAction {
    /// Address owned by this node.
    Local,
    /// On-link subnet; delivered to the neighbor owning the address.
    Connected,
    Forward {
        interface: InterfaceId,
        next_hop: NodeId,
    },
    Blackhole,
    Unreachable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteOrigin {
    Connected,
    Dynamic,
    Static,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub prefix: Ipv4Net,
    pub action: RouteAction,
    pub origin: RouteOrigin,
}

/// Per-node forwarding tables, indexed like `Topology::nodes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardingState {
    pub tables: Vec<Vec<RouteEntry>>,
    pub derived_at: u64,
}

impl ForwardingState {
    /// Longest-prefix match; on equal length a static entry beats a computed one.
    pub fn lookup(&self, node: usize, dst: Ipv4Addr) -> Option<&RouteEntry> {
        self.tables[node]
            .iter()
            .filter(|e| e.prefix.contains(&dst))
            .max_by(|a, b| {
                (a.prefix.prefix_len(), a.origin == RouteOrigin::Static)
                    .cmp(&(b.prefix.prefix_len(), b.origin == RouteOrigin::Static))
            })
    }
}

/// Whether a link currently contributes an edge to the routing graph.
pub(crate) fn link_is_adjacent(topo: &Topology, idx: &TopoIndex, link: usize) -> bool {
    let l = &topo.links[link];
    if l.state != LinkState::Up {
        return false;
    }
    let [(na, ia), (nb, ib)] = idx.link_ends[link];
    let (a, b) = (&topo.nodes[na], &topo.nodes[nb]);
    if a.status != NodeStatus::Up || b.status != NodeStatus::Up {
        return false;
    }
    if a.interfaces[ia].admin_state != AdminState::Up
        || b.interfaces[ib].admin_state != AdminState::Up
    {
        return false;
    }
    if a.kind == NodeKind::Router && b.kind == NodeKind::Router {
        let area_a = a.config.ospf_area_by_interface.get(&a.interfaces[ia].id);
        let area_b = b.config.ospf_area_by_interface.get(&b.interfaces[ib].id);
        if area_a != area_b {
            return false;
        }
    }
    true
}

/// Adjacency lists: `(neighbor node, local interface, link)` per node.
pub(crate) fn adjacency(topo: &Topology, idx: &TopoIndex) -> Vec<Vec<(usize, usize, usize)>> {
    let mut adj = vec![Vec::new(); topo.nodes.len()];
    for link in 0..topo.links.len() {
        if !link_is_adjacent(topo, idx, link) {
            continue;
        }
        let [(na, ia), (nb, ib)] = idx.link_ends[link];
        adj[na].push((nb, ia, link));
        adj[nb].push((na, ib, link));
    }
    adj
}

/// Subnets a gateway serves toward attached hosts.
pub(crate) fn gateway_subnets(topo: &Topology, idx: &TopoIndex, node: usize) -> BTreeSet<Ipv4Net> {
    let n = &topo.nodes[node];
    let mut out = BTreeSet::new();
    if n.kind == NodeKind::Host {
        return out;
    }
    for (ii, intf) in n.interfaces.iter().enumerate() {
        if let Some(link) = idx.link_at[node][ii] {
            let (peer, _) = idx.peer(link, node);
            if topo.nodes[peer].kind == NodeKind::Host {
                out.insert(intf.subnet());
            }
        }
    }
    out
}

/// Compute every node's forwarding table from the current topology state.
pub fn recompute_routes(topo: &Topology, idx: &TopoIndex, now: u64) -> ForwardingState {
    let n = topo.nodes.len();
    let adj = adjacency(topo, idx);
    let mut tables: Vec<Vec<RouteEntry>> = vec![Vec::new(); n];

    // Advertised destinations: gateway subnets and loopbacks, with their owner.
    let mut dests: Vec<(Ipv4Net, usize, RouteAction)> = Vec::new();
    for (i, node) in topo.nodes.iter().enumerate() {
        if let Some(lo) = node.loopback {
            dests.push((Ipv4Net::new(lo, 32).expect("/32"), i, RouteAction::Local));
        }
        for s in gateway_subnets(topo, idx, i) {
            dests.push((s, i, RouteAction::Connected));
        }
    }

    for (prefix, owner, own_action) in &dests {
        let dist = bfs_from(topo, &adj, *owner);
        for node in 0..n {
            if topo.nodes[node].kind == NodeKind::Host {
                continue;
            }
            let origin = if node == *owner {
                RouteOrigin::Connected
            } else {
                RouteOrigin::Dynamic
            };
            let action = if node == *owner {
                own_action.clone()
            } else {
                next_hop(topo, &adj, &dist, node, *owner)
                    .map(|(nb, intf)| RouteAction::Forward {
                        interface: topo.nodes[node].interfaces[intf].id.clone(),
                        next_hop: topo.nodes[nb].id.clone(),
                    })
                    .unwrap_or(RouteAction::Unreachable)
            };
            tables[node].push(RouteEntry {
                prefix: *prefix,
                action,
                origin,
            });
        }
    }

    for (node, h) in topo.nodes.iter().enumerate() {
        if h.kind != NodeKind::Host {
            continue;
        }
        let Some(intf) = h.interfaces.first() else {
            continue;
        };
        if intf.admin_state == AdminState::Up {
            tables[node].push(RouteEntry {
                prefix: intf.subnet(),
                action: RouteAction::Connected,
                origin: RouteOrigin::Connected,
            });
        }
        let default = idx.link_at[node][0]
            .filter(|&l| link_is_adjacent(topo, idx, l))
            .and_then(|l| {
                let (peer, pi) = idx.peer(l, node);
                let gw_ip = topo.nodes[peer].interfaces[pi].ip;
                intf.subnet()
                    .contains(&gw_ip)
                    .then(|| RouteAction::Forward {
                        interface: intf.id.clone(),
                        next_hop: topo.nodes[peer].id.clone(),
                    })
            })
            .unwrap_or(RouteAction::Unreachable);
        tables[node].push(RouteEntry {
            prefix: Ipv4Net::default(),
            action: default,
            origin: RouteOrigin::Dynamic,
        });
    }

    for (node, nd) in topo.nodes.iter().enumerate() {
        for sr in &nd.config.static_routes {
            let action = match &sr.next_hop {
                StaticNextHop::Blackhole => RouteAction::Blackhole,
                StaticNextHop::Interface(i) => {
                    match idx.intf[node].get(i).and_then(|&ii| idx.link_at[node][ii]) {
                        Some(link) => {
                            let (peer, _) = idx.peer(link, node);
                            RouteAction::Forward {
                                interface: i.clone(),
                                next_hop: topo.nodes[peer].id.clone(),
                            }
                        }
                        None => RouteAction::Unreachable,
                    }
                }
            };
            tables[node].push(RouteEntry {
                prefix: sr.prefix,
                action,
                origin: RouteOrigin::Static,
            });
        }
    }

    for t in &mut tables {
        t.sort_by_key(|a| (a.prefix, a.origin));
    }
    ForwardingState {
        tables,
        derived_at: now,
    }
}

/// Hop distances to `owner`; only forwarding nodes (and the owner) relay.
fn bfs_from(topo: &Topology, adj: &[Vec<(usize, usize, usize)>], owner: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; topo.nodes.len()];
    dist[owner] = Some(0);
    let mut q = VecDeque::from([owner]);
    while let Some(u) = q.pop_front() {
        if u != owner && !topo.nodes[u].kind.forwards() {
            continue;
        }
        let du = dist[u].expect("queued nodes have a distance");
        for &(v, _, _) in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// Lexicographically smallest neighbor one hop closer to `owner`.
fn next_hop(
    topo: &Topology,
    adj: &[Vec<(usize, usize, usize)>],
    dist: &[Option<u32>],
    node: usize,
    owner: usize,
) -> Option<(usize, usize)> {
    let d = dist[node]?;
    adj[node]
        .iter()
        .filter(|(m, _, _)| {
            dist[*m] == Some(d - 1) && (*m == owner || topo.nodes[*m].kind.forwards())
        })
        .min_by(|(m1, i1, _), (m2, i2, _)| {
            (&topo.nodes[*m1].id, &topo.nodes[node].interfaces[*i1].id)
                .cmp(&(&topo.nodes[*m2].id, &topo.nodes[node].interfaces[*i2].id))
        })
        .map(|&(m, i, _)| (m, i))
}
