//! Hop-by-hop packet walks over the current forwarding state.

use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::routing::RouteAction;
use super::{NetworkState, SimError};
use crate::topology::{AclAction, AclProto, AdminState, LinkState, NodeId, NodeKind, NodeStatus};

/// Maximum number of link traversals before a packet is discarded.
pub const HOP_BUDGET: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketProto {
    Icmp,
    Tcp,
    Udp,
}

#[derive(Clone, Copy, Debug)]
pub struct Packet {
    pub src: usize,
    pub dst: Ipv4Addr,
    pub size: u32,
    pub proto: PacketProto,
    pub dst_port: u16,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "node")]
pub enum FailReason {
    Unreachable(NodeId),
    AclDenied(NodeId),
    Blackholed(NodeId),
    MtuExceeded(NodeId),
    NodeCrashed(NodeId),
    TtlExceeded(NodeId),
    Corrupted,
    ServiceOverloaded(NodeId),
    Refused(NodeId),
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::Unreachable(n) => write!(f, "unreachable({n})"),
            FailReason::AclDenied(n) => write!(f, "acl_denied({n})"),
            FailReason::Blackholed(n) => write!(f, "blackholed({n})"),
            FailReason::MtuExceeded(n) => write!(f, "mtu_exceeded({n})"),
            FailReason::NodeCrashed(n) => write!(f, "node_crashed({n})"),
            FailReason::TtlExceeded(n) => write!(f, "ttl_exceeded({n})"),
            FailReason::Corrupted => write!(f, "corrupted"),
            FailReason::ServiceOverloaded(n) => write!(f, "service_overloaded({n})"),
            FailReason::Refused(n) => write!(f, "refused({n})"),
        }
    }
}

/// Which drop counter a failed walk charges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum DropKind {
    Acl,
    Mtu,
    Ttl,
    NoRoute,
    /// Lost into a crashed node; no live counter records it.
    Crashed,
}

#[derive(Clone, Debug)]
pub(crate) struct Failure {
    pub reason: FailReason,
    pub node: usize,
    /// Interface on `node` whose drop counter is charged.
    pub interface: Option<usize>,
    pub kind: DropKind,
}

#[derive(Clone, Debug)]
pub(crate) struct Walk {
    /// Nodes reached after each traversal, in order.
    pub hops: Vec<usize>,
    /// `(link, direction)` per traversal; direction 0 is a->b.
    pub links: Vec<(usize, usize)>,
    pub outcome: Result<usize, Failure>,
}

impl NetworkState {
    pub(crate) fn walk(&self, pkt: Packet) -> Walk {
        let topo = &self.topo;
        let src_ip = topo.nodes[pkt.src]
            .primary_address()
            .unwrap_or(Ipv4Addr::UNSPECIFIED);
        let mut hops = Vec::new();
        let mut links = Vec::new();
        let mut cur = pkt.src;
        let mut ingress: Option<usize> = None;
        // Set while a gateway switches a frame at layer 2 toward an on-link host.
        let mut l2_egress: Option<usize> = None;

        let fail =
            |reason: FailReason, node: usize, interface: Option<usize>, kind: DropKind| Failure {
                reason,
                node,
                interface,
                kind,
            };
        let first_intf = |node: usize| (!topo.nodes[node].interfaces.is_empty()).then_some(0);

        loop {
            let node = &topo.nodes[cur];
            let attribution = ingress.or_else(|| first_intf(cur));
            if node.status == NodeStatus::Crashed {
                return Walk {
                    hops,
                    links,
                    outcome: Err(fail(
                        FailReason::NodeCrashed(node.id.clone()),
                        cur,
                        None,
                        DropKind::Crashed,
                    )),
                };
            }
            if ingress.is_some() && !self.acl_permits(cur, src_ip, &pkt) {
                return Walk {
                    hops,
                    links,
                    outcome: Err(fail(
                        FailReason::AclDenied(node.id.clone()),
                        cur,
                        attribution,
                        DropKind::Acl,
                    )),
                };
            }

            let egress = match l2_egress.take() {
                Some(e) => e,
                None => {
                    if self.owns_address(cur, pkt.dst) {
                        return Walk {
                            hops,
                            links,
                            outcome: Ok(cur),
                        };
                    }
                    let unreachable = || {
                        fail(
                            FailReason::Unreachable(node.id.clone()),
                            cur,
                            attribution,
                            DropKind::NoRoute,
                        )
                    };
                    if ingress.is_some() && !node.kind.forwards() {
                        return Walk {
                            hops,
                            links,
                            outcome: Err(unreachable()),
                        };
                    }
                    let Some(route) = self.fwd.lookup(cur, pkt.dst) else {
                        return Walk {
                            hops,
                            links,
                            outcome: Err(unreachable()),
                        };
                    };
                    match &route.action {
                        RouteAction::Local => {
                            return Walk {
                                hops,
                                links,
                                outcome: Ok(cur),
                            }
                        }
                        RouteAction::Unreachable => {
                            return Walk {
                                hops,
                                links,
                                outcome: Err(unreachable()),
                            }
                        }
                        RouteAction::Blackhole => {
                            return Walk {
                                hops,
                                links,
                                outcome: Err(fail(
                                    FailReason::Blackholed(node.id.clone()),
                                    cur,
                                    attribution,
                                    DropKind::NoRoute,
                                )),
                            }
                        }
                        RouteAction::Forward { interface, .. } => {
                            match self.idx.intf[cur].get(interface) {
                                Some(&i) => i,
                                None => {
                                    return Walk {
                                        hops,
                                        links,
                                        outcome: Err(unreachable()),
                                    }
                                }
                            }
                        }
                        RouteAction::Connected => match self.resolve_on_link(cur, pkt.dst) {
                            Some((i, l2)) => {
                                l2_egress = l2;
                                i
                            }
                            None => {
                                return Walk {
                                    hops,
                                    links,
                                    outcome: Err(unreachable()),
                                }
                            }
                        },
                    }
                }
            };

            let unreachable_here = || {
                fail(
                    FailReason::Unreachable(node.id.clone()),
                    cur,
                    Some(egress),
                    DropKind::NoRoute,
                )
            };
            let Some(link) = self.idx.link_at[cur][egress] else {
                return Walk {
                    hops,
                    links,
                    outcome: Err(unreachable_here()),
                };
            };
            let l = &topo.links[link];
            let (peer, peer_intf) = self.idx.peer(link, cur);
            if l.state != LinkState::Up
                || node.interfaces[egress].admin_state != AdminState::Up
                || topo.nodes[peer].interfaces[peer_intf].admin_state != AdminState::Up
            {
                return Walk {
                    hops,
                    links,
                    outcome: Err(unreachable_here()),
                };
            }
            if pkt.size > node.interfaces[egress].mtu
                || pkt.size > topo.nodes[peer].interfaces[peer_intf].mtu
            {
                return Walk {
                    hops,
                    links,
                    outcome: Err(fail(
                        FailReason::MtuExceeded(node.id.clone()),
                        cur,
                        Some(egress),
                        DropKind::Mtu,
                    )),
                };
            }
            if links.len() >= HOP_BUDGET {
                return Walk {
                    hops,
                    links,
                    outcome: Err(fail(
                        FailReason::TtlExceeded(node.id.clone()),
                        cur,
                        attribution,
                        DropKind::Ttl,
                    )),
                };
            }
            let dir = if self.idx.link_ends[link][0].0 == cur {
                0
            } else {
                1
            };
            links.push((link, dir));
            hops.push(peer);
            cur = peer;
            ingress = Some(peer_intf);
        }
    }

    /// On-link delivery from `node` toward `dst`.
    ///
    /// Returns the local egress interface and, when a host reaches a peer
    /// behind its gateway switch, the gateway interface the frame leaves by.
    fn resolve_on_link(&self, node: usize, dst: Ipv4Addr) -> Option<(usize, Option<usize>)> {
        let topo = &self.topo;
        let n = &topo.nodes[node];
        for (ii, intf) in n.interfaces.iter().enumerate() {
            if !intf.subnet().contains(&dst) {
                continue;
            }
            let Some(link) = self.idx.link_at[node][ii] else {
                continue;
            };
            let (peer, pi) = self.idx.peer(link, node);
            let pn = &topo.nodes[peer];
            if pn.interfaces[pi].ip == dst {
                return Some((ii, None));
            }
            if n.kind == NodeKind::Host && pn.kind != NodeKind::Host {
                // Layer-2 neighbor behind the same gateway.
                for (gi, _) in pn.interfaces.iter().enumerate() {
                    let Some(gl) = self.idx.link_at[peer][gi] else {
                        continue;
                    };
                    if gl == link {
                        continue;
                    }
                    let (other, oi) = self.idx.peer(gl, peer);
                    let on = &topo.nodes[other];
                    if on.kind == NodeKind::Host && on.interfaces[oi].ip == dst {
                        return Some((ii, Some(gi)));
                    }
                }
            }
        }
        None
    }

    pub(crate) fn owns_address(&self, node: usize, addr: Ipv4Addr) -> bool {
        let n = &self.topo.nodes[node];
        n.loopback == Some(addr)
            || n.interfaces
                .iter()
                .any(|i| i.ip == addr && i.admin_state == AdminState::Up)
    }

    fn acl_permits(&self, node: usize, src: Ipv4Addr, pkt: &Packet) -> bool {
        for rule in &self.topo.nodes[node].config.acl_rules {
            let proto_ok = match rule.proto {
                AclProto::Any => true,
                AclProto::Icmp => pkt.proto == PacketProto::Icmp,
                AclProto::Tcp => pkt.proto == PacketProto::Tcp,
                AclProto::Udp => pkt.proto == PacketProto::Udp,
            };
            let port_ok = rule.dst_ports.is_empty()
                || (pkt.proto != PacketProto::Icmp && rule.dst_ports.contains(&pkt.dst_port));
            if proto_ok && port_ok && rule.src.contains(&src) && rule.dst.contains(&pkt.dst) {
                return rule.action == AclAction::Permit;
            }
        }
        true
    }

    pub(crate) fn destination_address(&self, node: usize) -> Result<Ipv4Addr, SimError> {
        self.topo.nodes[node]
            .primary_address()
            .ok_or_else(|| SimError::NoAddress(self.topo.nodes[node].id.to_string()))
    }
}
