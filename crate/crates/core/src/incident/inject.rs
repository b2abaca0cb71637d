//! Injection semantics: each issue becomes timed simulator mutations.

use std::net::Ipv4Addr;

use ipnet::Ipv4Net;
use serde_json::Value;

use super::catalog::RootCause;
use super::eligibility::PathUsage;
use super::spec::{resolve_sources, IncidentSpec, Issue, TriggerWorkload};
use crate::sim::{Mutation, RouteAction, Severity, TriggerKind, TriggerSpec};
use crate::topology::{
    AclAction, AclProto, Endpoint, InterfaceId, LinkState, NodeId, NodeStatus, StaticNextHop,
    StaticRoute, Topology,
};

pub const DEFAULT_FLAP_UP_MS: u64 = 4000;
pub const DEFAULT_FLAP_DOWN_MS: u64 = 1000;
pub const DEFAULT_ERROR_RATE: f64 = 0.05;
pub const DEFAULT_BAD_MTU: u32 = 576;
pub const DEFAULT_WIDE_NETMASK: u8 = 8;
/// Aggregate incast offered load as a multiple of the victim port's capacity.
pub const INCAST_OVERLOAD: f64 = 3.2;
pub const INCAST_INTERVAL_S: f64 = 20.0;
pub const INCAST_BURST_MS: u64 = 2000;
pub const MICROBURST_OVERLOAD: f64 = 6.0;
pub const MICROBURST_INTERVAL_S: f64 = 2.0;
pub const MICROBURST_BURST_MS: u64 = 30;
pub const DOS_OVERLOAD: f64 = 5.0;

/// A mutation and the absolute virtual time it applies at.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedMutation {
    pub at_ms: u64,
    pub mutation: Mutation,
}

fn param_u64(iss: &Issue, k: &str) -> Option<u64> {
    iss.params.get(k).and_then(Value::as_u64)
}

fn param_f64(iss: &Issue, k: &str) -> Option<f64> {
    iss.params.get(k).and_then(Value::as_f64)
}

fn param_host(iss: &Issue, k: &str) -> Option<NodeId> {
    iss.params.get(k).and_then(Value::as_str).map(NodeId::new)
}

fn host_ip(topo: &Topology, h: &NodeId) -> Option<Ipv4Addr> {
    topo.node(h).and_then(|n| n.primary_address())
}

fn host_route(ip: Ipv4Addr, next_hop: StaticNextHop) -> StaticRoute {
    StaticRoute {
        prefix: Ipv4Net::new(ip, 32).expect("/32"),
        next_hop,
    }
}

fn intf_of(iss: &Issue) -> InterfaceId {
    iss.comp
        .interface()
        .cloned()
        .unwrap_or_else(|| InterfaceId::eth(0))
}

fn log(node: &NodeId, severity: Severity, text: String) -> Mutation {
    Mutation::Log {
        node: node.clone(),
        severity,
        text,
    }
}

/// Host a routing fault on `dev` is aimed at, when not given explicitly.
pub fn default_routing_victim(
    cause: RootCause,
    topo: &Topology,
    usage: &PathUsage,
    dev: &NodeId,
) -> Option<NodeId> {
    match cause {
        RootCause::StaticBlackhole => usage.dests.get(dev).and_then(|d| d.iter().next().cloned()),
        RootCause::FwdEntryMisconfig => topo.attached_hosts(dev).first().map(|(_, h)| h.clone()),
        RootCause::ForwardingLoop => usage.loop_victim(topo, dev).map(|(h, _)| h),
        _ => None,
    }
}

/// The host whose traffic a traffic-induced cause hurts.
pub fn victim_host(topo: &Topology, iss: &Issue) -> Option<NodeId> {
    match iss.root_cause {
        RootCause::IncastTraffic | RootCause::Microburst => topo
            .neighbor(&iss.dev, iss.comp.interface()?)
            .map(|e| e.node.clone()),
        RootCause::DosFlood => Some(iss.dev.clone()),
        _ => None,
    }
}

fn victim_capacity(topo: &Topology, iss: &Issue) -> f64 {
    let at = match iss.root_cause {
        RootCause::DosFlood => topo
            .node(&iss.dev)
            .and_then(|n| n.interfaces.first())
            .map(|i| (iss.dev.clone(), i.id.clone())),
        _ => iss.comp.interface().map(|i| (iss.dev.clone(), i.clone())),
    };
    at.and_then(|(n, i)| topo.link_at(&n, &i))
        .map(|l| topo.links[l].capacity_mbps)
        .unwrap_or(100.0)
}

fn sender_nic(topo: &Topology, h: &NodeId) -> f64 {
    topo.node(h)
        .and_then(|n| n.interfaces.first())
        .and_then(|i| topo.link_at(h, &i.id))
        .map(|l| topo.links[l].capacity_mbps)
        .unwrap_or(100.0)
}

/// Default triggering workload for a traffic cause with no matching trigger in the spec.
pub fn default_trigger(topo: &Topology, iss: &Issue) -> Option<TriggerWorkload> {
    let dst = victim_host(topo, iss)?;
    let cap = victim_capacity(topo, iss);
    let senders = resolve_sources(topo, "all", &dst);
    let n = senders.len().max(1) as f64;
    let nic = senders
        .iter()
        .map(|h| sender_nic(topo, h))
        .fold(f64::INFINITY, f64::min);
    Some(match iss.root_cause {
        RootCause::IncastTraffic => TriggerWorkload {
            kind: TriggerKind::IncastOd,
            src: "all".into(),
            dst,
            interval: param_f64(iss, "interval_s").unwrap_or(INCAST_INTERVAL_S),
            rate: Some(param_f64(iss, "rate_mbps").unwrap_or(INCAST_OVERLOAD * cap / n)),
            burst_len: param_u64(iss, "burst_len_ms").unwrap_or(INCAST_BURST_MS),
        },
        RootCause::Microburst => TriggerWorkload {
            kind: TriggerKind::Burst,
            src: "all".into(),
            dst,
            interval: param_f64(iss, "interval_s").unwrap_or(MICROBURST_INTERVAL_S),
            rate: Some(
                param_f64(iss, "rate_mbps")
                    .unwrap_or((MICROBURST_OVERLOAD * cap / n).min(0.95 * nic)),
            ),
            burst_len: param_u64(iss, "burst_len_ms").unwrap_or(MICROBURST_BURST_MS),
        },
        RootCause::DosFlood => {
            let rps = topo
                .node(&iss.dev)
                .and_then(|n| n.config.services.first())
                .map_or(1000.0, |s| s.capacity_rps as f64);
            TriggerWorkload {
                kind: TriggerKind::RequestFlood,
                src: "all".into(),
                dst,
                interval: 0.0,
                rate: Some(param_f64(iss, "rate_rps").unwrap_or(DOS_OVERLOAD * rps)),
                burst_len: 0,
            }
        }
        _ => return None,
    })
}

/// Resolve a spec trigger to simulator form, filling a default rate when absent.
pub fn resolve_trigger(topo: &Topology, t: &TriggerWorkload, spec: &IncidentSpec) -> TriggerSpec {
    let sources = resolve_sources(topo, &t.src, &t.dst);
    let rate = t.rate.unwrap_or_else(|| {
        // Borrow the default of the traffic issue aimed at this destination, if any.
        spec.issues
            .iter()
            .filter(|i| victim_host(topo, i).as_ref() == Some(&t.dst))
            .find_map(|i| default_trigger(topo, i))
            .and_then(|d| d.rate)
            .unwrap_or(match t.kind {
                TriggerKind::RequestFlood => 5000.0,
                _ => INCAST_OVERLOAD * 100.0 / sources.len().max(1) as f64,
            })
    });
    TriggerSpec {
        kind: t.kind,
        sources,
        dst: t.dst.clone(),
        rate,
        burst_len_ms: t.burst_len,
        interval_ms: (t.interval * 1000.0).round() as u64,
    }
}

/// Every trigger the run arms: the spec's own, plus defaults for uncovered traffic issues.
pub fn effective_triggers(spec: &IncidentSpec, topo: &Topology) -> Vec<TriggerWorkload> {
    let mut out = spec.workload.triggering.clone();
    for iss in spec.issues.iter().filter(|i| i.root_cause.is_traffic()) {
        let Some(v) = victim_host(topo, iss) else {
            continue;
        };
        let kind = match iss.root_cause {
            RootCause::IncastTraffic => TriggerKind::IncastOd,
            RootCause::Microburst => TriggerKind::Burst,
            _ => TriggerKind::RequestFlood,
        };
        if !out.iter().any(|t| t.dst == v && t.kind == kind) {
            out.extend(default_trigger(topo, iss));
        }
    }
    out
}

/// The full timed mutation plan for `spec`; a pure function of its inputs.
pub fn injection_plan(spec: &IncidentSpec, topo: &Topology) -> Vec<PlannedMutation> {
    let usage = if spec
        .issues
        .iter()
        .any(|i| i.root_cause.target() == super::catalog::Target::ForwarderRouting)
    {
        Some(PathUsage::compute(topo))
    } else {
        None
    };
    let mut plan = Vec::new();
    for iss in &spec.issues {
        let at_ms = spec.warmup_ms + iss.inject_at_ms;
        for mutation in issue_mutations(iss, topo, usage.as_ref()) {
            plan.push(PlannedMutation { at_ms, mutation });
        }
    }
    let trigger_at = spec
        .issues
        .iter()
        .map(|i| i.inject_at_ms)
        .min()
        .map_or(spec.warmup_ms, |t| spec.warmup_ms + t);
    for t in effective_triggers(spec, topo) {
        plan.push(PlannedMutation {
            at_ms: trigger_at,
            mutation: Mutation::ArmTrigger {
                trigger: resolve_trigger(topo, &t, spec),
            },
        });
    }
    plan.sort_by_key(|p| p.at_ms);
    plan
}

fn issue_mutations(iss: &Issue, topo: &Topology, usage: Option<&PathUsage>) -> Vec<Mutation> {
    let dev = &iss.dev;
    let at = || Endpoint {
        node: dev.clone(),
        interface: intf_of(iss),
    };
    match iss.root_cause {
        RootCause::LinkDown => vec![Mutation::SetLinkState {
            at: at(),
            state: LinkState::Down,
        }],
        RootCause::LinkDetached => vec![Mutation::SetLinkState {
            at: at(),
            state: LinkState::Detached,
        }],
        RootCause::LinkFlap => vec![Mutation::StartFlap {
            at: at(),
            up_ms: param_u64(iss, "up_ms").unwrap_or(DEFAULT_FLAP_UP_MS),
            down_ms: param_u64(iss, "down_ms").unwrap_or(DEFAULT_FLAP_DOWN_MS),
        }],
        RootCause::FaultyCable => vec![Mutation::SetErrorRate {
            at: at(),
            error_rate: param_f64(iss, "error_rate").unwrap_or(DEFAULT_ERROR_RATE),
        }],
        RootCause::MtuFragmentationDisabled => vec![Mutation::SetLinkMtu {
            at: at(),
            mtu: param_u64(iss, "mtu").map_or(DEFAULT_BAD_MTU, |m| m as u32),
        }],
        RootCause::HostCrash | RootCause::SwitchCrash => vec![Mutation::SetNodeStatus {
            node: dev.clone(),
            status: NodeStatus::Crashed,
        }],
        RootCause::HostIpMisconfig => {
            let intf = intf_of(iss);
            let cur = topo.node(dev).and_then(|n| n.interface(&intf)).cloned();
            let Some(cur) = cur else { return Vec::new() };
            let ip = iss
                .params
                .get("ip")
                .and_then(Value::as_str)
                .and_then(|s| s.parse().ok())
                .unwrap_or_else(|| off_subnet(cur.ip));
            vec![
                Mutation::SetInterfaceAddress {
                    at: at(),
                    ip,
                    netmask: cur.netmask,
                },
                log(
                    dev,
                    Severity::Notice,
                    format!("ADDR_CHANGE {intf}: address set to {ip}"),
                ),
            ]
        }
        RootCause::IncorrectNetmask => {
            let intf = intf_of(iss);
            let Some(cur) = topo.node(dev).and_then(|n| n.interface(&intf)).cloned() else {
                return Vec::new();
            };
            let len = param_u64(iss, "netmask").map_or(DEFAULT_WIDE_NETMASK, |m| m as u8);
            vec![
                Mutation::SetInterfaceAddress {
                    at: at(),
                    ip: cur.ip,
                    netmask: len,
                },
                log(
                    dev,
                    Severity::Notice,
                    format!("MASK_CHANGE {intf}: netmask set to /{len}"),
                ),
            ]
        }
        RootCause::OspfAreaMismatch => {
            let intf = intf_of(iss);
            let cur = topo
                .node(dev)
                .and_then(|n| n.config.ospf_area_by_interface.get(&intf).copied())
                .unwrap_or(0);
            vec![Mutation::SetOspfArea {
                at: at(),
                area: param_u64(iss, "area").map_or(cur + 1, |a| a as u32),
            }]
        }
        RootCause::StaticBlackhole => {
            let Some(victim) = param_host(iss, "victim").or_else(|| {
                usage.and_then(|u| default_routing_victim(iss.root_cause, topo, u, dev))
            }) else {
                return Vec::new();
            };
            let Some(ip) = host_ip(topo, &victim) else {
                return Vec::new();
            };
            vec![
                Mutation::AddStaticRoute {
                    node: dev.clone(),
                    route: host_route(ip, StaticNextHop::Blackhole),
                },
                log(
                    dev,
                    Severity::Notice,
                    format!("STATIC_ROUTE {ip}/32 via Null0 installed"),
                ),
            ]
        }
        RootCause::FwdEntryMisconfig => {
            let attached = topo.attached_hosts(dev);
            let victim =
                param_host(iss, "victim").or_else(|| attached.first().map(|(_, h)| h.clone()));
            let Some(victim) = victim else {
                return Vec::new();
            };
            let wrong = param_host(iss, "wrong").or_else(|| {
                attached
                    .iter()
                    .find(|(_, h)| *h != victim)
                    .map(|(_, h)| h.clone())
            });
            let Some(port) = wrong.and_then(|w| {
                attached
                    .iter()
                    .find(|(_, h)| *h == w)
                    .map(|(i, _)| i.clone())
            }) else {
                return Vec::new();
            };
            let Some(ip) = host_ip(topo, &victim) else {
                return Vec::new();
            };
            vec![
                Mutation::AddStaticRoute {
                    node: dev.clone(),
                    route: host_route(ip, StaticNextHop::Interface(port.clone())),
                },
                log(
                    dev,
                    Severity::Notice,
                    format!("FIB_OVERRIDE {ip}/32 -> {port}"),
                ),
            ]
        }
        RootCause::ForwardingLoop => {
            let victim = param_host(iss, "victim").or_else(|| {
                usage.and_then(|u| default_routing_victim(iss.root_cause, topo, u, dev))
            });
            let Some(victim) = victim else {
                return Vec::new();
            };
            let Some(ip) = host_ip(topo, &victim) else {
                return Vec::new();
            };
            let Some((out_if, peer)) = loop_partner(topo, dev, ip) else {
                return Vec::new();
            };
            let Some(back_if) = topo.links.iter().find_map(|l| {
                l.peer_of(dev, &out_if)
                    .filter(|e| e.node == peer)
                    .map(|e| e.interface.clone())
            }) else {
                return Vec::new();
            };
            vec![
                Mutation::AddStaticRoute {
                    node: dev.clone(),
                    route: host_route(ip, StaticNextHop::Interface(out_if.clone())),
                },
                Mutation::AddStaticRoute {
                    node: peer.clone(),
                    route: host_route(ip, StaticNextHop::Interface(back_if.clone())),
                },
                log(
                    dev,
                    Severity::Notice,
                    format!("FIB_OVERRIDE {ip}/32 -> {out_if}"),
                ),
                log(
                    &peer,
                    Severity::Notice,
                    format!("FIB_OVERRIDE {ip}/32 -> {back_if}"),
                ),
            ]
        }
        RootCause::IcmpAclBlock => vec![
            Mutation::InsertAcl {
                node: dev.clone(),
                rule: deny(AclProto::Icmp, vec![]),
            },
            log(
                dev,
                Severity::Notice,
                "ACL_UPDATE: deny icmp any any".into(),
            ),
        ],
        RootCause::HttpAclBlock => vec![
            Mutation::InsertAcl {
                node: dev.clone(),
                rule: deny(AclProto::Tcp, vec![80, 443]),
            },
            log(
                dev,
                Severity::Notice,
                "ACL_UPDATE: deny tcp any any eq 80,443".into(),
            ),
        ],
        // Traffic causes are armed through the triggering workload.
        RootCause::IncastTraffic | RootCause::Microburst | RootCause::DosFlood => Vec::new(),
    }
}

/// Healthy next hop of `dev` toward `ip` when it is another forwarding node.
fn loop_partner(topo: &Topology, dev: &NodeId, ip: Ipv4Addr) -> Option<(InterfaceId, NodeId)> {
    let s = crate::sim::NetworkState::new(topo.clone(), 0);
    let n = s.node_idx(dev).ok()?;
    match &s.forwarding().lookup(n, ip)?.action {
        RouteAction::Forward {
            interface,
            next_hop,
        } if topo.node(next_hop)?.kind.forwards() => Some((interface.clone(), next_hop.clone())),
        _ => None,
    }
}

fn deny(proto: AclProto, dst_ports: Vec<u16>) -> crate::topology::AclRule {
    crate::topology::AclRule {
        action: AclAction::Deny,
        proto,
        src: Ipv4Net::default(),
        dst: Ipv4Net::default(),
        dst_ports,
    }
}

/// An address outside every scenario's addressing plan, keeping the host octet.
fn off_subnet(ip: Ipv4Addr) -> Ipv4Addr {
    let o = ip.octets();
    Ipv4Addr::new(192, 168, 254, o[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incident::spec::load_value;

    fn spec(cause: &str, dev: &str, comp: &str) -> IncidentSpec {
        load_value(serde_json::json!({
            "name": "t",
            "scenario": {"kind": "datacenter_clos", "size": "S"},
            "goals": ["detect"],
            "issues": [{"dev": dev, "comp": comp, "root_cause": cause}],
        }))
        .unwrap()
    }

    #[test]
    fn plan_times_are_warmup_offsets() {
        let s = spec("link_down", "pod0.leaf0", "eth0");
        let plan = injection_plan(&s, &s.topology());
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].at_ms, 5000);
    }

    #[test]
    fn incast_default_trigger() {
        let s = spec("incast_traffic", "pod0.leaf0", "eth2");
        let t = s.topology();
        let plan = injection_plan(&s, &t);
        let Mutation::ArmTrigger { trigger } = &plan[0].mutation else {
            panic!()
        };
        assert_eq!(trigger.dst.as_str(), "pod0.h0");
        assert_eq!(trigger.sources.len(), 7);
        assert_eq!(trigger.interval_ms, 20_000);
        assert!((trigger.rate * 7.0 - 320.0).abs() < 1e-9);
    }

    #[test]
    fn forwarding_loop_pins_both_ends() {
        let s = spec("forwarding_loop", "pod0.leaf1", "routing");
        let plan = injection_plan(&s, &s.topology());
        let routes: Vec<&NodeId> = plan
            .iter()
            .filter_map(|p| match &p.mutation {
                Mutation::AddStaticRoute { node, .. } => Some(node),
                _ => None,
            })
            .collect();
        assert_eq!(routes.len(), 2);
        assert_eq!(routes[1].as_str(), "spine0");
    }
}
