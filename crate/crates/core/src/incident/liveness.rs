//! Per-cause observable signal checks, run against a live simulator.

use super::catalog::RootCause;
use super::inject::victim_host;
use super::spec::Issue;
use crate::sim::{FailReason, NetworkState, ProbeKind};
use crate::topology::{InterfaceId, NodeId};

/// Virtual time within which every injected cause must show a signal.
pub const LIVENESS_WINDOW_MS: u64 = 10_000;
/// Granularity at which the smoke runner re-checks.
pub const LIVENESS_STEP_MS: u64 = 100;

fn log_since(
    s: &NetworkState,
    since: u64,
    cause: RootCause,
    node: Option<&NodeId>,
) -> Option<String> {
    s.logs()
        .iter()
        .filter(|e| e.t >= since && node.is_none_or(|n| &e.node == n))
        .find(|e| cause.matches_log(&e.text))
        .map(|e| format!("log {}: {}", e.node, e.text))
}

fn link_ends(s: &NetworkState, dev: &NodeId, intf: &InterfaceId) -> Vec<(NodeId, InterfaceId)> {
    let mut v = vec![(dev.clone(), intf.clone())];
    if let Some(p) = s.topology().neighbor(dev, intf) {
        v.push((p.node.clone(), p.interface.clone()));
    }
    v
}

fn reachability_hole(s: &NetworkState) -> Option<String> {
    let r = s.reachability_matrix();
    for (i, row) in r.matrix.iter().enumerate() {
        if let Some(j) = row.iter().position(|ok| !ok) {
            return Some(format!(
                "reachability hole {} -> {}",
                r.hosts[i], r.hosts[j]
            ));
        }
    }
    None
}

/// A probe of `kind` between some host pair failing for `want` at `dev`.
fn probe_fails_at(
    s: &mut NetworkState,
    kind: ProbeKind,
    port: u16,
    dev: &NodeId,
    want: impl Fn(&FailReason) -> bool,
) -> Option<String> {
    let hosts = s.topology().host_ids();
    for a in &hosts {
        for b in &hosts {
            if a == b {
                continue;
            }
            // Only pairs whose healthy path crosses dev can show the signal.
            let crosses = s
                .trace_path(a, b)
                .is_ok_and(|t| t.hops.iter().any(|h| &h.node == dev));
            if !crosses && b != dev {
                continue;
            }
            let Ok(r) = s.send_probe(kind, a, b, 64, 1, port) else {
                continue;
            };
            if let Some(f) = r
                .probes
                .iter()
                .filter_map(|p| p.fail.as_ref())
                .find(|f| want(f))
            {
                return Some(format!("{kind:?} {a} -> {b}: {f}"));
            }
        }
    }
    None
}

/// Evidence that `iss` is observable, or `None` if no signal yet.
pub fn signal(iss: &Issue, s: &mut NetworkState, since: u64) -> Option<String> {
    let dev = &iss.dev;
    let intf = iss.comp.interface().cloned();
    let c = iss.root_cause;
    match c {
        RootCause::LinkDown
        | RootCause::LinkDetached
        | RootCause::LinkFlap
        | RootCause::OspfAreaMismatch => log_since(s, since, c, Some(dev)),
        RootCause::FaultyCable => {
            let intf = intf?;
            link_ends(s, dev, &intf).into_iter().find_map(|(n, i)| {
                let st = s.interface_stats(&n, &i).ok()?;
                (st.rx_errors > 0).then(|| format!("rx_errors {} on {n}:{i}", st.rx_errors))
            })
        }
        RootCause::MtuFragmentationDisabled => {
            let intf = intf?;
            link_ends(s, dev, &intf)
                .into_iter()
                .find_map(|(n, i)| {
                    let st = s.interface_stats(&n, &i).ok()?;
                    (st.drops_mtu > 0).then(|| format!("drops_mtu {} on {n}:{i}", st.drops_mtu))
                })
                .or_else(|| log_since(s, since, c, None))
        }
        RootCause::HostCrash | RootCause::SwitchCrash => {
            let crashed = s.node_idx(dev).is_ok_and(|n| s.node_is_crashed(n));
            if !crashed {
                return None;
            }
            log_since(s, since, c, None).filter(|l| l.contains(dev.as_str()))
        }
        RootCause::HostIpMisconfig | RootCause::IncorrectNetmask | RootCause::FwdEntryMisconfig => {
            reachability_hole(s)
        }
        RootCause::StaticBlackhole => {
            let hosts = s.topology().host_ids();
            for a in &hosts {
                for b in &hosts {
                    if a == b {
                        continue;
                    }
                    if let Ok(t) = s.trace_path(a, b) {
                        if matches!(&t.fail, Some(FailReason::Blackholed(n)) if n == dev) {
                            return Some(format!("trace {a} -> {b} blackholed at {dev}"));
                        }
                    }
                }
            }
            None
        }
        RootCause::ForwardingLoop => log_since(s, since, c, None).or_else(|| {
            let hosts = s.topology().host_ids();
            hosts
                .iter()
                .flat_map(|a| hosts.iter().map(move |b| (a, b)))
                .find_map(|(a, b)| {
                    let t = s.trace_path(a, b).ok()?;
                    matches!(t.fail, Some(FailReason::TtlExceeded(_)))
                        .then(|| format!("trace {a} -> {b} ttl exceeded"))
                })
        }),
        RootCause::IcmpAclBlock => probe_fails_at(
            s,
            ProbeKind::Icmp,
            0,
            dev,
            |f| matches!(f, FailReason::AclDenied(n) if n == dev),
        ),
        RootCause::HttpAclBlock => probe_fails_at(
            s,
            ProbeKind::TcpConnect,
            80,
            dev,
            |f| matches!(f, FailReason::AclDenied(n) if n == dev),
        ),
        RootCause::IncastTraffic | RootCause::Microburst => {
            let intf = intf?;
            let link = s.topology().link_at(dev, &intf)?;
            let buffer = s.topology().links[link].buffer_bytes;
            let st = s.interface_stats(dev, &intf).ok()?;
            (st.drops_queue > 0 && st.queue_peak * 10 >= buffer * 9).then(|| {
                format!(
                    "queue_peak {} of {buffer} and drops_queue {} on {dev}:{intf}",
                    st.queue_peak, st.drops_queue
                )
            })
        }
        RootCause::DosFlood => {
            let victim = victim_host(s.topology(), iss)?;
            log_since(s, since, c, Some(&victim)).or_else(|| {
                let src = s.topology().host_ids().into_iter().find(|h| h != &victim)?;
                let r = s
                    .send_probe(ProbeKind::Http, &src, &victim, 64, 1, 80)
                    .ok()?;
                r.probes
                    .iter()
                    .any(|p| matches!(p.fail, Some(FailReason::ServiceOverloaded(_))))
                    .then(|| format!("http {src} -> {victim}: service_overloaded"))
            })
        }
    }
}
