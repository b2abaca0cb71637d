//! Active measurements: probes, traceroute and the reachability matrix.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::forward::{FailReason, Packet, PacketProto, Walk};
use super::{NetworkState, SimError};
use crate::topology::{NodeId, NodeKind, NodeStatus};

/// Extra server-side time of an idle HTTP service, ms.
const HTTP_SERVICE_MS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Icmp,
    TcpConnect,
    Http,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub seq: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtt_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fail: Option<FailReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub sent: u32,
    pub received: u32,
    pub loss_pct: f64,
    pub probes: Vec<ProbeOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHop {
    pub hop: usize,
    pub node: NodeId,
    pub rtt_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub src: NodeId,
    pub dst: NodeId,
    pub hops: Vec<TraceHop>,
    pub reached: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fail: Option<FailReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reachability {
    pub hosts: Vec<NodeId>,
    /// `matrix[i][j]`: hosts[i] can reach hosts[j].
    pub matrix: Vec<Vec<bool>>,
}

impl NetworkState {
    fn path_rtt(&self, walk: &Walk) -> f64 {
        walk.links
            .iter()
            .map(|&(l, d)| {
                let link = &self.topo.links[l];
                link.delay_ms + self.queues[l][d].len as f64 / (link.capacity_mbps * 125.0)
            })
            .sum::<f64>()
            * 2.0
    }

    fn probe_packet(
        &self,
        src: usize,
        dst: usize,
        size: u32,
        proto: PacketProto,
        port: u16,
    ) -> Result<Packet, SimError> {
        Ok(Packet {
            src,
            dst: self.destination_address(dst)?,
            size,
            proto,
            dst_port: port,
        })
    }

    fn listening(&self, node: usize, port: u16) -> bool {
        let n = &self.topo.nodes[node];
        port == 22 || n.config.services.iter().any(|s| s.port == port)
    }

    fn service_overloaded(&self, node: usize) -> bool {
        let n = &self.topo.nodes[node];
        match (n.config.services.first(), self.service_load.get(&node)) {
            (Some(s), Some(&load)) => load >= s.capacity_rps as f64,
            _ => false,
        }
    }

    fn service_delay(&self, node: usize) -> f64 {
        let n = &self.topo.nodes[node];
        let util = match (n.config.services.first(), self.service_load.get(&node)) {
            (Some(s), Some(&load)) if s.capacity_rps > 0 => {
                (load / s.capacity_rps as f64).min(0.99)
            }
            _ => 0.0,
        };
        HTTP_SERVICE_MS / (1.0 - util)
    }

    /// Send `count` probes of `kind` from `src` to `dst`.
    ///
    /// `port` is used by tcp_connect only. Corruption draws come from the
    /// dedicated probe stream, one draw per traversed link with nonzero error.
    pub fn send_probe(
        &mut self,
        kind: ProbeKind,
        src: &NodeId,
        dst: &NodeId,
        size: u32,
        count: u32,
        port: u16,
    ) -> Result<ProbeResult, SimError> {
        let s = self.node_idx(src)?;
        let d = self.node_idx(dst)?;
        let (proto, dport) = match kind {
            ProbeKind::Icmp => (PacketProto::Icmp, 0),
            ProbeKind::TcpConnect => (PacketProto::Tcp, port),
            ProbeKind::Http => (PacketProto::Tcp, 80),
        };
        let pkt = self.probe_packet(s, d, size, proto, dport)?;
        let mut probes = Vec::with_capacity(count as usize);
        let mut received = 0;
        for seq in 0..count {
            let walk = self.walk(pkt);
            let mut outcome = ProbeOutcome {
                seq,
                rtt_ms: None,
                fail: None,
            };
            match &walk.outcome {
                Err(f) => {
                    let (node, intf, dk) = (f.node, f.interface, f.kind);
                    outcome.fail = Some(f.reason.clone());
                    self.charge_drop(node, intf, dk, size as u64);
                }
                Ok(at) => {
                    let mut corrupted = false;
                    for &(l, _) in &walk.links {
                        let p = self.topo.links[l].error_rate;
                        if p > 0.0 && self.probe_rng.gen_bool(p.min(1.0)) {
                            corrupted = true;
                        }
                    }
                    let rtt = self.path_rtt(&walk);
                    if corrupted {
                        outcome.fail = Some(FailReason::Corrupted);
                    } else {
                        match kind {
                            ProbeKind::Icmp => outcome.rtt_ms = Some(round3(rtt)),
                            ProbeKind::TcpConnect => {
                                if self.listening(*at, port) {
                                    outcome.rtt_ms = Some(round3(rtt));
                                } else {
                                    outcome.fail =
                                        Some(FailReason::Refused(self.topo.nodes[*at].id.clone()));
                                }
                            }
                            ProbeKind::Http => {
                                if !self.listening(*at, 80) || *at != d {
                                    outcome.fail =
                                        Some(FailReason::Refused(self.topo.nodes[*at].id.clone()));
                                } else if self.service_overloaded(*at) {
                                    outcome.fail = Some(FailReason::ServiceOverloaded(
                                        self.topo.nodes[*at].id.clone(),
                                    ));
                                } else {
                                    outcome.rtt_ms = Some(round3(rtt + self.service_delay(*at)));
                                }
                            }
                        }
                    }
                }
            }
            if outcome.fail.is_none() {
                received += 1;
            }
            probes.push(outcome);
        }
        let loss_pct = if count == 0 {
            0.0
        } else {
            round3(100.0 * (count - received) as f64 / count as f64)
        };
        Ok(ProbeResult {
            kind,
            src: src.clone(),
            dst: dst.clone(),
            sent: count,
            received,
            loss_pct,
            probes,
        })
    }

    /// Hop list from `src` toward `dst` up to the destination or first failure.
    pub fn trace_path(&self, src: &NodeId, dst: &NodeId) -> Result<TraceResult, SimError> {
        let s = self.node_idx(src)?;
        let d = self.node_idx(dst)?;
        let pkt = self.probe_packet(s, d, 64, PacketProto::Udp, 33434)?;
        let walk = self.walk(pkt);
        let mut hops = Vec::with_capacity(walk.hops.len());
        let mut rtt = 0.0;
        for (i, (&n, &(l, dir))) in walk.hops.iter().zip(&walk.links).enumerate() {
            let link = &self.topo.links[l];
            rtt += 2.0
                * (link.delay_ms + self.queues[l][dir].len as f64 / (link.capacity_mbps * 125.0));
            // A crashed hop does not answer.
            if self.topo.nodes[n].status == NodeStatus::Crashed {
                break;
            }
            hops.push(TraceHop {
                hop: i + 1,
                node: self.topo.nodes[n].id.clone(),
                rtt_ms: round3(rtt),
            });
        }
        let (reached, fail) = match walk.outcome {
            Ok(_) => (true, None),
            Err(f) => (false, Some(f.reason)),
        };
        Ok(TraceResult {
            src: src.clone(),
            dst: dst.clone(),
            hops,
            reached,
            fail,
        })
    }

    /// Links a 64-byte datagram traverses from `src` toward `dst`, and whether it arrives.
    pub fn path_links(&self, src: &NodeId, dst: &NodeId) -> Result<(Vec<usize>, bool), SimError> {
        let s = self.node_idx(src)?;
        let d = self.node_idx(dst)?;
        let walk = self.walk(self.probe_packet(s, d, 64, PacketProto::Udp, 33434)?);
        let reached = matches!(walk.outcome, Ok(n) if n == d);
        Ok((walk.links.iter().map(|&(l, _)| l).collect(), reached))
    }

    /// Structural host-to-host ICMP reachability, ignoring corruption.
    pub fn reachability_matrix(&self) -> Reachability {
        let hosts = self.topo.host_ids();
        let idx: Vec<usize> = hosts.iter().map(|h| self.idx.node[h]).collect();
        let mut matrix = vec![vec![false; hosts.len()]; hosts.len()];
        for (i, &s) in idx.iter().enumerate() {
            for (j, &d) in idx.iter().enumerate() {
                if i == j {
                    matrix[i][j] = true;
                    continue;
                }
                if self.topo.nodes[s].status == NodeStatus::Crashed
                    || self.topo.nodes[s].kind != NodeKind::Host
                {
                    continue;
                }
                let Ok(pkt) = self.probe_packet(s, d, 64, PacketProto::Icmp, 0) else {
                    continue;
                };
                matrix[i][j] = matches!(self.walk(pkt).outcome, Ok(n) if n == d);
            }
        }
        Reachability { hosts, matrix }
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}
