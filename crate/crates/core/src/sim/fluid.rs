//! Fluid transport: per-tick max-min fair sharing with integer byte accounting.
//!
//! Each tick, every egress queue first drains at line rate. The remaining
//! capacity is shared max-min fair among the flows crossing the link.
//! Elastic flows send exactly their share. Inelastic flows send their full
//! demand; whatever the share does not cover is pushed into the queue of the
//! link that limited them, and whatever the buffer cannot hold is dropped.

use serde::{Deserialize, Serialize};

use super::forward::{DropKind, Packet, PacketProto, Walk};
use super::{NetworkState, Severity};
use crate::topology::{LinkState, NodeId, NodeStatus};

/// Bytes per tick carried by 1 Mb/s over a 10 ms tick.
const BYTES_PER_MBPS_TICK: f64 = 1250.0;

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    TcpBulk,
    Udp,
    Http,
}

impl FlowKind {
    pub fn proto(self) -> PacketProto {
        match self {
            FlowKind::Udp => PacketProto::Udp,
            FlowKind::TcpBulk | FlowKind::Http => PacketProto::Tcp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: FlowKind,
    pub demand_mbps: f64,
    pub packet_size: u32,
    pub dst_port: u16,
    pub start: u64,
    pub end: Option<u64>,
    /// Elastic flows never offer more than their fair share.
    pub elastic: bool,
    /// Included in SLO evaluation.
    pub monitored: bool,
    pub tag: String,
}

/// Per-second aggregate of one flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowWindow {
    pub start: u64,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Run-length `(latency_ms, count)` samples, one sample per tick.
    pub latency: Vec<(f64, u32)>,
}

impl FlowWindow {
    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.latency
            .iter()
            .flat_map(|&(v, n)| std::iter::repeat_n(v, n as usize))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: u64,
    #[serde(flatten)]
    pub spec: FlowSpec,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub windows: Vec<FlowWindow>,
    carry: f64,
}

impl Flow {
    pub(crate) fn new(id: u64, spec: FlowSpec) -> Self {
        Flow {
            id,
            spec,
            offered: 0,
            delivered: 0,
            dropped: 0,
            windows: Vec::new(),
            carry: 0.0,
        }
    }

    pub fn active_at(&self, t: u64) -> bool {
        self.spec.start <= t && self.spec.end.is_none_or(|e| t < e)
    }

    fn window_mut(&mut self, t: u64) -> &mut FlowWindow {
        let start = t - t % 1000;
        if self.windows.last().map(|w| w.start) != Some(start) {
            self.windows.push(FlowWindow {
                start,
                offered: 0,
                delivered: 0,
                dropped: 0,
                latency: Vec::new(),
            });
        }
        self.windows.last_mut().expect("just pushed")
    }
}

/// Accounting of one link direction over one tick.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LinkTickLedger {
    pub link: usize,
    pub dir: usize,
    pub capacity: u64,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queued_before: u64,
    pub queued_after: u64,
}

/// Split `total` over `weights` proportionally, exactly, largest remainder first.
pub(crate) fn apportion(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 || total == 0 {
        return vec![0; weights.len()];
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        out.push((num / sum) as u64);
        rems.push((num % sum, i));
    }
    let given: u64 = out.iter().sum();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take((total - given) as usize) {
        out[i] += 1;
    }
    out
}

/// Max-min fair allocation by progressive filling.
///
/// `paths[f]` lists resource keys flow `f` crosses; returns the integer
/// allocation per flow and, for flows limited by a resource rather than by
/// demand, the position in their path of that resource.
pub(crate) fn waterfill(
    residual: &[u64],
    demand: &[u64],
    paths: &[Vec<usize>],
) -> Vec<(u64, Option<usize>)> {
    let n = demand.len();
    let mut rem: Vec<f64> = residual.iter().map(|&r| r as f64).collect();
    let mut alloc = vec![0.0f64; n];
    let mut frozen = vec![false; n];
    let mut bneck: Vec<Option<usize>> = vec![None; n];
    let mut count = vec![0usize; residual.len()];
    for f in 0..n {
        if demand[f] == 0 || paths[f].is_empty() {
            frozen[f] = true;
            continue;
        }
        for &k in &paths[f] {
            count[k] += 1;
        }
    }
    loop {
        let mut inc = f64::INFINITY;
        let mut any = false;
        for f in 0..n {
            if !frozen[f] {
                any = true;
                inc = inc.min(demand[f] as f64 - alloc[f]);
            }
        }
        if !any {
            break;
        }
        for (k, &c) in count.iter().enumerate() {
            if c > 0 {
                inc = inc.min(rem[k] / c as f64);
            }
        }
        let inc = inc.max(0.0);
        for f in 0..n {
            if !frozen[f] {
                alloc[f] += inc;
            }
        }
        for (k, &c) in count.iter().enumerate() {
            if c > 0 {
                rem[k] -= inc * c as f64;
            }
        }
        for f in 0..n {
            if frozen[f] {
                continue;
            }
            if demand[f] as f64 - alloc[f] <= EPS * (1.0 + demand[f] as f64) {
                frozen[f] = true;
            } else if let Some(pos) = paths[f]
                .iter()
                .position(|&k| rem[k] <= EPS * (1.0 + residual[k] as f64))
            {
                frozen[f] = true;
                bneck[f] = Some(pos);
            }
            if frozen[f] {
                for &k in &paths[f] {
                    count[k] -= 1;
                }
            }
        }
    }

    let mut out: Vec<(u64, Option<usize>)> = (0..n)
        .map(|f| {
            if paths[f].is_empty() {
                return (0, None);
            }
            let a = if bneck[f].is_none() {
                demand[f]
            } else {
                ((alloc[f] + EPS).floor() as u64).min(demand[f])
            };
            (a, bneck[f])
        })
        .collect();

    // Integer repair: floating error must never let a resource overflow.
    let mut used = vec![0u64; residual.len()];
    for f in 0..n {
        for &k in &paths[f] {
            used[k] += out[f].0;
        }
    }
    for k in 0..residual.len() {
        while used[k] > residual[k] {
            let mut trimmed = false;
            for f in (0..n).rev() {
                if used[k] <= residual[k] {
                    break;
                }
                if let Some(pos) = paths[f].iter().position(|&x| x == k) {
                    if out[f].0 > 0 {
                        out[f].0 -= 1;
                        out[f].1.get_or_insert(pos);
                        for &x in &paths[f] {
                            used[x] -= 1;
                        }
                        trimmed = true;
                    }
                }
            }
            if !trimmed {
                break;
            }
        }
    }
    out
}

struct ActiveFlow {
    id: u64,
    demand: u64,
    elastic: bool,
    path: Vec<(usize, usize)>,
}

impl NetworkState {
    pub(crate) fn link_capacity_bytes(&self, link: usize) -> u64 {
        (self.topo.links[link].capacity_mbps * BYTES_PER_MBPS_TICK * self.clock.tick as f64 / 10.0)
            .round() as u64
    }

    fn link_carries(&self, link: usize, dir: usize) -> bool {
        let (n, _) = self.idx.link_ends[link][dir];
        self.topo.links[link].state == LinkState::Up && self.topo.nodes[n].status == NodeStatus::Up
    }

    /// Walk for a flow, reusing the cached one while nothing has changed.
    pub(crate) fn flow_walk(&mut self, id: u64) -> Option<Walk> {
        if let Some((v, w)) = self.path_cache.get(&id) {
            if *v == self.version {
                return Some(w.clone());
            }
        }
        let f = self.flows.get(&id)?;
        let src = *self.idx.node.get(&f.spec.src)?;
        let dst_node = *self.idx.node.get(&f.spec.dst)?;
        let dst = self.destination_address(dst_node).ok()?;
        let w = self.walk(Packet {
            src,
            dst,
            size: f.spec.packet_size,
            proto: f.spec.kind.proto(),
            dst_port: f.spec.dst_port,
        });
        self.path_cache.insert(id, (self.version, w.clone()));
        Some(w)
    }

    pub(crate) fn charge_drop(
        &mut self,
        node: usize,
        intf: Option<usize>,
        kind: DropKind,
        bytes: u64,
    ) {
        let Some(i) = intf else {
            return;
        };
        let s = &mut self.stats[node][i];
        match kind {
            DropKind::Acl => s.drops_acl += bytes,
            DropKind::Mtu => s.drops_mtu += bytes,
            DropKind::Ttl => s.drops_ttl += bytes,
            DropKind::NoRoute => s.drops_noroute += bytes,
            DropKind::Crashed => {}
        }
    }

    pub(crate) fn fluid_tick(&mut self) {
        let t0 = self.clock.now;
        let nlinks = self.topo.links.len();
        let mut ledger: Vec<LinkTickLedger> = (0..nlinks * 2)
            .map(|k| LinkTickLedger {
                link: k / 2,
                dir: k % 2,
                ..Default::default()
            })
            .collect();
        let mut residual = vec![0u64; nlinks * 2];
        let mut drained: Vec<(u64, u64)> = Vec::new();

        // Queues drain first at line rate.
        for l in 0..nlinks {
            let cap = self.link_capacity_bytes(l);
            for d in 0..2 {
                let k = l * 2 + d;
                ledger[k].queued_before = self.queues[l][d].len;
                if !self.link_carries(l, d) {
                    continue;
                }
                let q = &mut self.queues[l][d];
                ledger[k].capacity = cap;
                let drain = q.len.min(cap);
                if drain > 0 {
                    let ids: Vec<u64> = q.per_flow.keys().copied().collect();
                    let w: Vec<u64> = q.per_flow.values().copied().collect();
                    for (id, part) in ids.into_iter().zip(apportion(drain, &w)) {
                        if part == 0 {
                            continue;
                        }
                        let e = q.per_flow.get_mut(&id).expect("id from map");
                        *e -= part;
                        if *e == 0 {
                            q.per_flow.remove(&id);
                        }
                        drained.push((id, part));
                    }
                    q.len -= drain;
                }
                ledger[k].delivered += drain;
                residual[k] = cap - drain;
            }
        }

        // Resolve active flows.
        let ids: Vec<u64> = self
            .flows
            .values()
            .filter(|f| f.active_at(t0))
            .map(|f| f.id)
            .collect();
        let mut active: Vec<ActiveFlow> = Vec::new();
        for id in ids {
            let (demand, elastic, src_up) = {
                let f = self.flows.get_mut(&id).expect("active id");
                let x = f.spec.demand_mbps.max(0.0) * BYTES_PER_MBPS_TICK + f.carry;
                let d = x.floor();
                f.carry = x - d;
                let src_up = self
                    .idx
                    .node
                    .get(&f.spec.src)
                    .is_some_and(|&n| self.topo.nodes[n].status == NodeStatus::Up);
                (d as u64, f.spec.elastic, src_up)
            };
            if !src_up || demand == 0 {
                continue;
            }
            let Some(walk) = self.flow_walk(id) else {
                continue;
            };
            match walk.outcome {
                Ok(_) if walk.links.is_empty() => {}
                Ok(_) => active.push(ActiveFlow {
                    id,
                    demand,
                    elastic,
                    path: walk.links,
                }),
                Err(fail) => {
                    self.charge_drop(fail.node, fail.interface, fail.kind, demand);
                    let f = self.flows.get_mut(&id).expect("active id");
                    f.offered += demand;
                    f.dropped += demand;
                    let w = f.window_mut(t0);
                    w.offered += demand;
                    w.dropped += demand;
                    let dst = f.spec.dst.clone();
                    if let Some(i) = fail.interface {
                        let intf = self.topo.nodes[fail.node].interfaces[i].id.clone();
                        match fail.kind {
                            DropKind::Mtu => self.log_limited(
                                fail.node,
                                &format!("mtu:{intf}"),
                                Severity::Warning,
                                format!(
                                    "MTU_DROP {intf}: large packet dropped, fragmentation disabled"
                                ),
                            ),
                            DropKind::Ttl => self.log_limited(
                                fail.node,
                                &format!("ttl:{dst}"),
                                Severity::Warning,
                                format!("TTL_EXPIRED {dst}: traffic loop observed"),
                            ),
                            _ => {}
                        }
                    }
                }
            }
        }

        // Max-min share of what the queues left over.
        let demand: Vec<u64> = active.iter().map(|f| f.demand).collect();
        let paths: Vec<Vec<usize>> = active
            .iter()
            .map(|f| f.path.iter().map(|&(l, d)| l * 2 + d).collect())
            .collect();
        let alloc = waterfill(&residual, &demand, &paths);

        let mut arrivals: Vec<Vec<(u64, u64)>> = vec![Vec::new(); nlinks * 2];
        let mut flow_excess_drop: Vec<(u64, u64)> = Vec::new();
        for ((f, path), &(a, b)) in active.iter().zip(&paths).zip(&alloc) {
            for &k in path {
                ledger[k].offered += a;
                ledger[k].delivered += a;
            }
            if !f.elastic && f.demand > a {
                let pos = b.unwrap_or(0);
                let (l, d) = f.path[pos];
                arrivals[l * 2 + d].push((f.id, f.demand - a));
            }
        }

        // Excess into queues; overflow is dropped.
        for l in 0..nlinks {
            for d in 0..2 {
                let k = l * 2 + d;
                let arr = &arrivals[k];
                let total: u64 = arr.iter().map(|x| x.1).sum();
                let buffer = self.topo.links[l].buffer_bytes;
                let q = &mut self.queues[l][d];
                if total > 0 {
                    let space = buffer.saturating_sub(q.len);
                    let accept = total.min(space);
                    let w: Vec<u64> = arr.iter().map(|x| x.1).collect();
                    let parts = apportion(accept, &w);
                    for (&(id, e), &p) in arr.iter().zip(&parts) {
                        if p > 0 {
                            *q.per_flow.entry(id).or_insert(0) += p;
                        }
                        if e > p {
                            flow_excess_drop.push((id, e - p));
                        }
                    }
                    q.len += accept;
                    ledger[k].offered += total;
                    ledger[k].dropped += total - accept;
                }
                q.peak = q.peak.max(q.len);
                if q.series.last().map(|x| x.1) != Some(q.len) {
                    q.series.push((t0 + self.clock.tick, q.len));
                }
                ledger[k].queued_after = q.len;
            }
        }

        // Interface counters, CRC thinning and condition logs.
        let mut corrupt_frac = vec![0.0f64; nlinks * 2];
        for l in 0..nlinks {
            let err = self.topo.links[l].error_rate;
            for d in 0..2 {
                let k = l * 2 + d;
                let lg = ledger[k].clone();
                let (n, i) = self.idx.link_ends[l][d];
                let (p, pi) = self.idx.link_ends[l][1 - d];
                let sent = lg.delivered;
                let corrupted = (sent as f64 * err).round() as u64;
                corrupt_frac[k] = err;
                {
                    let s = &mut self.stats[n][i];
                    s.tx_bytes += sent;
                    s.tx_pkts += sent.div_ceil(1500);
                    s.drops_queue += lg.dropped;
                    s.queue_len = lg.queued_after;
                    s.queue_peak = s.queue_peak.max(self.queues[l][d].peak);
                }
                {
                    let s = &mut self.stats[p][pi];
                    s.rx_bytes += sent - corrupted;
                    s.rx_pkts += (sent - corrupted).div_ceil(1500);
                    s.rx_errors += corrupted;
                }
                if lg.dropped > 0 {
                    let intf = self.topo.nodes[n].interfaces[i].id.clone();
                    self.log_limited(
                        n,
                        &format!("qdrop:{intf}"),
                        Severity::Warning,
                        format!("QUEUE_DROP {intf}: egress buffer full"),
                    );
                }
                if corrupted > 0 {
                    let intf = self.topo.nodes[p].interfaces[pi].id.clone();
                    self.log_limited(
                        p,
                        &format!("crc:{intf}"),
                        Severity::Warning,
                        format!("CRC_ERROR {intf}: corrupted frames received"),
                    );
                }
            }
        }

        // Per-flow delivery, drops and latency.
        for (f, &(a, _)) in active.iter().zip(&alloc) {
            let mut keep = 1.0;
            let mut lat = 0.0;
            for &(l, d) in &f.path {
                keep *= 1.0 - corrupt_frac[l * 2 + d];
                let link = &self.topo.links[l];
                lat += link.delay_ms + self.queues[l][d].len as f64 / (link.capacity_mbps * 125.0);
            }
            let got = ((a as f64) * keep).floor() as u64;
            let offered = if f.elastic { a } else { f.demand };
            let flow = self.flows.get_mut(&f.id).expect("active id");
            flow.offered += offered;
            flow.delivered += got;
            flow.dropped += a - got;
            let w = flow.window_mut(t0);
            w.offered += offered;
            w.delivered += got;
            w.dropped += a - got;
            let lat = (lat * 1000.0).round() / 1000.0;
            match w.latency.last_mut() {
                Some((v, c)) if *v == lat => *c += 1,
                _ => w.latency.push((lat, 1)),
            }
        }
        for (id, bytes) in flow_excess_drop {
            if let Some(flow) = self.flows.get_mut(&id) {
                flow.dropped += bytes;
                flow.window_mut(t0).dropped += bytes;
            }
        }
        for (id, bytes) in drained {
            if let Some(flow) = self.flows.get_mut(&id) {
                flow.delivered += bytes;
                flow.window_mut(t0).delivered += bytes;
            }
        }

        // Service saturation.
        let over: Vec<usize> = self
            .service_load
            .iter()
            .filter(|(&n, &load)| {
                self.topo.nodes[n]
                    .config
                    .services
                    .first()
                    .is_some_and(|s| load >= s.capacity_rps as f64)
            })
            .map(|(&n, _)| n)
            .collect();
        for n in over {
            let name = self.topo.nodes[n].config.services[0].name.clone();
            self.log_limited(
                n,
                "svc",
                Severity::Error,
                format!("SERVICE_OVERLOAD {name}: request rate exceeds capacity"),
            );
        }
        self.last_ledger = ledger;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1, 1, 1]), vec![4, 3, 3]);
        assert_eq!(apportion(0, &[5, 5]), vec![0, 0]);
        assert_eq!(apportion(7, &[0, 0]), vec![0, 0]);
        let p = apportion(999, &[3, 700, 12, 1]);
        assert_eq!(p.iter().sum::<u64>(), 999);
    }

    #[test]
    fn waterfill_single_bottleneck_equal_share() {
        let out = waterfill(
            &[12500],
            &[100_000, 100_000, 100_000, 100_000],
            &vec![vec![0]; 4],
        );
        for (a, b) in &out {
            assert_eq!(*a, 3125);
            assert_eq!(*b, Some(0));
        }
    }

    #[test]
    fn waterfill_gives_leftover_to_unconstrained() {
        // Flow 0 wants 1000; flows 1,2 are elastic-like and split the rest.
        let out = waterfill(&[10_000], &[1000, 50_000, 50_000], &vec![vec![0]; 3]);
        assert_eq!(out[0], (1000, None));
        assert_eq!(out[1].0, 4500);
        assert_eq!(out[2].0, 4500);
    }

    #[test]
    fn waterfill_two_links() {
        // Link 0 cap 100 shared by f0,f1; link 1 cap 30 used by f1 only.
        let out = waterfill(&[100, 30], &[1000, 1000], &[vec![0], vec![0, 1]]);
        assert_eq!(out[1], (30, Some(1)));
        assert_eq!(out[0], (70, Some(0)));
    }
}
