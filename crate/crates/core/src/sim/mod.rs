//! Deterministic discrete-time network simulator.
//!
//! [`NetworkState`] owns a topology copy plus everything that evolves over
//! virtual time: forwarding tables, egress queues, interface counters, flows,
//! logs and scheduled events. All mutation goes through `&mut self`, so a
//! single owner (the AAL command loop) serializes access.

mod fluid;
mod forward;
mod probe;
pub mod routing;
mod snapshot;

use std::collections::{BTreeMap, HashMap};
use std::net::Ipv4Addr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::topology::{
    AclRule, Endpoint, InterfaceId, LinkState, NodeId, NodeKind, NodeStatus, StaticRoute, Topology,
};

pub use fluid::{Flow, FlowKind, FlowSpec, FlowWindow, LinkTickLedger};
pub use forward::{FailReason, Packet, PacketProto, HOP_BUDGET};
pub use probe::{ProbeKind, ProbeOutcome, ProbeResult, Reachability, TraceHop, TraceResult};
pub use routing::{recompute_routes, ForwardingState, RouteAction, RouteEntry, RouteOrigin};
pub use snapshot::{InterfaceSnapshot, Snapshot};

/// Default simulation step.
pub const TICK_MS: u64 = 10;

/// Minimum spacing between repeated condition logs of the same kind.
const LOG_INTERVAL_MS: u64 = 1000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown interface {0}")]
    UnknownInterface(String),
    #[error("no link attached at {0}")]
    NoLink(String),
    #[error("node {0} has no address")]
    NoAddress(String),
    #[error("step of {0} ms is not a multiple of the {1} ms tick")]
    BadStep(u64, u64),
    #[error("snapshot i/o: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualClock {
    pub now: u64,
    pub tick: u64,
}

impl Default for VirtualClock {
    fn default() -> Self {
        VirtualClock {
            now: 0,
            tick: TICK_MS,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceStats {
    pub tx_bytes: u64,
    pub rx_bytes: u64,
    pub tx_pkts: u64,
    pub rx_pkts: u64,
    pub drops_queue: u64,
    pub drops_ttl: u64,
    pub drops_acl: u64,
    pub drops_mtu: u64,
    pub drops_noroute: u64,
    pub rx_errors: u64,
    pub queue_len: u64,
    pub queue_peak: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Notice,
    Warning,
    Error,
    Critical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub t: u64,
    pub node: NodeId,
    pub severity: Severity,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    IncastOd,
    Burst,
    RequestFlood,
}

/// A recurring traffic pattern armed at injection time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub kind: TriggerKind,
    pub sources: Vec<NodeId>,
    pub dst: NodeId,
    /// Mb/s per sender for traffic triggers, requests/s for floods.
    pub rate: f64,
    /// Active period per firing; 0 means never stops.
    pub burst_len_ms: u64,
    /// Period between firings; 0 means fire once.
    pub interval_ms: u64,
}

/// A state change the incident module asks the simulator to perform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    SetLinkState {
        at: Endpoint,
        state: LinkState,
    },
    StartFlap {
        at: Endpoint,
        up_ms: u64,
        down_ms: u64,
    },
    SetErrorRate {
        at: Endpoint,
        error_rate: f64,
    },
    SetLinkMtu {
        at: Endpoint,
        mtu: u32,
    },
    SetNodeStatus {
        node: NodeId,
        status: NodeStatus,
    },
    SetInterfaceAddress {
        at: Endpoint,
        ip: Ipv4Addr,
        netmask: u8,
    },
    SetOspfArea {
        at: Endpoint,
        area: u32,
    },
    AddStaticRoute {
        node: NodeId,
        route: StaticRoute,
    },
    InsertAcl {
        node: NodeId,
        rule: AclRule,
    },
    ArmTrigger {
        trigger: TriggerSpec,
    },
    Log {
        node: NodeId,
        severity: Severity,
        text: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Scheduled {
    Apply {
        mutation: Mutation,
    },
    FlapToggle {
        link: usize,
        up_ms: u64,
        down_ms: u64,
        to: LinkState,
    },
    TriggerFire {
        trigger: usize,
    },
    FloodEnd {
        node: usize,
        rps: f64,
    },
}

/// Precomputed name/position lookups. Structure never changes after build.
#[derive(Clone, Debug)]
pub struct TopoIndex {
    pub node: HashMap<NodeId, usize>,
    pub intf: Vec<HashMap<InterfaceId, usize>>,
    pub link_at: Vec<Vec<Option<usize>>>,
    pub link_ends: Vec<[(usize, usize); 2]>,
}

impl TopoIndex {
    pub fn new(topo: &Topology) -> Self {
        let node: HashMap<NodeId, usize> = topo
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let intf: Vec<HashMap<InterfaceId, usize>> = topo
            .nodes
            .iter()
            .map(|n| {
                n.interfaces
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (c.id.clone(), i))
                    .collect()
            })
            .collect();
        let mut link_at: Vec<Vec<Option<usize>>> = topo
            .nodes
            .iter()
            .map(|n| vec![None; n.interfaces.len()])
            .collect();
        let mut link_ends = Vec::with_capacity(topo.links.len());
        for (li, l) in topo.links.iter().enumerate() {
            let na = node[&l.a.node];
            let nb = node[&l.b.node];
            let ia = intf[na][&l.a.interface];
            let ib = intf[nb][&l.b.interface];
            link_at[na][ia] = Some(li);
            link_at[nb][ib] = Some(li);
            link_ends.push([(na, ia), (nb, ib)]);
        }
        TopoIndex {
            node,
            intf,
            link_at,
            link_ends,
        }
    }

    /// The `(node, interface)` across `link` from `node`.
    pub fn peer(&self, link: usize, node: usize) -> (usize, usize) {
        let [a, b] = self.link_ends[link];
        if a.0 == node {
            b
        } else {
            a
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub(crate) struct LinkQueue {
    pub len: u64,
    pub peak: u64,
    /// Bytes held per flow id, for proportional drain and drop attribution.
    pub per_flow: BTreeMap<u64, u64>,
    /// Run-length `(t, len)` series: a new point only when the length changes.
    pub series: Vec<(u64, u64)>,
}

pub struct NetworkState {
    pub(crate) topo: Topology,
    pub(crate) idx: TopoIndex,
    pub(crate) clock: VirtualClock,
    pub(crate) fwd: ForwardingState,
    pub(crate) stats: Vec<Vec<InterfaceStats>>,
    /// Egress queues per link, indexed by direction (0 is a->b).
    pub(crate) queues: Vec<[LinkQueue; 2]>,
    pub(crate) flows: BTreeMap<u64, Flow>,
    next_flow: u64,
    logs: Vec<EventLogEntry>,
    log_last: BTreeMap<(usize, String), u64>,
    schedule: BTreeMap<(u64, u64), Scheduled>,
    sched_seq: u64,
    triggers: Vec<TriggerSpec>,
    pub(crate) service_load: BTreeMap<usize, f64>,
    pub(crate) probe_rng: ChaCha8Rng,
    snapshot_seq: u64,
    /// Bumped on every state mutation that can change a forwarding walk.
    pub(crate) version: u64,
    pub(crate) path_cache: BTreeMap<u64, (u64, forward::Walk)>,
    pub(crate) last_ledger: Vec<LinkTickLedger>,
}

impl NetworkState {
    /// Build a simulator over `topo`. `seed` drives the probe corruption stream.
    pub fn new(topo: Topology, seed: u64) -> Self {
        let idx = TopoIndex::new(&topo);
        let fwd = recompute_routes(&topo, &idx, 0);
        let stats = topo
            .nodes
            .iter()
            .map(|n| vec![InterfaceStats::default(); n.interfaces.len()])
            .collect();
        let queues = topo.links.iter().map(|_| Default::default()).collect();
        // Probe stream is separate from anything else the run draws.
        let probe_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7072_6f62_6573_0001);
        NetworkState {
            topo,
            idx,
            clock: VirtualClock::default(),
            fwd,
            stats,
            queues,
            flows: BTreeMap::new(),
            next_flow: 1,
            logs: Vec::new(),
            log_last: BTreeMap::new(),
            schedule: BTreeMap::new(),
            sched_seq: 0,
            triggers: Vec::new(),
            service_load: BTreeMap::new(),
            probe_rng,
            snapshot_seq: 0,
            version: 0,
            path_cache: BTreeMap::new(),
            last_ledger: Vec::new(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn index(&self) -> &TopoIndex {
        &self.idx
    }

    pub fn now(&self) -> u64 {
        self.clock.now
    }

    pub fn clock(&self) -> VirtualClock {
        self.clock
    }

    pub fn forwarding(&self) -> &ForwardingState {
        &self.fwd
    }

    pub fn logs(&self) -> &[EventLogEntry] {
        &self.logs
    }

    pub fn flows(&self) -> impl Iterator<Item = &Flow> {
        self.flows.values()
    }

    pub fn flow(&self, id: u64) -> Option<&Flow> {
        self.flows.get(&id)
    }

    /// Per link-direction accounting of the most recent tick.
    pub fn last_tick_ledger(&self) -> &[LinkTickLedger] {
        &self.last_ledger
    }

    pub fn node_idx(&self, id: &NodeId) -> Result<usize, SimError> {
        self.idx
            .node
            .get(id)
            .copied()
            .ok_or_else(|| SimError::UnknownNode(id.to_string()))
    }

    pub fn node_idx_str(&self, id: &str) -> Result<usize, SimError> {
        self.node_idx(&NodeId::new(id))
    }

    pub fn intf_idx(&self, node: usize, intf: &InterfaceId) -> Result<usize, SimError> {
        self.idx.intf[node].get(intf).copied().ok_or_else(|| {
            SimError::UnknownInterface(format!("{}:{}", self.topo.nodes[node].id, intf))
        })
    }

    pub fn interface_stats(
        &self,
        node: &NodeId,
        intf: &InterfaceId,
    ) -> Result<&InterfaceStats, SimError> {
        let n = self.node_idx(node)?;
        let i = self.intf_idx(n, intf)?;
        Ok(&self.stats[n][i])
    }

    /// Run-length queue-length series of the egress queue at `(node, intf)`.
    pub fn queue_series(
        &self,
        node: &NodeId,
        intf: &InterfaceId,
    ) -> Result<Vec<(u64, u64)>, SimError> {
        let n = self.node_idx(node)?;
        let i = self.intf_idx(n, intf)?;
        match self.idx.link_at[n][i] {
            Some(l) => {
                let dir = if self.idx.link_ends[l][0].0 == n {
                    0
                } else {
                    1
                };
                Ok(self.queues[l][dir].series.clone())
            }
            None => Ok(Vec::new()),
        }
    }

    /// Link index attached at an endpoint.
    pub fn link_at(&self, at: &Endpoint) -> Result<usize, SimError> {
        let n = self.node_idx(&at.node)?;
        let i = self.intf_idx(n, &at.interface)?;
        self.idx.link_at[n][i].ok_or_else(|| SimError::NoLink(at.to_string()))
    }

    pub fn node_is_crashed(&self, node: usize) -> bool {
        self.topo.nodes[node].status == NodeStatus::Crashed
    }

    fn touch(&mut self) {
        self.version += 1;
    }

    fn reroute(&mut self) {
        self.fwd = recompute_routes(&self.topo, &self.idx, self.clock.now);
        self.touch();
    }

    /// Append a log line unless the node is crashed.
    pub fn log(&mut self, node: usize, severity: Severity, text: impl Into<String>) {
        if self.node_is_crashed(node) {
            return;
        }
        self.logs.push(EventLogEntry {
            t: self.clock.now,
            node: self.topo.nodes[node].id.clone(),
            severity,
            text: text.into(),
        });
    }

    /// Log a recurring condition at most once per second per `(node, key)`.
    pub(crate) fn log_limited(&mut self, node: usize, key: &str, severity: Severity, text: String) {
        let now = self.clock.now;
        let k = (node, key.to_string());
        if let Some(&last) = self.log_last.get(&k) {
            if now < last + LOG_INTERVAL_MS {
                return;
            }
        }
        if self.node_is_crashed(node) {
            return;
        }
        self.log_last.insert(k, now);
        self.log(node, severity, text);
    }

    /// Queue `mutation` to fire at the end of the first tick reaching `at`.
    pub fn schedule(&mut self, at: u64, mutation: Mutation) {
        self.push_event(at, Scheduled::Apply { mutation });
    }

    fn push_event(&mut self, at: u64, ev: Scheduled) {
        self.sched_seq += 1;
        self.schedule.insert((at, self.sched_seq), ev);
    }

    /// Times of still-pending scheduled events, in firing order.
    pub fn pending_events(&self) -> Vec<u64> {
        self.schedule.keys().map(|(t, _)| *t).collect()
    }

    pub fn add_flow(&mut self, spec: FlowSpec) -> u64 {
        let id = self.next_flow;
        self.next_flow += 1;
        self.flows.insert(id, Flow::new(id, spec));
        id
    }

    pub fn remove_flow(&mut self, id: u64) -> Option<Flow> {
        self.path_cache.remove(&id);
        self.flows.remove(&id)
    }

    /// Apply a mutation immediately.
    pub fn apply(&mut self, m: Mutation) -> Result<(), SimError> {
        match m {
            Mutation::SetLinkState { at, state } => {
                let link = self.link_at(&at)?;
                self.set_link_state(link, state, false);
            }
            Mutation::StartFlap { at, up_ms, down_ms } => {
                let link = self.link_at(&at)?;
                self.set_link_state(link, LinkState::Down, true);
                self.push_event(
                    self.clock.now + down_ms,
                    Scheduled::FlapToggle {
                        link,
                        up_ms,
                        down_ms,
                        to: LinkState::Up,
                    },
                );
            }
            Mutation::SetErrorRate { at, error_rate } => {
                let link = self.link_at(&at)?;
                self.topo.links[link].error_rate = error_rate.clamp(0.0, 1.0);
                self.touch();
            }
            Mutation::SetLinkMtu { at, mtu } => {
                let link = self.link_at(&at)?;
                for (n, i) in self.idx.link_ends[link] {
                    self.topo.nodes[n].interfaces[i].mtu = mtu;
                }
                self.touch();
            }
            Mutation::SetNodeStatus { node, status } => {
                let n = self.node_idx(&node)?;
                self.set_node_status(n, status);
            }
            Mutation::SetInterfaceAddress { at, ip, netmask } => {
                let n = self.node_idx(&at.node)?;
                let i = self.intf_idx(n, &at.interface)?;
                let intf = &mut self.topo.nodes[n].interfaces[i];
                intf.ip = ip;
                intf.netmask = netmask.min(32);
                self.reroute();
            }
            Mutation::SetOspfArea { at, area } => {
                let n = self.node_idx(&at.node)?;
                let i = self.intf_idx(n, &at.interface)?;
                self.topo.nodes[n]
                    .config
                    .ospf_area_by_interface
                    .insert(at.interface.clone(), area);
                if let Some(link) = self.idx.link_at[n][i] {
                    let (p, pi) = self.idx.peer(link, n);
                    let (a, b) = (&self.topo.nodes[n], &self.topo.nodes[p]);
                    if a.kind == NodeKind::Router && b.kind == NodeKind::Router {
                        let pa = b
                            .config
                            .ospf_area_by_interface
                            .get(&b.interfaces[pi].id)
                            .copied();
                        if pa != Some(area) {
                            let pid = b.interfaces[pi].id.clone();
                            self.log(
                                n,
                                Severity::Error,
                                format!(
                                    "OSPF adjacency failure: area mismatch on {}",
                                    at.interface
                                ),
                            );
                            self.log(
                                p,
                                Severity::Error,
                                format!("OSPF adjacency failure: area mismatch on {pid}"),
                            );
                        }
                    }
                }
                self.reroute();
            }
            Mutation::AddStaticRoute { node, route } => {
                let n = self.node_idx(&node)?;
                self.topo.nodes[n].config.static_routes.push(route);
                self.reroute();
            }
            Mutation::InsertAcl { node, rule } => {
                let n = self.node_idx(&node)?;
                self.topo.nodes[n].config.acl_rules.insert(0, rule);
                self.touch();
            }
            Mutation::ArmTrigger { trigger } => {
                self.node_idx(&trigger.dst)?;
                for s in &trigger.sources {
                    self.node_idx(s)?;
                }
                self.triggers.push(trigger);
                let t = self.triggers.len() - 1;
                self.fire_trigger(t);
            }
            Mutation::Log {
                node,
                severity,
                text,
            } => {
                let n = self.node_idx(&node)?;
                self.log(n, severity, text);
            }
        }
        Ok(())
    }

    fn set_link_state(&mut self, link: usize, state: LinkState, flap: bool) {
        self.topo.links[link].state = state;
        for (n, i) in self.idx.link_ends[link] {
            let intf = self.topo.nodes[n].interfaces[i].id.clone();
            let (sev, text) = match (flap, state) {
                (true, LinkState::Up) => (Severity::Warning, format!("LINK_FLAP {intf} up")),
                (true, _) => (Severity::Warning, format!("LINK_FLAP {intf} down")),
                (false, LinkState::Up) => (
                    Severity::Notice,
                    format!("LINK_UP {intf}: Interface state up"),
                ),
                (false, LinkState::Down) => (
                    Severity::Error,
                    format!("LINK_DOWN {intf}: Interface state down"),
                ),
                (false, LinkState::Detached) => (
                    Severity::Error,
                    format!("LINK_DETACHED {intf}: Physical link not detected; PHY down"),
                ),
            };
            self.log(n, sev, text);
        }
        self.reroute();
    }

    fn set_node_status(&mut self, n: usize, status: NodeStatus) {
        self.topo.nodes[n].status = status;
        let id = self.topo.nodes[n].id.clone();
        let is_host = self.topo.nodes[n].is_host();
        for i in 0..self.topo.nodes[n].interfaces.len() {
            let Some(link) = self.idx.link_at[n][i] else {
                continue;
            };
            let (p, pi) = self.idx.peer(link, n);
            let pintf = self.topo.nodes[p].interfaces[pi].id.clone();
            let text = match (status, is_host) {
                (NodeStatus::Crashed, true) => {
                    format!("HOST_UNRESPONSIVE {pintf}: no heartbeat from {id}")
                }
                (NodeStatus::Crashed, false) => {
                    format!("NEIGHBOR_DOWN {pintf}: lost contact with {id}")
                }
                (NodeStatus::Up, _) => format!("NEIGHBOR_UP {pintf}: {id} reachable"),
            };
            self.log(p, Severity::Error, text);
        }
        self.reroute();
    }

    fn fire_trigger(&mut self, t: usize) {
        let trig = self.triggers[t].clone();
        let now = self.clock.now;
        let end = (trig.burst_len_ms > 0).then_some(now + trig.burst_len_ms);
        match trig.kind {
            TriggerKind::IncastOd | TriggerKind::Burst => {
                for s in &trig.sources {
                    self.add_flow(FlowSpec {
                        src: s.clone(),
                        dst: trig.dst.clone(),
                        kind: FlowKind::Udp,
                        demand_mbps: trig.rate,
                        packet_size: 1500,
                        dst_port: 9000,
                        start: now,
                        end,
                        elastic: false,
                        monitored: false,
                        tag: "trigger".into(),
                    });
                }
            }
            TriggerKind::RequestFlood => {
                let dst = self.idx.node[&trig.dst];
                *self.service_load.entry(dst).or_insert(0.0) += trig.rate;
                if let Some(e) = end {
                    self.push_event(
                        e,
                        Scheduled::FloodEnd {
                            node: dst,
                            rps: trig.rate,
                        },
                    );
                }
                // Request bytes: roughly 800 B per request spread over the sources.
                let per = if trig.sources.is_empty() {
                    0.0
                } else {
                    trig.rate * 800.0 * 8.0 / 1e6 / trig.sources.len() as f64
                };
                for s in &trig.sources {
                    self.add_flow(FlowSpec {
                        src: s.clone(),
                        dst: trig.dst.clone(),
                        kind: FlowKind::Http,
                        demand_mbps: per,
                        packet_size: 800,
                        dst_port: 80,
                        start: now,
                        end,
                        elastic: false,
                        monitored: false,
                        tag: "flood".into(),
                    });
                }
            }
        }
        if trig.interval_ms > 0 && trig.burst_len_ms > 0 {
            self.push_event(
                now + trig.interval_ms,
                Scheduled::TriggerFire { trigger: t },
            );
        }
    }

    /// Fire every scheduled event whose time has come.
    fn fire_due(&mut self) {
        while let Some((&(t, seq), _)) = self.schedule.iter().next() {
            if t > self.clock.now {
                break;
            }
            let ev = self.schedule.remove(&(t, seq)).expect("key just observed");
            match ev {
                Scheduled::Apply { mutation } => {
                    if let Err(e) = self.apply(mutation) {
                        log::warn!("scheduled mutation failed: {e}");
                    }
                }
                Scheduled::FlapToggle {
                    link,
                    up_ms,
                    down_ms,
                    to,
                } => {
                    self.set_link_state(link, to, true);
                    let (next, after) = match to {
                        LinkState::Up => (LinkState::Down, up_ms),
                        _ => (LinkState::Up, down_ms),
                    };
                    self.push_event(
                        self.clock.now + after,
                        Scheduled::FlapToggle {
                            link,
                            up_ms,
                            down_ms,
                            to: next,
                        },
                    );
                }
                Scheduled::TriggerFire { trigger } => self.fire_trigger(trigger),
                Scheduled::FloodEnd { node, rps } => {
                    if let Some(l) = self.service_load.get_mut(&node) {
                        *l = (*l - rps).max(0.0);
                    }
                }
            }
        }
    }

    /// Advance virtual time by `dt` ms, one tick at a time.
    pub fn advance(&mut self, dt: u64) -> Result<(), SimError> {
        let tick = self.clock.tick;
        if !dt.is_multiple_of(tick) {
            return Err(SimError::BadStep(dt, tick));
        }
        for _ in 0..dt / tick {
            self.step();
        }
        Ok(())
    }

    /// One tick: transport, then clock, then due events.
    pub fn step(&mut self) {
        self.fluid_tick();
        self.clock.now += self.clock.tick;
        self.fire_due();
    }

    /// Fire events due at the current time without advancing.
    pub fn settle(&mut self) {
        self.fire_due();
    }

    /// SHA-256 over the complete mutable state.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            topo: &'a Topology,
            clock: VirtualClock,
            fwd: &'a ForwardingState,
            stats: &'a Vec<Vec<InterfaceStats>>,
            queues: &'a Vec<[LinkQueue; 2]>,
            flows: &'a BTreeMap<u64, Flow>,
            next_flow: u64,
            logs: &'a Vec<EventLogEntry>,
            log_last: Vec<(&'a (usize, String), &'a u64)>,
            schedule: Vec<(&'a (u64, u64), &'a Scheduled)>,
            triggers: &'a Vec<TriggerSpec>,
            service_load: &'a BTreeMap<usize, f64>,
            probe_word: u128,
            snapshot_seq: u64,
        }
        let v = View {
            topo: &self.topo,
            clock: self.clock,
            fwd: &self.fwd,
            stats: &self.stats,
            queues: &self.queues,
            flows: &self.flows,
            next_flow: self.next_flow,
            logs: &self.logs,
            log_last: self.log_last.iter().collect(),
            schedule: self.schedule.iter().collect(),
            triggers: &self.triggers,
            service_load: &self.service_load,
            probe_word: self.probe_rng.get_word_pos(),
            snapshot_seq: self.snapshot_seq,
        };
        let bytes = serde_json::to_vec(&v).expect("state serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
