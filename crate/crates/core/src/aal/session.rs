//! The serialized tool gateway for one agent session.

use std::collections::BTreeSet;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use super::policy::AccessPolicy;
use super::record::*;
use super::render::render_cli;
use super::tools::{registry, validate_args, ScopeKind, ToolDescriptor};
use crate::eval::{AgentMetadata, Submission};
use crate::incident::RootCause;
use crate::sim::{FlowKind, FlowSpec, NetworkState, ProbeKind, RouteAction, Snapshot, TICK_MS};
use crate::topology::{Entity, InterfaceId, NodeId, NodeStatus};

/// Timeout charged for a probe that gets no answer.
pub const PROBE_TIMEOUT_MS: u64 = 1000;
/// Per-probe overhead on top of the round trip.
pub const PROBE_OVERHEAD_MS: u64 = 100;
/// Cost of reading device state (counters, tables, configs, logs).
pub const READ_COST_MS: u64 = 200;
pub const REACHABILITY_COST_MS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeMode {
    Stepped,
    /// Virtual ms per wall ms while the agent is idle, on top of charged costs.
    Paced(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloseReason {
    Submitted,
    Horizon,
}

fn ceil_tick(ms: f64) -> u64 {
    let t = TICK_MS as f64;
    ((ms.max(0.0) / t).ceil() * t) as u64
}

fn wall_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub struct Session {
    state: NetworkState,
    policy: AccessPolicy,
    tools: Vec<ToolDescriptor>,
    records: Vec<ToolInvocationRecord>,
    snapshots: Vec<Snapshot>,
    submission: Option<(Submission, u64)>,
    closed: Option<CloseReason>,
    agent_start: u64,
    deadline: u64,
    charged_total: u64,
    universe: Vec<Entity>,
    time_mode: TimeMode,
    pace_anchor: Instant,
    pace_carry: f64,
}

impl Session {
    /// Open the agent phase on an already warmed-up simulator.
    pub fn new(
        state: NetworkState,
        policy: AccessPolicy,
        horizon_ms: u64,
        time_mode: TimeMode,
    ) -> Self {
        let now = state.now();
        let universe = state.topology().entity_universe();
        Session {
            state,
            policy,
            tools: registry(),
            records: Vec::new(),
            snapshots: Vec::new(),
            submission: None,
            closed: (horizon_ms == 0).then_some(CloseReason::Horizon),
            agent_start: now,
            deadline: now + horizon_ms,
            charged_total: 0,
            universe,
            time_mode,
            pace_anchor: Instant::now(),
            pace_carry: 0.0,
        }
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn into_state(self) -> NetworkState {
        self.state
    }

    pub fn records(&self) -> &[ToolInvocationRecord] {
        &self.records
    }

    pub fn take_snapshots(&mut self) -> Vec<Snapshot> {
        std::mem::take(&mut self.snapshots)
    }

    pub fn closed(&self) -> Option<CloseReason> {
        self.closed
    }

    pub fn submission(&self) -> Option<&(Submission, u64)> {
        self.submission.as_ref()
    }

    pub fn agent_start(&self) -> u64 {
        self.agent_start
    }

    pub fn deadline(&self) -> u64 {
        self.deadline
    }

    /// Total virtual ms charged by calls, waits included.
    pub fn charged_total(&self) -> u64 {
        self.charged_total
    }

    pub fn list_tools(&self) -> Vec<&ToolDescriptor> {
        self.tools
            .iter()
            .filter(|t| self.policy.allows_tool(t.name))
            .collect()
    }

    /// Advance by `ms` (rounded up to a tick), stopping at the horizon.
    fn charge(&mut self, ms: u64) -> u64 {
        let want = ceil_tick(ms as f64);
        let room = self.deadline.saturating_sub(self.state.now());
        let dt = want.min(room);
        if dt > 0 {
            self.state.advance(dt).expect("tick multiple");
        }
        self.charged_total += dt;
        if self.state.now() >= self.deadline && self.closed.is_none() {
            self.closed = Some(CloseReason::Horizon);
        }
        dt
    }

    /// In paced mode, let virtual time follow the wall clock since the last call.
    pub fn pace(&mut self) {
        let TimeMode::Paced(ratio) = self.time_mode else {
            return;
        };
        if self.closed.is_some() {
            return;
        }
        let wall = self.pace_anchor.elapsed().as_secs_f64() * 1000.0;
        self.pace_anchor = Instant::now();
        self.pace_carry += wall * ratio;
        let ticks = (self.pace_carry / TICK_MS as f64).floor();
        self.pace_carry -= ticks * TICK_MS as f64;
        let room = self.deadline.saturating_sub(self.state.now());
        let dt = ((ticks as u64) * TICK_MS).min(room);
        if dt > 0 {
            self.state.advance(dt).expect("tick multiple");
        }
        if self.state.now() >= self.deadline && self.closed.is_none() {
            self.closed = Some(CloseReason::Horizon);
        }
    }

    fn record(
        &mut self,
        tool: &str,
        args: &Value,
        outcome: Outcome,
        snapshot_id: Option<String>,
        t0: u64,
        charged: u64,
    ) {
        self.records.push(ToolInvocationRecord {
            seq: self.records.len() as u64,
            virtual_ts: t0,
            wall_ts: wall_now(),
            tool: tool.to_string(),
            args: args.clone(),
            outcome,
            snapshot_id,
            charged_ms: charged,
        });
    }

    /// Record a request that never reached a tool (malformed envelope).
    pub fn record_malformed(&mut self, what: &str, args: &Value, err: &RpcError) {
        let t0 = self.state.now();
        self.record(
            what,
            args,
            Outcome::ToolError {
                code: err.code,
                reason: err.message.clone(),
            },
            None,
            t0,
            0,
        );
    }

    /// Run one tool call through policy, validation, snapshot, execution and charging.
    pub fn call(&mut self, name: &str, args: &Value, cli: bool) -> Result<Value, RpcError> {
        self.pace();
        let t0 = self.state.now();
        let fail = |s: &mut Self, err: RpcError, snap: Option<String>, charged: u64| {
            s.record(
                name,
                args,
                Outcome::ToolError {
                    code: err.code,
                    reason: err.message.clone(),
                },
                snap,
                t0,
                charged,
            );
            Err(err)
        };
        let Some(tool) = self.tools.iter().find(|t| t.name == name).cloned() else {
            return fail(
                self,
                RpcError::new(ERR_UNKNOWN, format!("unknown tool: {name}")),
                None,
                0,
            );
        };
        if let Err(why) = self.policy.check(
            name,
            tool.scope_kind == ScopeKind::Global,
            &tool.node_args(args),
        ) {
            self.record(
                name,
                args,
                Outcome::Denied {
                    policy: why.clone(),
                },
                None,
                t0,
                0,
            );
            return Err(RpcError::new(
                ERR_DENIED,
                format!("denied by policy: {why}"),
            ));
        }
        match self.closed {
            Some(CloseReason::Submitted) if name == "submit" => {
                return fail(
                    self,
                    RpcError::new(ERR_ALREADY_SUBMITTED, "already submitted"),
                    None,
                    0,
                )
            }
            Some(CloseReason::Submitted) => {
                return fail(
                    self,
                    RpcError::new(ERR_TOOL, "session closed: already submitted"),
                    None,
                    0,
                )
            }
            Some(CloseReason::Horizon) => {
                return fail(
                    self,
                    RpcError::new(ERR_TOOL, "session closed: horizon reached"),
                    None,
                    0,
                )
            }
            None => {}
        }
        let a = match validate_args(&tool, args, self.state.topology()) {
            Ok(a) => a,
            Err(m) => return fail(self, RpcError::new(ERR_INVALID_PARAMS, m), None, 0),
        };
        let snap = self.state.snapshot();
        let snap_id = snap.id.clone();
        self.snapshots.push(snap);
        let charged_before = self.charged_total;
        let res = self.execute(name, &a);
        let charged = self.charged_total - charged_before;
        match res {
            Ok((result, cost)) => {
                let c2 = self.charge(cost);
                self.record(
                    name,
                    args,
                    Outcome::Ok {
                        result: result.clone(),
                    },
                    Some(snap_id),
                    t0,
                    charged + c2,
                );
                Ok(if cli {
                    json!({ "text": render_cli(name, &result) })
                } else {
                    result
                })
            }
            Err((err, cost)) => {
                let c2 = self.charge(cost);
                fail(self, err, Some(snap_id), charged + c2)
            }
        }
    }

    fn node_arg(&self, a: &Map<String, Value>, k: &str) -> NodeId {
        NodeId::new(a[k].as_str().expect("validated"))
    }

    fn managed(&self, n: &NodeId) -> Result<(), (RpcError, u64)> {
        let i = self.state.node_idx(n).expect("validated");
        if self.state.node_is_crashed(i) {
            Err((
                RpcError::new(ERR_TOOL, format!("{n}: unreachable from MGMT")),
                PROBE_TIMEOUT_MS,
            ))
        } else {
            Ok(())
        }
    }

    fn execute(
        &mut self,
        name: &str,
        a: &Map<String, Value>,
    ) -> Result<(Value, u64), (RpcError, u64)> {
        let u = |k: &str| a.get(k).and_then(Value::as_u64).unwrap_or(0);
        let sim_err = |e: crate::sim::SimError| (RpcError::new(ERR_TOOL, e.to_string()), 0);
        match name {
            "ping" => {
                let (src, dst) = (self.node_arg(a, "src"), self.node_arg(a, "dst"));
                self.managed(&src)?;
                let count = u("count").min(100) as u32;
                let size = u("size").clamp(28, 65_000) as u32;
                let r = self
                    .state
                    .send_probe(ProbeKind::Icmp, &src, &dst, size, count, 0)
                    .map_err(sim_err)?;
                let cost = r
                    .probes
                    .iter()
                    .map(|p| {
                        ceil_tick(
                            p.rtt_ms.map_or(PROBE_TIMEOUT_MS as f64, |x| x)
                                + PROBE_OVERHEAD_MS as f64,
                        )
                    })
                    .sum();
                Ok((serde_json::to_value(r).expect("ser"), cost))
            }
            "traceroute" => {
                let (src, dst) = (self.node_arg(a, "src"), self.node_arg(a, "dst"));
                self.managed(&src)?;
                let r = self.state.trace_path(&src, &dst).map_err(sim_err)?;
                let mut cost = PROBE_OVERHEAD_MS * (r.hops.len() as u64 + 1);
                if !r.reached {
                    cost += PROBE_TIMEOUT_MS;
                }
                Ok((serde_json::to_value(r).expect("ser"), cost))
            }
            "iperf" => {
                let (src, dst) = (self.node_arg(a, "src"), self.node_arg(a, "dst"));
                self.managed(&src)?;
                let dur = ceil_tick(a["duration_s"].as_f64().unwrap_or(2.0).min(60.0) * 1000.0);
                let topo = self.state.topology();
                let nic = topo
                    .node(&src)
                    .and_then(|n| n.interfaces.first())
                    .and_then(|i| topo.link_at(&src, &i.id))
                    .map_or(100.0, |l| topo.links[l].capacity_mbps);
                let now = self.state.now();
                let id = self.state.add_flow(FlowSpec {
                    src: src.clone(),
                    dst: dst.clone(),
                    kind: FlowKind::TcpBulk,
                    demand_mbps: nic,
                    packet_size: 1500,
                    dst_port: 5201,
                    start: now,
                    end: Some(now + dur),
                    elastic: true,
                    monitored: false,
                    tag: "iperf".into(),
                });
                let ran = self.charge(dur);
                let f = self.state.remove_flow(id).expect("flow just added");
                let mbps = if ran == 0 {
                    0.0
                } else {
                    f.delivered as f64 * 8.0 / (ran as f64 * 1000.0)
                };
                Ok((
                    json!({"src": src, "dst": dst, "duration_s": ran as f64 / 1000.0, "mbps": (mbps * 1000.0).round() / 1000.0}),
                    0,
                ))
            }
            "get_reachability" => Ok((
                serde_json::to_value(self.state.reachability_matrix()).expect("ser"),
                REACHABILITY_COST_MS,
            )),
            "tcp_connect" | "http_probe" => {
                let (src, dst) = (self.node_arg(a, "src"), self.node_arg(a, "dst"));
                self.managed(&src)?;
                let (kind, port) = if name == "tcp_connect" {
                    (ProbeKind::TcpConnect, u("port").min(65535) as u16)
                } else {
                    (ProbeKind::Http, 80)
                };
                let r = self
                    .state
                    .send_probe(kind, &src, &dst, 64, 1, port)
                    .map_err(sim_err)?;
                let p = &r.probes[0];
                let cost = ceil_tick(
                    p.rtt_ms.map_or(PROBE_TIMEOUT_MS as f64, |x| x) + PROBE_OVERHEAD_MS as f64,
                );
                let mut out = json!({"src": src, "dst": dst});
                if name == "tcp_connect" {
                    out["port"] = port.into();
                    out["ok"] = p.fail.is_none().into();
                    if let Some(rtt) = p.rtt_ms {
                        out["rtt_ms"] = rtt.into();
                    }
                } else if let Some(rtt) = p.rtt_ms {
                    out["latency_ms"] = rtt.into();
                }
                if let Some(f) = &p.fail {
                    out["fail"] = serde_json::to_value(f).expect("ser");
                }
                Ok((out, cost))
            }
            "port_counters" => {
                let node = self.node_arg(a, "node");
                self.managed(&node)?;
                let intf = InterfaceId::new(a["intf"].as_str().expect("validated"));
                let st = self.state.interface_stats(&node, &intf).map_err(sim_err)?;
                let mut v = json!({"node": node, "interface": intf});
                if let (Value::Object(o), Value::Object(s)) =
                    (&mut v, serde_json::to_value(st).expect("ser"))
                {
                    o.extend(s);
                }
                Ok((v, READ_COST_MS))
            }
            "routing_table" => {
                let node = self.node_arg(a, "node");
                self.managed(&node)?;
                let i = self.state.node_idx(&node).expect("validated");
                let entries: Vec<Value> = self.state.forwarding().tables[i]
                    .iter()
                    .map(|e| {
                        let (nh, intf) = match &e.action {
                            RouteAction::Local => ("local".to_string(), None),
                            RouteAction::Connected => ("connected".to_string(), None),
                            RouteAction::Forward { interface, next_hop } => (next_hop.to_string(), Some(interface)),
                            RouteAction::Blackhole => ("BLACKHOLE".to_string(), None),
                            RouteAction::Unreachable => ("UNREACHABLE".to_string(), None),
                        };
                        let mut v = json!({"prefix": e.prefix.to_string(), "next_hop": nh, "origin": e.origin});
                        if let Some(i) = intf {
                            v["interface"] = json!(i);
                        }
                        v
                    })
                    .collect();
                Ok((json!({"node": node, "entries": entries}), READ_COST_MS))
            }
            "get_config" => {
                let node = self.node_arg(a, "node");
                self.managed(&node)?;
                let n = self.state.topology().node(&node).expect("validated");
                let mut v = json!({
                    "node": n.id,
                    "kind": n.kind,
                    "interfaces": n.interfaces,
                });
                if let Some(lb) = n.loopback {
                    v["loopback"] = json!(lb);
                }
                if let (Value::Object(o), Value::Object(c)) =
                    (&mut v, serde_json::to_value(&n.config).expect("ser"))
                {
                    o.extend(c);
                }
                Ok((v, READ_COST_MS))
            }
            "get_logs" => {
                let node = self.node_arg(a, "node");
                self.managed(&node)?;
                let since = u("since_ms");
                let entries: Vec<Value> = self
                    .state
                    .logs()
                    .iter()
                    .filter(|e| e.node == node && e.t >= since)
                    .map(|e| json!({"t": e.t, "severity": e.severity, "text": e.text}))
                    .collect();
                Ok((json!({"node": node, "entries": entries}), READ_COST_MS))
            }
            "queue_stats" => {
                let node = self.node_arg(a, "node");
                self.managed(&node)?;
                let intf = InterfaceId::new(a["intf"].as_str().expect("validated"));
                let since = u("since_ms");
                let st = self
                    .state
                    .interface_stats(&node, &intf)
                    .map_err(sim_err)?
                    .clone();
                let full = self.state.queue_series(&node, &intf).map_err(sim_err)?;
                // Keep the value in force at `since` plus every later change.
                let first = full.iter().rposition(|&(t, _)| t <= since).unwrap_or(0);
                let series: Vec<(u64, u64)> = full.into_iter().skip(first).collect();
                let buffer = self
                    .state
                    .topology()
                    .link_at(&node, &intf)
                    .map(|l| self.state.topology().links[l].buffer_bytes);
                Ok((
                    json!({
                        "node": node, "interface": intf,
                        "queue_len": st.queue_len, "queue_peak": st.queue_peak,
                        "buffer_bytes": buffer, "drops_queue": st.drops_queue,
                        "tick_ms": TICK_MS, "series": series,
                    }),
                    READ_COST_MS,
                ))
            }
            "list_nodes" => {
                let topo = self.state.topology();
                let mut nodes: Vec<Value> = topo
                    .nodes
                    .iter()
                    .map(|n| {
                        let status = match n.status {
                            NodeStatus::Up => "up",
                            NodeStatus::Crashed => "unreachable from MGMT",
                        };
                        json!({"id": n.id, "kind": n.kind, "status": status})
                    })
                    .collect();
                nodes.sort_by(|x, y| x["id"].as_str().cmp(&y["id"].as_str()));
                Ok((json!({ "nodes": nodes }), READ_COST_MS))
            }
            "wait" => {
                let ran = self.charge(u("ms"));
                Ok((json!({"waited_ms": ran, "now_ms": self.state.now()}), 0))
            }
            "submit" => {
                let sub = self.parse_submission(a).map_err(|e| (e, 0))?;
                let now = self.state.now();
                self.submission = Some((sub, now));
                self.closed = Some(CloseReason::Submitted);
                Ok((json!({"accepted": true, "virtual_ms": now}), 0))
            }
            _ => unreachable!("registry and dispatch agree"),
        }
    }

    fn parse_submission(&self, a: &Map<String, Value>) -> Result<Submission, RpcError> {
        let bad = |m: String| RpcError::new(ERR_INVALID_PARAMS, m);
        let universe: BTreeSet<&Entity> = self.universe.iter().collect();
        let mut localization = BTreeSet::new();
        let mut rejected = Vec::new();
        for v in a["localization"].as_array().expect("validated") {
            match parse_entity(v) {
                Some(e) if universe.contains(&e) => {
                    localization.insert(e);
                }
                _ => rejected.push(v.to_string()),
            }
        }
        if !rejected.is_empty() {
            return Err(bad(format!(
                "parameter `localization`: not in entity universe: {}",
                rejected.join(", ")
            )));
        }
        let mut root_causes = BTreeSet::new();
        for v in a["root_causes"].as_array().expect("validated") {
            match v.as_str().map(str::parse::<RootCause>) {
                Some(Ok(c)) => {
                    root_causes.insert(c);
                }
                Some(Err(e)) => rejected.push(e.to_string()),
                None => rejected.push(v.to_string()),
            }
        }
        if !rejected.is_empty() {
            return Err(bad(format!(
                "parameter `root_causes`: {}",
                rejected.join(", ")
            )));
        }
        let agent_metadata = match a.get("agent_metadata") {
            Some(m) => Some(
                serde_json::from_value::<AgentMetadata>(m.clone())
                    .map_err(|e| bad(format!("parameter `agent_metadata`: {e}")))?,
            ),
            None => None,
        };
        Ok(Submission {
            detected: a["detected"].as_bool().expect("validated"),
            localization,
            root_causes,
            report_text: a["report_text"].as_str().unwrap_or_default().to_string(),
            agent_metadata,
        })
    }
}

/// `"node/comp"`, `{"node", "component"}` or `{"dev", "comp"}`.
pub fn parse_entity(v: &Value) -> Option<Entity> {
    match v {
        Value::String(s) => {
            let (n, c) = s.rsplit_once('/')?;
            Some(Entity::new(n, c))
        }
        Value::Object(o) => {
            let n = o.get("node").or_else(|| o.get("dev"))?.as_str()?;
            let c = o.get("component").or_else(|| o.get("comp"))?.as_str()?;
            Some(Entity::new(n, c))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aal::wire::handle_line;
    use crate::topology::{build_scenario, Scenario, Size};

    fn session(policy: AccessPolicy) -> Session {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        Session::new(NetworkState::new(t, 0), policy, 600_000, TimeMode::Stepped)
    }

    #[test]
    fn denied_call_leaves_state_alone() {
        let p: AccessPolicy =
            serde_json::from_str(r#"{"nodes": ["pod0.*"], "tools": ["*"]}"#).unwrap();
        let mut s = session(p);
        let fp = s.state().fingerprint();
        let e = s
            .call("ping", &json!({"src": "pod1.h0", "dst": "pod0.h0"}), false)
            .unwrap_err();
        assert_eq!(e.code, ERR_DENIED);
        assert_eq!(s.state().fingerprint(), fp);
        assert!(s.take_snapshots().is_empty());
        assert!(matches!(s.records()[0].outcome, Outcome::Denied { .. }));
        assert_eq!(s.records()[0].charged_ms, 0);
    }

    #[test]
    fn charged_time_equals_elapsed() {
        let mut s = session(AccessPolicy::permissive());
        let t0 = s.state().now();
        s.call("ping", &json!({"src": "pod0.h0", "dst": "pod1.h1"}), false)
            .unwrap();
        s.call(
            "traceroute",
            &json!({"src": "pod0.h0", "dst": "pod1.h1"}),
            false,
        )
        .unwrap();
        s.call("wait", &json!({"ms": 1234}), false).unwrap();
        s.call("get_logs", &json!({"node": "spine0"}), false)
            .unwrap();
        s.call(
            "iperf",
            &json!({"src": "pod0.h0", "dst": "pod1.h1", "duration_s": 1}),
            false,
        )
        .unwrap();
        let _ = s.call("ping", &json!({"src": "nope", "dst": "pod1.h1"}), false);
        let sum: u64 = s.records().iter().map(|r| r.charged_ms).sum();
        assert_eq!(sum, s.state().now() - t0);
        assert_eq!(sum, s.charged_total());
        let seqs: Vec<u64> = s.records().iter().map(|r| r.seq).collect();
        assert_eq!(seqs, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn idle_iperf_hits_nic_rate() {
        let mut s = session(AccessPolicy::permissive());
        let r = s
            .call("iperf", &json!({"src": "pod0.h0", "dst": "pod1.h1"}), false)
            .unwrap();
        let mbps = r["mbps"].as_f64().unwrap();
        assert!((mbps - 100.0).abs() < 1.0, "{mbps}");
        assert_eq!(s.state().flows().count(), 0);
    }

    #[test]
    fn submit_once() {
        let mut s = session(AccessPolicy::permissive());
        s.call("submit", &json!({"detected": true, "localization": ["spine0/system"], "root_causes": ["switch_crash"]}), false)
            .unwrap();
        let again = s
            .call("submit", &json!({"detected": false}), false)
            .unwrap_err();
        assert_eq!(again.code, ERR_ALREADY_SUBMITTED);
        let after = s.call("list_nodes", &Value::Null, false).unwrap_err();
        assert_eq!(after.code, ERR_TOOL);
        assert!(s.submission().unwrap().0.detected);
    }

    #[test]
    fn submit_rejects_foreign_entities() {
        let mut s = session(AccessPolicy::permissive());
        let e = s
            .call("submit", &json!({"detected": true, "localization": ["spine9/system", {"dev": "spine0", "comp": "eth0"}]}), false)
            .unwrap_err();
        assert_eq!(e.code, ERR_INVALID_PARAMS);
        assert!(e.message.contains("spine9/system"), "{}", e.message);
        assert!(s.closed().is_none());
        let e = s
            .call(
                "submit",
                &json!({"detected": true, "root_causes": ["gremlins"]}),
                false,
            )
            .unwrap_err();
        assert!(e.message.contains("gremlins"));
    }

    #[test]
    fn crashed_node_unreachable_from_mgmt() {
        let mut s = session(AccessPolicy::permissive());
        s.state
            .apply(crate::sim::Mutation::SetNodeStatus {
                node: NodeId::new("spine0"),
                status: NodeStatus::Crashed,
            })
            .unwrap();
        let e = s
            .call("get_logs", &json!({"node": "spine0"}), false)
            .unwrap_err();
        assert_eq!(e.code, ERR_TOOL);
        assert!(e.message.contains("unreachable from MGMT"));
        let l = s.call("list_nodes", &Value::Null, false).unwrap();
        let spine = l["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .find(|n| n["id"] == "spine0")
            .unwrap()
            .clone();
        assert_eq!(spine["status"], "unreachable from MGMT");
    }

    #[test]
    fn horizon_closes_session() {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        let mut s = Session::new(
            NetworkState::new(t, 0),
            AccessPolicy::permissive(),
            1000,
            TimeMode::Stepped,
        );
        let r = s.call("wait", &json!({"ms": 5000}), false).unwrap();
        assert_eq!(r["waited_ms"], 1000);
        assert_eq!(s.closed(), Some(CloseReason::Horizon));
        assert!(s.call("list_nodes", &Value::Null, false).is_err());
    }

    #[test]
    fn wire_envelopes() {
        let mut s = session(AccessPolicy {
            node_globs: vec!["*".into()],
            tool_globs: vec!["ping".into(), "traceroute".into()],
        });
        let v: Value =
            serde_json::from_str(&handle_line(&mut s, r#"{"id": 1, "method": "tools/list"}"#))
                .unwrap();
        assert_eq!(v["result"]["tools"].as_array().unwrap().len(), 2);
        let v: Value = serde_json::from_str(&handle_line(&mut s, "not json")).unwrap();
        assert_eq!(v["id"], Value::Null);
        assert_eq!(v["error"]["code"], ERR_INVALID_PARAMS);
        let v: Value = serde_json::from_str(&handle_line(
            &mut s,
            r#"{"id": 2, "method": "tools/call", "params": {"name": "frobnicate"}}"#,
        ))
        .unwrap();
        assert_eq!(v["error"]["code"], ERR_UNKNOWN);
        let v: Value = serde_json::from_str(&handle_line(
            &mut s,
            r#"{"id": 3, "method": "tools/call", "params": {"name": "ping", "arguments": {"src": "pod0.h0", "dst": "pod0.h1"}, "render": "cli"}}"#,
        ))
        .unwrap();
        assert!(v["result"]["text"]
            .as_str()
            .unwrap()
            .contains("packet loss"));
        // tools/list is not a tool call; everything else is recorded.
        assert_eq!(s.records().len(), 3);
    }
}
