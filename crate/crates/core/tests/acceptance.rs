//! Acceptance gates. Each criterion prints one PASS/FAIL line; any failure fails the target.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use arena_core::aal::{AccessPolicy, Session, TimeMode, ERR_DENIED, TOOL_NAMES};
use arena_core::eval::{
    aggregate, grade_masks, Confusion, EfficiencyMetrics, EvaluationReport, RunOutcome, SloConfig,
    Submission,
};
use arena_core::incident::{shipped, Goal, GroundTruth, IncidentSpec};
use arena_core::orchestrator::{
    run_transcript, smoke_matrix, truth_submission_request, Prepared, SmokeStatus,
};
use arena_core::sim::{FlowKind, FlowSpec, Mutation, NetworkState, RouteAction};
use arena_core::topology::{build_scenario, Endpoint, LinkState, NodeId, Scenario, Size};

type Verdict = Result<String, String>;

fn main() {
    let gates: [(&str, fn() -> Verdict); 8] = [
        ("(a) determinism", determinism),
        ("(b) smoke matrix", smoke),
        ("(c) conservation", conservation),
        ("(d) routing oracle", routing),
        ("(e) evaluator oracle", evaluator),
        ("(f) policy fuzz", policy_fuzz),
        ("(g) scale shape", scale_shape),
        ("(h) incast reproduction", incast),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, f) in gates {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        match v {
            Ok(msg) => println!("PASS {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn within(limit: Duration, t: Instant) -> Result<(), String> {
    if t.elapsed() > limit {
        Err(format!(
            "took {:.1}s, limit {}s",
            t.elapsed().as_secs_f64(),
            limit.as_secs()
        ))
    } else {
        Ok(())
    }
}

// (a) ------------------------------------------------------------------

fn call(id: u64, name: &str, args: Value) -> Value {
    json!({"id": id, "method": "tools/call", "params": {"name": name, "arguments": args}})
}

/// A fixed agent transcript touching every tool, aimed at the incident's first issue.
fn transcript(spec: &IncidentSpec) -> Vec<Value> {
    let topo = spec.topology();
    let hosts = topo.host_ids();
    let (a, b) = (hosts[0].as_str(), hosts[hosts.len() - 1].as_str());
    let dev = spec
        .issues
        .first()
        .map(|i| i.dev.clone())
        .unwrap_or_else(|| topo.nodes.iter().find(|n| !n.is_host()).unwrap().id.clone());
    let intf = topo.node(&dev).unwrap().interfaces[0].id.clone();
    let (d, i) = (dev.as_str(), intf.as_str());
    let truth = GroundTruth::derive(spec, &topo);
    vec![
        json!({"id": 1, "method": "tools/list"}),
        call(2, "list_nodes", json!({})),
        call(3, "get_reachability", json!({})),
        call(4, "ping", json!({"src": a, "dst": b})),
        call(5, "traceroute", json!({"src": a, "dst": b})),
        call(6, "tcp_connect", json!({"src": a, "dst": b, "port": 80})),
        call(7, "http_probe", json!({"src": a, "dst": b})),
        call(8, "iperf", json!({"src": a, "dst": b, "duration_s": 1})),
        call(9, "get_logs", json!({"node": d})),
        call(10, "port_counters", json!({"node": d, "intf": i})),
        call(
            11,
            "queue_stats",
            json!({"node": d, "intf": i, "since_ms": 5000}),
        ),
        call(12, "routing_table", json!({"node": d})),
        call(13, "get_config", json!({"node": d})),
        call(14, "wait", json!({"ms": 1000})),
        call(15, "ping", json!({"src": a, "dst": b, "count": "abc"})),
        json!({"id": 16, "method": "bogus"}),
        truth_submission_request(&truth, 17),
    ]
}

fn strip_wall(v: &mut Value) {
    match v {
        Value::Object(o) => {
            o.retain(|k, _| !k.starts_with("wall_"));
            o.values_mut().for_each(strip_wall);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_wall),
        _ => {}
    }
}

fn without_wall(text: &str) -> String {
    let mut v: Value = serde_json::from_str(text).unwrap();
    strip_wall(&mut v);
    serde_json::to_string_pretty(&v).unwrap()
}

fn one_run(spec: &IncidentSpec) -> (String, String) {
    let (r, _) = run_transcript(
        spec.clone(),
        AccessPolicy::permissive(),
        &transcript(spec),
        SloConfig::default(),
    );
    let events: String = r
        .records
        .iter()
        .map(|x| without_wall(&x.to_line()) + "\n")
        .collect();
    (without_wall(&r.report.to_json()), events)
}

fn determinism() -> Verdict {
    let t = Instant::now();
    let specs = shipped::all_incidents();
    let mut bad = Vec::new();
    for spec in &specs {
        let (r1, e1) = one_run(spec);
        let (r2, e2) = one_run(spec);
        if r1 != r2 || e1 != e2 {
            bad.push(spec.name.clone());
        }
    }
    within(Duration::from_secs(300), t)?;
    if bad.is_empty() {
        Ok(format!("{} incidents x 2 runs byte-identical", specs.len()))
    } else {
        Err(format!("differing artifacts: {bad:?}"))
    }
}

// (b) ------------------------------------------------------------------

fn smoke() -> Verdict {
    let t = Instant::now();
    let rows = smoke_matrix();
    within(Duration::from_secs(600), t)?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.status != SmokeStatus::Pass)
        .map(|r| r.to_string())
        .collect();
    let single: BTreeSet<String> = shipped::all_incidents()
        .iter()
        .filter(|s| s.issues.len() == 1)
        .map(|s| s.issues[0].root_cause.to_string())
        .collect();
    if !bad.is_empty() {
        return Err(bad.join(" | "));
    }
    if single.len() < 18 {
        return Err(format!("only {} single-cause incidents", single.len()));
    }
    let worst = rows.iter().filter_map(|r| r.liveness_ms).max().unwrap_or(0);
    Ok(format!(
        "{} rows pass, {} causes covered, slowest liveness {worst} ms",
        rows.len(),
        single.len()
    ))
}

// (c) ------------------------------------------------------------------

fn random_state(rng: &mut ChaCha8Rng) -> NetworkState {
    let sc = *Scenario::CANONICAL.choose(rng).unwrap();
    let size = *[Size::S, Size::M].choose(rng).unwrap();
    let topo = build_scenario(sc, size, 0);
    let hosts = topo.host_ids();
    let nlinks = topo.links.len();
    let mut s = NetworkState::new(topo, rng.gen());
    for _ in 0..rng.gen_range(4..24) {
        let a = hosts.choose(rng).unwrap().clone();
        let b = hosts.choose(rng).unwrap().clone();
        if a == b {
            continue;
        }
        let start = rng.gen_range(0..50) * 10;
        s.add_flow(FlowSpec {
            src: a,
            dst: b,
            kind: if rng.gen_bool(0.5) {
                FlowKind::Udp
            } else {
                FlowKind::TcpBulk
            },
            demand_mbps: rng.gen_range(1.0..250.0),
            packet_size: *[64, 576, 1500].choose(rng).unwrap(),
            dst_port: 9000,
            start,
            end: rng
                .gen_bool(0.3)
                .then(|| start + rng.gen_range(1..200) * 10),
            elastic: rng.gen_bool(0.4),
            monitored: true,
            tag: "fuzz".into(),
        });
    }
    for _ in 0..rng.gen_range(0..3) {
        let l = rng.gen_range(0..nlinks);
        let at = s.topology().links[l].a.clone();
        s.schedule(
            rng.gen_range(1..40) * 10,
            Mutation::SetLinkState {
                at,
                state: LinkState::Down,
            },
        );
    }
    s
}

fn conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let (mut ticks, mut checks, mut violations) = (0u64, 0u64, Vec::new());
    while ticks < 10_000 {
        let mut s = random_state(&mut rng);
        for _ in 0..500 {
            s.step();
            ticks += 1;
            for l in s.last_tick_ledger() {
                checks += 1;
                let lhs = l.delivered as i128 + l.queued_after as i128 - l.queued_before as i128
                    + l.dropped as i128;
                if lhs != l.offered as i128 || l.delivered > l.capacity {
                    violations.push(format!(
                        "t={} link {} dir {}: {l:?}",
                        s.now(),
                        l.link,
                        l.dir
                    ));
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(format!(
            "{ticks} ticks, {checks} link-direction ledgers, 0 violations"
        ))
    } else {
        Err(format!(
            "{} violations, first: {}",
            violations.len(),
            violations[0]
        ))
    }
}

// (d) ------------------------------------------------------------------

fn routing() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0F5);
    let (mut entries, mut disagreements) = (0usize, Vec::new());
    for inst in 0..100 {
        let sc = *Scenario::CANONICAL.choose(&mut rng).unwrap();
        let size = *Size::ALL.choose(&mut rng).unwrap();
        let topo = build_scenario(sc, size, 0);
        let n = topo.links.len();
        let mut s = NetworkState::new(topo, 0);
        let k = rng.gen_range(0..=(n / 4).max(1));
        for l in rand::seq::index::sample(&mut rng, n, k.min(n)).into_iter() {
            let link = &s.topology().links[l];
            let at: Endpoint = if rng.gen_bool(0.5) {
                link.a.clone()
            } else {
                link.b.clone()
            };
            s.apply(Mutation::SetLinkState {
                at,
                state: LinkState::Down,
            })
            .unwrap();
        }
        let t = s.topology();
        for ((node, host), want) in common::bfs_oracle(t) {
            entries += 1;
            let ni = s.node_idx_str(&node).unwrap();
            let ip = t.node(&NodeId::new(&host)).unwrap().interfaces[0].ip;
            let got = s.forwarding().lookup(ni, ip).map(|e| e.action.clone());
            let ok = match (&want, &got) {
                (None, Some(RouteAction::Unreachable)) => true,
                (Some(None), Some(RouteAction::Connected)) => true,
                (Some(Some(m)), Some(RouteAction::Forward { next_hop, .. })) => {
                    next_hop.as_str() == m
                }
                _ => false,
            };
            if !ok {
                disagreements.push(format!(
                    "instance {inst} {sc} {size}: {node} -> {host}: got {got:?}, oracle {want:?}"
                ));
            }
        }
    }
    if disagreements.is_empty() {
        Ok(format!(
            "100 instances, {entries} node->host entries, 0 disagreements"
        ))
    } else {
        Err(format!(
            "{} disagreements, first: {}",
            disagreements.len(),
            disagreements[0]
        ))
    }
}

// (e) ------------------------------------------------------------------

fn naive_counts(pred: &[bool], gt: &[bool]) -> (u64, u64, u64, u64) {
    let tp = (0..pred.len()).filter(|&i| pred[i] && gt[i]).count() as u64;
    let fp = (0..pred.len()).filter(|&i| pred[i] && !gt[i]).count() as u64;
    let fn_ = (0..pred.len()).filter(|&i| !pred[i] && gt[i]).count() as u64;
    let tn = (0..pred.len()).filter(|&i| !pred[i] && !gt[i]).count() as u64;
    (tp, fp, fn_, tn)
}

fn synthetic_report(rng: &mut ChaCha8Rng, flags: [bool; 3], model: &str) -> EvaluationReport {
    let goals = Goal::ALL
        .iter()
        .zip(flags)
        .map(|(&g, ok)| {
            let gt = vec![true, false, false];
            let pred = if ok {
                gt.clone()
            } else {
                vec![false, true, false]
            };
            grade_masks(g, &pred, &gt)
        })
        .collect();
    EvaluationReport {
        incident: "synthetic".into(),
        spec_hash: String::new(),
        outcome: RunOutcome::Submitted,
        goals,
        efficiency: EfficiencyMetrics {
            time_to_submit_virtual: Some(rng.gen_range(0..100_000)),
            wall_time_s: rng.gen_range(0.0..100.0),
            tool_calls: rng.gen_range(0..50),
            tool_errors: 0,
            tool_error_rate: 0.0,
            model: Some(model.into()),
            steps: None,
            input_tokens: None,
            output_tokens: None,
            reasoning_tokens: None,
        },
        slo: SloConfig::default(),
        slo_violations: vec![],
        trace_summary: Default::default(),
        submission: Submission::default(),
    }
}

fn evaluator() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE7A1);
    let mut bad = Vec::new();
    for i in 0..1000 {
        let n = rng.gen_range(1..200);
        let density = rng.gen_range(0.0..1.0);
        let pred: Vec<bool> = (0..n).map(|_| rng.gen_bool(density)).collect();
        let gt: Vec<bool> = (0..n).map(|_| rng.gen_bool(density)).collect();
        let (tp, fp, fn_, tn) = naive_counts(&pred, &gt);
        let r = grade_masks(Goal::Localize, &pred, &gt);
        let want = Confusion { tp, fp, fn_, tn };
        if r.confusion != want || r.exact_match != (pred == gt) {
            bad.push(format!("pair {i}: {:?} vs {want:?}", r.confusion));
        }
        if (r.per_entity_accuracy - (tp + tn) as f64 / n as f64).abs() > 1e-12 {
            bad.push(format!("pair {i}: accuracy {}", r.per_entity_accuracy));
        }
    }
    let models = ["alpha", "beta", "gamma"];
    let mut reports = Vec::new();
    for _ in 0..100 {
        let flags = [rng.gen_bool(0.7), rng.gen_bool(0.5), rng.gen_bool(0.3)];
        let m = models.choose(&mut rng).unwrap();
        reports.push((flags, *m, synthetic_report(&mut rng, flags, m)));
    }
    let rows = aggregate(&reports.iter().map(|r| r.2.clone()).collect::<Vec<_>>());
    for row in &rows {
        let mine: Vec<&([bool; 3], &str, EvaluationReport)> =
            reports.iter().filter(|r| r.1 == row.model).collect();
        let n = mine.len();
        let frac = |k: usize| mine.iter().filter(|r| r.0[k]).count() as f64 / n as f64;
        let got = [row.det_acc, row.loc_acc, row.rca_acc];
        if row.runs != n || (0..3).any(|k| got[k] != Some(frac(k))) {
            bad.push(format!("model {}: {:?} vs counts over {n}", row.model, got));
        }
    }
    if rows.iter().map(|r| r.runs).sum::<usize>() != 100 {
        bad.push("aggregate lost reports".into());
    }
    if bad.is_empty() {
        Ok(format!(
            "1000 mask pairs and 100 reports over {} models agree",
            rows.len()
        ))
    } else {
        Err(format!("{} disagreements, first: {}", bad.len(), bad[0]))
    }
}

// (f) ------------------------------------------------------------------

fn glob_oracle(pattern: &str, text: &str) -> bool {
    let mut re = String::from("^");
    for ch in pattern.chars() {
        match ch {
            '*' => re.push_str("(?s:.*)"),
            '?' => re.push_str("(?s:.)"),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push('$');
    regex::Regex::new(&re).unwrap().is_match(text)
}

fn random_glob(rng: &mut ChaCha8Rng, sample: &str) -> String {
    match rng.gen_range(0..7) {
        0 | 6 => "*".into(),
        1 => sample.into(),
        2 => {
            let cut = rng.gen_range(0..=sample.len());
            format!("{}*", &sample[..cut])
        }
        3 => {
            let cut = rng.gen_range(0..=sample.len());
            format!("*{}", &sample[cut..])
        }
        4 => sample
            .chars()
            .map(|c| if rng.gen_bool(0.2) { '?' } else { c })
            .collect(),
        _ => format!("{}x*", &sample[..sample.len().min(3)]),
    }
}

fn glob_count(rng: &mut ChaCha8Rng) -> usize {
    if rng.gen_bool(0.05) {
        0
    } else {
        rng.gen_range(1..4)
    }
}

fn node_params(tool: &str) -> &'static [&'static str] {
    match tool {
        "ping" | "traceroute" | "iperf" | "tcp_connect" | "http_probe" => &["src", "dst"],
        "port_counters" | "routing_table" | "get_config" | "get_logs" | "queue_stats" => &["node"],
        _ => &[],
    }
}

fn policy_fuzz() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let base = build_scenario(Scenario::DatacenterClos, Size::S, 0);
    let ids: Vec<String> = base
        .nodes
        .iter()
        .map(|n| n.id.as_str().to_string())
        .collect();
    let hosts: Vec<String> = base
        .host_ids()
        .iter()
        .map(|h| h.as_str().to_string())
        .collect();
    let mut bad = Vec::new();
    let (mut denied, mut permitted) = (0, 0);
    for i in 0..1000 {
        let node_globs: Vec<String> = (0..glob_count(&mut rng))
            .map(|_| {
                let sample = ids.choose(&mut rng).unwrap();
                random_glob(&mut rng, sample)
            })
            .collect();
        let tool_globs: Vec<String> = (0..glob_count(&mut rng))
            .map(|_| {
                let sample = TOOL_NAMES.choose(&mut rng).unwrap();
                random_glob(&mut rng, sample)
            })
            .collect();
        let policy = AccessPolicy {
            node_globs: node_globs.clone(),
            tool_globs: tool_globs.clone(),
        };
        // submit closes the session and iperf is slow; neither changes the policy decision path.
        let pool: Vec<&str> = TOOL_NAMES
            .iter()
            .copied()
            .filter(|t| *t != "submit" && *t != "iperf")
            .collect();
        let tool = *pool.choose(&mut rng).unwrap();
        let mut args = serde_json::Map::new();
        for p in node_params(tool) {
            let pool = if *p == "node" { &ids } else { &hosts };
            args.insert(p.to_string(), json!(pool.choose(&mut rng).unwrap()));
        }
        match tool {
            "port_counters" | "queue_stats" => {
                let n = args["node"].as_str().unwrap();
                let intf = base.node(&NodeId::new(n)).unwrap().interfaces[0]
                    .id
                    .as_str()
                    .to_string();
                args.insert("intf".into(), json!(intf));
            }
            "tcp_connect" => {
                args.insert("port".into(), json!(80));
            }
            "wait" => {
                args.insert("ms".into(), json!(rng.gen_range(0..5) * 10));
            }
            _ => {}
        }
        let nodes: Vec<&str> = node_params(tool)
            .iter()
            .map(|p| args[*p].as_str().unwrap())
            .collect();
        let global = nodes.is_empty();
        let oracle = tool_globs.iter().any(|g| glob_oracle(g, tool))
            && (global
                || nodes
                    .iter()
                    .all(|n| node_globs.iter().any(|g| glob_oracle(g, n))));

        let mut s = Session::new(
            NetworkState::new(base.clone(), 0),
            policy,
            600_000,
            TimeMode::Stepped,
        );
        let before = s.state().fingerprint();
        let res = s.call(tool, &Value::Object(args.clone()), false);
        let was_denied = matches!(&res, Err(e) if e.code == ERR_DENIED);
        if was_denied == oracle {
            bad.push(format!("pair {i}: {tool} {args:?} tools {tool_globs:?} nodes {node_globs:?} oracle permit={oracle}"));
        }
        if was_denied {
            denied += 1;
            if s.state().fingerprint() != before || !s.take_snapshots().is_empty() {
                bad.push(format!("pair {i}: denied call mutated state"));
            }
        } else {
            permitted += 1;
        }
        if s.records().len() != 1 {
            bad.push(format!("pair {i}: {} records", s.records().len()));
        }
    }
    if bad.is_empty() {
        Ok(format!(
            "1000 pairs ({permitted} permitted, {denied} denied) match the oracle, no leakage"
        ))
    } else {
        Err(format!("{} mismatches, first: {}", bad.len(), bad[0]))
    }
}

// (g) ------------------------------------------------------------------

fn scale_shape() -> Verdict {
    let targets = [(Size::S, 11.0), (Size::M, 27.0), (Size::L, 101.0)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (size, want) in targets {
        let counts: Vec<usize> = Scenario::CANONICAL
            .iter()
            .map(|&sc| build_scenario(sc, size, 0).nodes.len())
            .collect();
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        let dev = (mean - want) / want;
        ok &= dev.abs() <= 0.30;
        parts.push(format!(
            "{size}: mean {mean:.2} vs {want} ({:+.1}%) {counts:?}",
            dev * 100.0
        ));
    }
    if ok {
        Ok(parts.join("; "))
    } else {
        Err(parts.join("; "))
    }
}

// (h) ------------------------------------------------------------------

fn incast() -> Verdict {
    let spec = shipped::incident("single_link_datacenter_incast")
        .unwrap()
        .unwrap();
    let trig = spec
        .workload
        .triggering
        .first()
        .ok_or("incident has no triggering workload")?
        .clone();
    if (spec.workload.regular.rho - 0.4).abs() > 1e-12 || (trig.interval - 20.0).abs() > 1e-12 {
        return Err(format!(
            "rho {} interval {}",
            spec.workload.regular.rho, trig.interval
        ));
    }
    let victim = trig.dst.clone();
    let topo = spec.topology();
    let gw = topo.gateway_of(&victim).unwrap().clone();
    let link = topo.link_at(&gw.node, &gw.interface).unwrap();
    let buffer = topo.links[link].buffer_bytes;
    let burst_ms = trig.burst_len;
    let mut prep = Prepared::new(spec);
    let armed_at = prep.state_mut().now();
    // Step through exactly one burst.
    let mut t = 0;
    while t < burst_ms.max(10) {
        prep.state_mut().step();
        t += 10;
    }
    let st = prep
        .state_mut()
        .interface_stats(&gw.node, &gw.interface)
        .unwrap()
        .clone();
    let peak_frac = st.queue_peak as f64 / buffer as f64;
    let msg = format!(
        "victim {victim} via {}/{}: queue_peak {} of {buffer} B ({:.1}%), drops_queue {} within {burst_ms} ms of t={armed_at}",
        gw.node,
        gw.interface,
        st.queue_peak,
        peak_frac * 100.0,
        st.drops_queue
    );
    if peak_frac >= 0.9 && st.drops_queue > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}
