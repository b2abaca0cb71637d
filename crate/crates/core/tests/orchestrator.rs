use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde_json::{json, Value};

use arena_core::aal::{serve, AccessPolicy, Listen, TimeMode};
use arena_core::eval::{RunOutcome, SloConfig};
use arena_core::incident::{shipped, GroundTruth};
use arena_core::orchestrator::{
    replay, replay_and_check, run_transcript, truth_submission_request, write_run, ArtifactError,
    Prepared,
};

const ARENA: &str = env!("CARGO_BIN_EXE_arena");

fn call(id: u64, name: &str, args: Value) -> Value {
    json!({"id": id, "method": "tools/call", "params": {"name": name, "arguments": args}})
}

fn truth_of(name: &str) -> GroundTruth {
    let spec = shipped::incident(name).unwrap().unwrap();
    GroundTruth::derive(&spec, &spec.topology())
}

fn finished_run(dir: &Path) {
    let spec = shipped::incident("link_down_datacenter").unwrap().unwrap();
    let reqs = [
        call(1, "ping", json!({"src": "pod0.h0", "dst": "pod1.h0"})),
        call(2, "get_logs", json!({"node": "pod0.leaf0"})),
        truth_submission_request(&truth_of("link_down_datacenter"), 3),
    ];
    let (r, _) = run_transcript(
        spec,
        AccessPolicy::permissive(),
        &reqs,
        SloConfig::default(),
    );
    write_run(dir, &r, false).unwrap();
}

#[test]
fn replay_reproduces_report() {
    let d = tempfile::tempdir().unwrap();
    finished_run(d.path());
    let original = std::fs::read_to_string(d.path().join("report.json")).unwrap();
    assert_eq!(replay(d.path()).unwrap().to_json(), original);
    std::fs::remove_file(d.path().join("report.json")).unwrap();
    replay_and_check(d.path()).unwrap();
    assert_eq!(
        std::fs::read_to_string(d.path().join("report.json")).unwrap(),
        original
    );
    assert_eq!(
        std::fs::read_dir(d.path().join("snapshots"))
            .unwrap()
            .count(),
        3
    );
}

#[test]
fn seq_gap_is_an_integrity_error() {
    let d = tempfile::tempdir().unwrap();
    finished_run(d.path());
    let p = d.path().join("events.jsonl");
    let text = std::fs::read_to_string(&p).unwrap();
    let kept: Vec<&str> = text
        .lines()
        .enumerate()
        .filter(|(i, _)| *i != 1)
        .map(|(_, l)| l)
        .collect();
    std::fs::write(&p, kept.join("\n") + "\n").unwrap();
    let e = replay(d.path()).unwrap_err();
    assert!(matches!(e, ArtifactError::Integrity(_)), "{e}");
    assert!(e.to_string().contains("seq gap"), "{e}");
    let st = Command::new(ARENA)
        .arg("replay")
        .arg(d.path())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn existing_out_dir_needs_overwrite() {
    let d = tempfile::tempdir().unwrap();
    finished_run(d.path());
    let spec = shipped::incident("healthy_isp").unwrap().unwrap();
    let (r, _) = run_transcript(spec, AccessPolicy::permissive(), &[], SloConfig::default());
    assert!(matches!(
        write_run(d.path(), &r, false),
        Err(ArtifactError::Exists(_))
    ));
    write_run(d.path(), &r, true).unwrap();
    assert_eq!(replay(d.path()).unwrap().incident, "healthy_isp");
}

#[test]
fn cli_exit_codes() {
    let code = |args: &[&str]| {
        Command::new(ARENA)
            .args(args)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(code(&["list"]), Some(0));
    assert_eq!(code(&["describe", "link_down_datacenter"]), Some(0));
    assert_eq!(code(&["describe", "nope"]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("run");
    // stdin closes at once: no submission, so the run is aborted.
    assert_eq!(
        code(&[
            "run",
            "--incident",
            "healthy_isp",
            "--out",
            out.to_str().unwrap()
        ]),
        Some(2)
    );
    assert!(out.join("report.json").is_file());
    assert_eq!(code(&["replay", out.to_str().unwrap()]), Some(0));
    assert_eq!(
        code(&[
            "run",
            "--incident",
            "healthy_isp",
            "--out",
            out.to_str().unwrap()
        ]),
        Some(1)
    );
}

#[test]
fn cli_describe_and_list() {
    let out = Command::new(ARENA)
        .args(["describe", "link_down_datacenter"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["spec"]["issues"].as_str().unwrap().contains("redacted"));
    let out = Command::new(ARENA)
        .args(["describe", "link_down_datacenter", "--reveal"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["ground_truth"]["entity_mask"]
        .as_array()
        .unwrap()
        .iter()
        .any(|b| b == true));
    let out = Command::new(ARENA)
        .args(["list", "--json"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let n = v
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["kind"] == "incident")
        .count();
    assert!(n >= 18, "{n}");
}

#[test]
fn cli_stdio_session_and_aggregate() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("run");
    let mut child = Command::new(ARENA)
        .args([
            "run",
            "--incident",
            "link_down_datacenter",
            "--out",
            out.to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    writeln!(stdin, "{}", json!({"id": 1, "method": "tools/list"})).unwrap();
    let v: Value = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
    assert_eq!(v["result"]["tools"].as_array().unwrap().len(), 14);
    let sub = truth_submission_request(&truth_of("link_down_datacenter"), 2);
    let mut sub = sub;
    sub["params"]["arguments"]["agent_metadata"] = json!({"model": "scripted", "steps": 2});
    writeln!(stdin, "{sub}").unwrap();
    let v: Value = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
    assert_eq!(v["result"]["accepted"], true);
    assert!(child.wait().unwrap().success());
    let agg = Command::new(ARENA)
        .args(["aggregate", "--csv"])
        .arg(&out)
        .output()
        .unwrap();
    let text = String::from_utf8(agg.stdout).unwrap();
    let mut it = text.lines();
    assert!(it.next().unwrap().starts_with("Model,Runs,Time (s)"));
    let row = it.next().unwrap();
    assert!(row.starts_with("scripted,1,"), "{row}");
    assert!(row.ends_with("100.0%,100.0%,100.0%"), "{row}");
}

#[test]
fn tcp_transport_serializes_calls() {
    let spec = shipped::incident("link_down_datacenter").unwrap().unwrap();
    let truth = truth_of("link_down_datacenter");
    let mut run = Prepared::new(spec).open(AccessPolicy::permissive(), TimeMode::Stepped);
    let (tx, rx) = std::sync::mpsc::channel();
    let client = std::thread::spawn(move || {
        let addr: std::net::SocketAddr = rx.recv().unwrap();
        let conn = TcpStream::connect(addr).unwrap();
        let mut w = conn.try_clone().unwrap();
        let mut r = BufReader::new(conn).lines();
        let mut ask = |v: Value| {
            writeln!(w, "{v}").unwrap();
            serde_json::from_str::<Value>(&r.next().unwrap().unwrap()).unwrap()
        };
        let a = ask(call(1, "list_nodes", json!({})));
        let b = ask(truth_submission_request(&truth, 2));
        (a, b)
    });
    let served = serve(
        &mut run.session,
        &Listen::Tcp(0),
        Some(Duration::from_secs(30)),
        |a| tx.send(a.unwrap()).unwrap(),
    )
    .unwrap();
    assert!(served);
    let (a, b) = client.join().unwrap();
    assert_eq!(a["id"], 1);
    assert!(a["result"]["nodes"].is_array());
    assert_eq!(b["result"]["accepted"], true);
    let r = run.finish(SloConfig::default());
    assert!(r.report.all_exact());
}

#[test]
fn http_transport_posts_rpc() {
    let spec = shipped::incident("healthy_isp").unwrap().unwrap();
    let mut run = Prepared::new(spec).open(AccessPolicy::permissive(), TimeMode::Stepped);
    let (tx, rx) = std::sync::mpsc::channel();
    let client = std::thread::spawn(move || {
        let addr: std::net::SocketAddr = rx.recv().unwrap();
        let post = |body: String| {
            let mut s = TcpStream::connect(addr).unwrap();
            write!(
                s,
                "POST /rpc HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            let mut text = String::new();
            std::io::Read::read_to_string(&mut s, &mut text).unwrap();
            let body = text.split("\r\n\r\n").nth(1).unwrap().to_string();
            serde_json::from_str::<Value>(&body).unwrap()
        };
        let a = post(json!({"id": 7, "method": "tools/list"}).to_string());
        let b = post(call(8, "submit", json!({"detected": false})).to_string());
        (a, b)
    });
    serve(
        &mut run.session,
        &Listen::Http(0),
        Some(Duration::from_secs(30)),
        |a| tx.send(a.unwrap()).unwrap(),
    )
    .unwrap();
    let (a, b) = client.join().unwrap();
    assert_eq!(a["id"], 7);
    assert_eq!(a["result"]["tools"].as_array().unwrap().len(), 14);
    assert_eq!(b["result"]["accepted"], true);
    assert!(run.finish(SloConfig::default()).report.all_exact());
}

#[test]
fn silent_agent_times_out() {
    let spec = shipped::incident("healthy_isp").unwrap().unwrap();
    let mut run = Prepared::new(spec).open(AccessPolicy::permissive(), TimeMode::Stepped);
    let served = serve(
        &mut run.session,
        &Listen::Tcp(0),
        Some(Duration::from_millis(100)),
        |_| {},
    )
    .unwrap();
    assert!(!served);
    let r = run.finish(SloConfig::default());
    assert_eq!(r.meta.outcome, RunOutcome::Aborted);
}

#[test]
fn paced_mode_lets_time_flow() {
    let spec = shipped::incident("healthy_isp").unwrap().unwrap();
    let mut run = Prepared::new(spec).open(AccessPolicy::permissive(), TimeMode::Paced(10.0));
    let t0 = run.session.state().now();
    std::thread::sleep(Duration::from_millis(120));
    run.session.pace();
    let t1 = run.session.state().now();
    assert!(t1 - t0 >= 1000, "{}", t1 - t0);
    assert!(run.session.charged_total() == 0);
}

#[test]
fn flap_logs_and_crc_counters_are_visible() {
    let spec = shipped::incident("link_flap_isp").unwrap().unwrap();
    let iss = spec.issues[0].clone();
    let (_, resp) = run_transcript(
        spec,
        AccessPolicy::permissive(),
        &[
            call(1, "wait", json!({"ms": 3000})),
            call(2, "get_logs", json!({"node": iss.dev})),
        ],
        SloConfig::default(),
    );
    let logs = resp[1]["result"]["entries"].as_array().unwrap();
    assert!(
        logs.iter()
            .any(|e| e["text"].as_str().unwrap().starts_with("LINK_FLAP")),
        "{logs:?}"
    );

    let spec = shipped::incident("faulty_cable_datacenter")
        .unwrap()
        .unwrap();
    let iss = spec.issues[0].clone();
    let topo = spec.topology();
    let peer = topo
        .neighbor(&iss.dev, iss.comp.interface().unwrap())
        .unwrap()
        .clone();
    let (_, resp) = run_transcript(
        spec,
        AccessPolicy::permissive(),
        &[
            call(1, "wait", json!({"ms": 1000})),
            call(
                2,
                "port_counters",
                json!({"node": iss.dev, "intf": iss.comp}),
            ),
            call(
                3,
                "port_counters",
                json!({"node": peer.node, "intf": peer.interface}),
            ),
        ],
        SloConfig::default(),
    );
    let errs = resp[1]["result"]["rx_errors"].as_u64().unwrap()
        + resp[2]["result"]["rx_errors"].as_u64().unwrap();
    assert!(errs > 0, "{resp:?}");
}

#[test]
fn iperf_drops_during_incast() {
    let idle = shipped::incident("healthy_datacenter").unwrap().unwrap();
    let req = [call(
        1,
        "iperf",
        json!({"src": "pod1.h0", "dst": "pod0.h0", "duration_s": 1}),
    )];
    let (_, a) = run_transcript(idle, AccessPolicy::permissive(), &req, SloConfig::default());
    let spec = shipped::incident("single_link_datacenter_incast")
        .unwrap()
        .unwrap();
    let (_, b) = run_transcript(spec, AccessPolicy::permissive(), &req, SloConfig::default());
    let (ia, ib) = (
        a[0]["result"]["mbps"].as_f64().unwrap(),
        b[0]["result"]["mbps"].as_f64().unwrap(),
    );
    assert!(ia > 50.0, "idle {ia}");
    assert!(ib < ia / 2.0, "idle {ia}, incast {ib}");
}

#[test]
fn slo_violations_follow_limits() {
    let spec = shipped::incident("single_link_datacenter_incast")
        .unwrap()
        .unwrap();
    let req = [call(1, "wait", json!({"ms": 3000}))];
    let strict = SloConfig {
        max_p95_latency_ms: None,
        max_loss_fraction: Some(0.0),
    };
    let (r, _) = run_transcript(spec.clone(), AccessPolicy::permissive(), &req, strict);
    assert!(!r.report.slo_violations.is_empty());
    let lax = SloConfig {
        max_p95_latency_ms: None,
        max_loss_fraction: None,
    };
    let (r, _) = run_transcript(spec, AccessPolicy::permissive(), &req, lax);
    assert!(r.report.slo_violations.is_empty());
    let idle = shipped::incident("healthy_datacenter").unwrap().unwrap();
    let (r, _) = run_transcript(idle, AccessPolicy::permissive(), &req, SloConfig::default());
    assert!(
        r.report.slo_violations.is_empty(),
        "{:?}",
        r.report.slo_violations.first()
    );
}

#[test]
fn control_false_positive_and_composite_partial() {
    let spec = shipped::incident("healthy_isp").unwrap().unwrap();
    let (r, _) = run_transcript(
        spec,
        AccessPolicy::permissive(),
        &[call(1, "submit", json!({"detected": true}))],
        SloConfig::default(),
    );
    assert_eq!(r.report.goals[0].confusion.fp, 1);
    assert!(!r.report.goals[0].exact_match);

    let spec = shipped::incident("composite_link_down_icmp_acl_datacenter")
        .unwrap()
        .unwrap();
    let (r, _) = run_transcript(
        spec,
        AccessPolicy::permissive(),
        &[call(
            1,
            "submit",
            json!({"detected": true, "root_causes": ["link_down"]}),
        )],
        SloConfig::default(),
    );
    let rca = r
        .report
        .goals
        .iter()
        .find(|g| g.goal.as_str() == "rca")
        .unwrap();
    assert_eq!(rca.confusion.fn_, 1);
    assert_eq!(rca.recall, 0.5);
}
