//! Human-style text rendering of tool results, for `render: "cli"` calls.

use std::fmt::Write;

use serde_json::Value;

fn s(v: &Value) -> String {
    match v {
        Value::String(x) => x.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn fail_text(f: &Value) -> String {
    match (f.get("reason"), f.get("node")) {
        (Some(r), Some(n)) => format!("{} at {}", s(r), s(n)),
        (Some(r), None) => s(r),
        _ => s(f),
    }
}

pub fn render_cli(tool: &str, r: &Value) -> String {
    let mut o = String::new();
    match tool {
        "ping" => {
            let _ = writeln!(o, "PING {} -> {}", s(&r["src"]), s(&r["dst"]));
            for p in r["probes"].as_array().into_iter().flatten() {
                match (p.get("rtt_ms"), p.get("fail")) {
                    (Some(rtt), _) => {
                        let _ = writeln!(
                            o,
                            "seq={} time={:.3} ms",
                            s(&p["seq"]),
                            rtt.as_f64().unwrap_or(0.0)
                        );
                    }
                    (None, Some(f)) => {
                        let _ = writeln!(o, "seq={} {}", s(&p["seq"]), fail_text(f));
                    }
                    _ => {}
                }
            }
            let _ = write!(
                o,
                "{} transmitted, {} received, {}% packet loss",
                s(&r["sent"]),
                s(&r["received"]),
                s(&r["loss_pct"])
            );
        }
        "traceroute" => {
            let _ = writeln!(o, "traceroute to {}", s(&r["dst"]));
            for h in r["hops"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    o,
                    "{:>2}  {}  {:.3} ms",
                    s(&h["hop"]),
                    s(&h["node"]),
                    h["rtt_ms"].as_f64().unwrap_or(0.0)
                );
            }
            if let Some(f) = r.get("fail") {
                let _ = writeln!(o, " *  {}", fail_text(f));
            }
        }
        "routing_table" => {
            for e in r["entries"].as_array().into_iter().flatten() {
                let via = e
                    .get("interface")
                    .map(|i| format!(" dev {}", s(i)))
                    .unwrap_or_default();
                let _ = writeln!(
                    o,
                    "{:<18} via {}{} [{}]",
                    s(&e["prefix"]),
                    s(&e["next_hop"]),
                    via,
                    s(&e["origin"])
                );
            }
        }
        "get_logs" => {
            for e in r["entries"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    o,
                    "[{:>9}] {:<8} {}",
                    s(&e["t"]),
                    s(&e["severity"]).to_uppercase(),
                    s(&e["text"])
                );
            }
        }
        "list_nodes" => {
            for n in r["nodes"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    o,
                    "{:<16} {:<8} {}",
                    s(&n["id"]),
                    s(&n["kind"]),
                    s(&n["status"])
                );
            }
        }
        "get_reachability" => {
            let hosts: Vec<String> = r["hosts"].as_array().into_iter().flatten().map(s).collect();
            for (h, row) in hosts
                .iter()
                .zip(r["matrix"].as_array().into_iter().flatten())
            {
                let cells: String = row
                    .as_array()
                    .into_iter()
                    .flatten()
                    .map(|b| if b.as_bool() == Some(true) { 'o' } else { 'x' })
                    .collect();
                let _ = writeln!(o, "{h:<16} {cells}");
            }
        }
        _ => match r {
            Value::Object(m) => {
                for (k, v) in m {
                    let _ = writeln!(o, "{k}: {}", s(v));
                }
            }
            other => o.push_str(&s(other)),
        },
    }
    o.trim_end().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn ping_summary_line() {
        let r = json!({"src": "a", "dst": "b", "sent": 1, "received": 0, "loss_pct": 100.0,
            "probes": [{"seq": 0, "fail": {"reason": "acl_denied", "node": "s1"}}]});
        let t = render_cli("ping", &r);
        assert!(t.contains("acl_denied at s1"), "{t}");
        assert!(t.ends_with("100.0% packet loss"), "{t}");
    }
}
