use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::{NodeKind, Topology, MAX_MTU, MIN_MTU};

/// One broken invariant, naming the offending node or link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub rule: String,
}

impl Violation {
    fn new(subject: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            subject: subject.into(),
            rule: rule.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)
    }
}

/// Check every structural invariant. Empty result means the topology is valid.
pub fn validate(t: &Topology) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for n in &t.nodes {
        if !seen.insert(&n.id) {
            out.push(Violation::new(n.id.as_str(), "duplicate id"));
        }
        let mut intfs = HashSet::new();
        for i in &n.interfaces {
            if !intfs.insert(&i.id) {
                out.push(Violation::new(
                    format!("{}:{}", n.id, i.id),
                    "duplicate interface id",
                ));
            }
            if !(MIN_MTU..=MAX_MTU).contains(&i.mtu) {
                out.push(Violation::new(
                    format!("{}:{}", n.id, i.id),
                    format!("mtu {} outside [{MIN_MTU}, {MAX_MTU}]", i.mtu),
                ));
            }
            if i.netmask > 32 {
                out.push(Violation::new(
                    format!("{}:{}", n.id, i.id),
                    format!("netmask /{} longer than 32", i.netmask),
                ));
            }
        }
        if n.kind == NodeKind::Host && n.interfaces.len() != 1 {
            out.push(Violation::new(
                n.id.as_str(),
                format!(
                    "host has {} data interfaces, expected 1",
                    n.interfaces.len()
                ),
            ));
        }
    }

    let mut attached: HashMap<(&str, &str), usize> = HashMap::new();
    for (li, l) in t.links.iter().enumerate() {
        let subject = format!("link[{li}] {} - {}", l.a, l.b);
        if !(l.capacity_mbps > 0.0) {
            out.push(Violation::new(&subject, "nonpositive capacity"));
        }
        if !(0.0..=1.0).contains(&l.error_rate) {
            out.push(Violation::new(&subject, "error_rate outside [0, 1]"));
        }
        if l.delay_ms < 0.0 {
            out.push(Violation::new(&subject, "negative propagation delay"));
        }
        for ep in [&l.a, &l.b] {
            match t.node(&ep.node) {
                None => out.push(Violation::new(
                    &subject,
                    format!("unknown node {}", ep.node),
                )),
                Some(n) if n.interface(&ep.interface).is_none() => out.push(Violation::new(
                    &subject,
                    format!("unknown interface {}", ep),
                )),
                Some(_) => {
                    let c = attached
                        .entry((ep.node.as_str(), ep.interface.as_str()))
                        .or_insert(0);
                    *c += 1;
                    if *c == 2 {
                        out.push(Violation::new(
                            ep.to_string(),
                            "interface attached to more than one link",
                        ));
                    }
                }
            }
        }
        if l.a.node == l.b.node {
            out.push(Violation::new(&subject, "self loop"));
        }
    }

    if out.is_empty() && !is_connected(t) {
        out.push(Violation::new(
            "topology",
            "not connected with all links up",
        ));
    }
    out
}

fn is_connected(t: &Topology) -> bool {
    if t.nodes.is_empty() {
        return true;
    }
    let idx = t.node_index();
    let mut adj = vec![Vec::new(); t.nodes.len()];
    for l in &t.links {
        let (a, b) = (idx[&l.a.node], idx[&l.b.node]);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; t.nodes.len()];
    let mut q = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
