#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use arena_core::sim::{FlowKind, FlowSpec};
use arena_core::topology::*;

pub fn intf(id: &str, ip: [u8; 4], mask: u8) -> InterfaceConfig {
    InterfaceConfig {
        id: InterfaceId::new(id),
        ip: Ipv4Addr::from(ip),
        netmask: mask,
        mtu: 1500,
        admin_state: AdminState::Up,
    }
}

pub fn link(a: (&str, &str), b: (&str, &str), cap: f64) -> Link {
    Link {
        a: Endpoint::new(a.0, a.1),
        b: Endpoint::new(b.0, b.1),
        capacity_mbps: cap,
        delay_ms: 1.0,
        state: LinkState::Up,
        error_rate: 0.0,
        buffer_bytes: 262_144,
    }
}

/// One switch `sw` with `n` hosts `h0..`, every link 100 Mb/s.
pub fn star(n: usize) -> Topology {
    let mut sw = Node {
        id: "sw".into(),
        kind: NodeKind::Switch,
        interfaces: vec![],
        status: NodeStatus::Up,
        loopback: Some(Ipv4Addr::new(192, 168, 0, 1)),
        config: NodeConfig::default(),
    };
    let mut nodes = vec![];
    let mut links = vec![];
    for i in 0..n {
        sw.interfaces
            .push(intf(&format!("eth{i}"), [10, 0, 1, 1], 24));
        nodes.push(Node {
            id: NodeId::new(format!("h{i}")),
            kind: NodeKind::Host,
            interfaces: vec![intf("eth0", [10, 0, 1, 10 + i as u8], 24)],
            status: NodeStatus::Up,
            loopback: None,
            config: NodeConfig::default(),
        });
        links.push(link(
            ("sw", &format!("eth{i}")),
            (&format!("h{i}"), "eth0"),
            100.0,
        ));
    }
    nodes.insert(0, sw);
    Topology {
        scenario: Scenario::Custom,
        size: Size::S,
        seed: 0,
        nodes,
        links,
    }
}

pub fn udp(src: &str, dst: &str, mbps: f64) -> FlowSpec {
    FlowSpec {
        src: src.into(),
        dst: dst.into(),
        kind: FlowKind::Udp,
        demand_mbps: mbps,
        packet_size: 1500,
        dst_port: 9000,
        start: 0,
        end: None,
        elastic: false,
        monitored: true,
        tag: "test".into(),
    }
}

/// Independent next-hop oracle: for every non-host node and every host,
/// the neighbor id toward that host's gateway, `Some(None)` when the node is
/// the gateway itself, `None` when no path exists.
pub fn bfs_oracle(t: &Topology) -> BTreeMap<(String, String), Option<Option<String>>> {
    let kind: BTreeMap<String, NodeKind> =
        t.nodes.iter().map(|n| (n.id.0.clone(), n.kind)).collect();
    let up: BTreeSet<String> = t
        .nodes
        .iter()
        .filter(|n| n.status == NodeStatus::Up)
        .map(|n| n.id.0.clone())
        .collect();
    let mut nbrs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for l in &t.links {
        let (a, b) = (&l.a.node.0, &l.b.node.0);
        let ia = t
            .node(&l.a.node)
            .unwrap()
            .interface(&l.a.interface)
            .unwrap();
        let ib = t
            .node(&l.b.node)
            .unwrap()
            .interface(&l.b.interface)
            .unwrap();
        let mut ok = l.state == LinkState::Up
            && up.contains(a)
            && up.contains(b)
            && ia.admin_state == AdminState::Up
            && ib.admin_state == AdminState::Up;
        if kind[a] == NodeKind::Router && kind[b] == NodeKind::Router {
            let aa = t
                .node(&l.a.node)
                .unwrap()
                .config
                .ospf_area_by_interface
                .get(&l.a.interface);
            let ab = t
                .node(&l.b.node)
                .unwrap()
                .config
                .ospf_area_by_interface
                .get(&l.b.interface);
            ok &= aa == ab;
        }
        if ok {
            nbrs.entry(a.clone()).or_default().insert(b.clone());
            nbrs.entry(b.clone()).or_default().insert(a.clone());
        }
    }
    let relays = |n: &str| matches!(kind[n], NodeKind::Switch | NodeKind::Router);
    let mut out = BTreeMap::new();
    for h in t.hosts() {
        let gw = t.gateway_of(&h.id).unwrap().node.0.clone();
        let mut dist: BTreeMap<String, usize> = BTreeMap::new();
        dist.insert(gw.clone(), 0);
        let mut q = VecDeque::from([gw.clone()]);
        while let Some(u) = q.pop_front() {
            if u != gw && !relays(&u) {
                continue;
            }
            for v in nbrs.get(&u).into_iter().flatten() {
                if !dist.contains_key(v) {
                    dist.insert(v.clone(), dist[&u] + 1);
                    q.push_back(v.clone());
                }
            }
        }
        for n in &t.nodes {
            if n.kind == NodeKind::Host {
                continue;
            }
            let key = (n.id.0.clone(), h.id.0.clone());
            let v = match dist.get(&n.id.0) {
                None => None,
                Some(0) => Some(None),
                Some(&d) => nbrs[&n.id.0]
                    .iter()
                    .find(|m| dist.get(*m) == Some(&(d - 1)) && (**m == gw || relays(m)))
                    .map(|m| Some(m.clone())),
            };
            out.insert(key, v);
        }
    }
    out
}
