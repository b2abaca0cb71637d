//! Canonical scenario generators.
//!
//! Node counts per size class (tiers listed top-down, hosts last):
//!
//! | scenario          | S            | M             | L              |
//! |-------------------|--------------|---------------|----------------|
//! | datacenter_clos   | 2, 4, 8      | 4, 8, 24      | 8, 16, 80      |
//! | campus_3tier      | 1, 2, 3, 4   | 2, 4, 8, 14   | 4, 10, 30, 56  |
//! | isp_mesh          | 4, 3, 2      | 6, 8, 12      | 12, 30, 60     |
//! | cloud_pop_fabric  | 1, 2, 4, 4   | 1, 4, 8, 14   | 1, 8, 24, 68   |
//!
//! The seed is recorded on the topology but the canonical shapes do not
//! depend on it.

use std::collections::HashMap;
use std::net::Ipv4Addr;

use super::{
    AdminState, Endpoint, InterfaceConfig, InterfaceId, Link, LinkState, Node, NodeConfig, NodeId,
    NodeKind, NodeStatus, Scenario, ServiceConfig, Size, Topology,
};

/// Default physical parameters applied by every generator.
#[derive(Clone, Copy, Debug)]
pub struct LinkDefaults {
    pub host_capacity_mbps: f64,
    pub fabric_capacity_mbps: f64,
    pub delay_ms: f64,
    pub buffer_bytes: u64,
    pub mtu: u32,
    pub http_capacity_rps: u32,
}

impl LinkDefaults {
    pub const STANDARD: LinkDefaults = LinkDefaults {
        host_capacity_mbps: 100.0,
        fabric_capacity_mbps: 400.0,
        delay_ms: 1.0,
        buffer_bytes: 256 * 1024,
        mtu: 1500,
        http_capacity_rps: 200,
    };
}

/// Tier sizes for a scenario and size class, hosts last.
pub struct SizeTable;

impl SizeTable {
    pub fn tiers(scenario: Scenario, size: Size) -> &'static [usize] {
        use Scenario::*;
        use Size::*;
        match (scenario, size) {
            (DatacenterClos, S) => &[2, 4, 8],
            (DatacenterClos, M) => &[4, 8, 24],
            (DatacenterClos, L) => &[8, 16, 80],
            (Campus3tier, S) => &[1, 2, 3, 4],
            (Campus3tier, M) => &[2, 4, 8, 14],
            (Campus3tier, L) => &[4, 10, 30, 56],
            (IspMesh, S) => &[4, 3, 2],
            (IspMesh, M) => &[6, 8, 12],
            (IspMesh, L) => &[12, 30, 60],
            (CloudPopFabric, S) => &[1, 2, 4, 4],
            (CloudPopFabric, M) => &[1, 4, 8, 14],
            (CloudPopFabric, L) => &[1, 8, 24, 68],
            (Custom, _) => &[],
        }
    }

    pub fn node_count(scenario: Scenario, size: Size) -> usize {
        Self::tiers(scenario, size).iter().sum()
    }
}

/// Build one of the canonical scenarios. `Scenario::Custom` yields an empty
/// topology; custom networks come from JSON.
pub fn build_scenario(scenario: Scenario, size: Size, seed: u64) -> Topology {
    let tiers = SizeTable::tiers(scenario, size);
    let mut b = Builder::new(LinkDefaults::STANDARD);
    match scenario {
        Scenario::DatacenterClos => datacenter(&mut b, tiers),
        Scenario::Campus3tier => campus(&mut b, tiers),
        Scenario::IspMesh => isp(&mut b, tiers),
        Scenario::CloudPopFabric => cloud_pop(&mut b, tiers),
        Scenario::Custom => {}
    }
    Topology {
        scenario,
        size,
        seed,
        nodes: b.nodes,
        links: b.links,
    }
}

fn datacenter(b: &mut Builder, tiers: &[usize]) {
    let (n_spine, n_leaf, n_host) = (tiers[0], tiers[1], tiers[2]);
    let leaves_per_pod = 2;
    let hosts_per_leaf = n_host / n_leaf;

    let spines: Vec<NodeId> = (0..n_spine)
        .map(|i| b.add_node(format!("spine{i}"), NodeKind::Switch))
        .collect();
    let leaves: Vec<NodeId> = (0..n_leaf)
        .map(|i| {
            let pod = i / leaves_per_pod;
            let j = i % leaves_per_pod;
            b.add_node(format!("pod{pod}.leaf{j}"), NodeKind::Switch)
        })
        .collect();
    let mut hosts = Vec::new();
    for (li, _) in leaves.iter().enumerate() {
        let pod = li / leaves_per_pod;
        for k in 0..hosts_per_leaf {
            let idx = (li % leaves_per_pod) * hosts_per_leaf + k;
            hosts.push((li, b.add_host(format!("pod{pod}.h{idx}"))));
        }
    }

    for leaf in &leaves {
        for spine in &spines {
            b.fabric_link(leaf, spine);
        }
    }
    for (li, h) in &hosts {
        b.host_link(&leaves[*li], h);
    }
}

fn campus(b: &mut Builder, tiers: &[usize]) {
    let (n_core, n_dist, n_acc, n_host) = (tiers[0], tiers[1], tiers[2], tiers[3]);
    let cores: Vec<NodeId> = (0..n_core)
        .map(|i| b.add_node(format!("core{i}"), NodeKind::Router))
        .collect();
    let dists: Vec<NodeId> = (0..n_dist)
        .map(|i| b.add_node(format!("dist{i}"), NodeKind::Router))
        .collect();
    let accs: Vec<NodeId> = (0..n_acc)
        .map(|i| b.add_node(format!("access{i}"), NodeKind::Switch))
        .collect();
    let hosts = round_robin_hosts(b, n_host, &accs, |gw, k| format!("{gw}.h{k}"));

    for i in 0..n_core {
        for j in (i + 1)..n_core {
            b.fabric_link(&cores[i], &cores[j]);
        }
    }
    for d in &dists {
        for c in &cores {
            b.fabric_link(d, c);
        }
    }
    let pairs = (n_dist / 2).max(1);
    for (i, a) in accs.iter().enumerate() {
        let p = i % pairs;
        for d in [2 * p, 2 * p + 1] {
            if d < n_dist {
                b.fabric_link(a, &dists[d]);
            }
        }
    }
    for (gw, h) in &hosts {
        b.host_link(&accs[*gw], h);
    }
}

fn isp(b: &mut Builder, tiers: &[usize]) {
    let (n_core, n_acc, n_host) = (tiers[0], tiers[1], tiers[2]);
    let cores: Vec<NodeId> = (0..n_core)
        .map(|i| b.add_node(format!("core.r{i}"), NodeKind::Router))
        .collect();
    let accs: Vec<NodeId> = (0..n_acc)
        .map(|i| b.add_node(format!("access.r{i}"), NodeKind::Router))
        .collect();
    let hosts: Vec<(usize, NodeId)> = (0..n_host)
        .map(|i| (i % n_acc, b.add_host(format!("cust.h{i}"))))
        .collect();

    for i in 0..n_core {
        for j in (i + 1)..n_core {
            b.fabric_link(&cores[i], &cores[j]);
        }
    }
    for (i, a) in accs.iter().enumerate() {
        let first = i % n_core;
        let second = (i + 1) % n_core;
        b.fabric_link(a, &cores[first]);
        if second != first {
            b.fabric_link(a, &cores[second]);
        }
    }
    for (gw, h) in &hosts {
        b.host_link(&accs[*gw], h);
    }
}

fn cloud_pop(b: &mut Builder, tiers: &[usize]) {
    let (n_spine, n_edge, n_host) = (tiers[1], tiers[2], tiers[3]);
    let ctrl = b.add_node("controller".to_string(), NodeKind::Controller);
    let spines: Vec<NodeId> = (0..n_spine)
        .map(|i| b.add_node(format!("spine{i}"), NodeKind::Switch))
        .collect();
    let edges: Vec<NodeId> = (0..n_edge)
        .map(|i| b.add_node(format!("edge{i}"), NodeKind::Switch))
        .collect();
    let hosts = round_robin_hosts(b, n_host, &edges, |gw, k| format!("{gw}.h{k}"));

    b.fabric_link(&ctrl, &spines[0]);
    for e in &edges {
        for s in &spines {
            b.fabric_link(e, s);
        }
    }
    for (gw, h) in &hosts {
        b.host_link(&edges[*gw], h);
    }
}

/// Spread `n` hosts over gateways round-robin, naming each under its gateway.
fn round_robin_hosts(
    b: &mut Builder,
    n: usize,
    gateways: &[NodeId],
    name: impl Fn(&NodeId, usize) -> String,
) -> Vec<(usize, NodeId)> {
    let mut per_gw = vec![0usize; gateways.len()];
    (0..n)
        .map(|i| {
            let g = i % gateways.len();
            let k = per_gw[g];
            per_gw[g] += 1;
            (g, b.add_host(name(&gateways[g], k)))
        })
        .collect()
}

struct Builder {
    defaults: LinkDefaults,
    nodes: Vec<Node>,
    links: Vec<Link>,
    index: HashMap<NodeId, usize>,
    fabric_links: u32,
    loopbacks: u32,
    /// Gateway node -> (subnet index, hosts attached so far).
    gateways: HashMap<NodeId, (u32, u32)>,
}

impl Builder {
    fn new(defaults: LinkDefaults) -> Self {
        Builder {
            defaults,
            nodes: Vec::new(),
            links: Vec::new(),
            index: HashMap::new(),
            fabric_links: 0,
            loopbacks: 0,
            gateways: HashMap::new(),
        }
    }

    fn add_node(&mut self, name: String, kind: NodeKind) -> NodeId {
        self.loopbacks += 1;
        let n = self.loopbacks;
        let id = NodeId(name);
        self.push(Node {
            id: id.clone(),
            kind,
            interfaces: Vec::new(),
            status: NodeStatus::Up,
            loopback: Some(Ipv4Addr::new(192, 168, (n / 256) as u8, (n % 256) as u8)),
            config: NodeConfig::default(),
        });
        id
    }

    fn add_host(&mut self, name: String) -> NodeId {
        let id = NodeId(name);
        let config = NodeConfig {
            services: vec![ServiceConfig {
                name: "http".into(),
                port: 80,
                capacity_rps: self.defaults.http_capacity_rps,
            }],
            ..NodeConfig::default()
        };
        self.push(Node {
            id: id.clone(),
            kind: NodeKind::Host,
            interfaces: Vec::new(),
            status: NodeStatus::Up,
            loopback: None,
            config,
        });
        id
    }

    fn push(&mut self, node: Node) {
        self.index.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
    }

    fn node_mut(&mut self, id: &NodeId) -> &mut Node {
        let i = self.index[id];
        &mut self.nodes[i]
    }

    fn add_interface(&mut self, node: &NodeId, ip: Ipv4Addr, netmask: u8) -> InterfaceId {
        let mtu = self.defaults.mtu;
        let n = self.node_mut(node);
        let id = InterfaceId::eth(n.interfaces.len());
        n.interfaces.push(InterfaceConfig {
            id: id.clone(),
            ip,
            netmask,
            mtu,
            admin_state: AdminState::Up,
        });
        id
    }

    fn fabric_link(&mut self, a: &NodeId, b: &NodeId) {
        let base = u32::from(Ipv4Addr::new(172, 16, 0, 0)) + 4 * self.fabric_links;
        self.fabric_links += 1;
        let ia = self.add_interface(a, Ipv4Addr::from(base + 1), 30);
        let ib = self.add_interface(b, Ipv4Addr::from(base + 2), 30);
        let routers =
            self.node_mut(a).kind == NodeKind::Router && self.node_mut(b).kind == NodeKind::Router;
        if routers {
            self.node_mut(a)
                .config
                .ospf_area_by_interface
                .insert(ia.clone(), 0);
            self.node_mut(b)
                .config
                .ospf_area_by_interface
                .insert(ib.clone(), 0);
        }
        let d = self.defaults;
        self.links.push(Link {
            a: Endpoint {
                node: a.clone(),
                interface: ia,
            },
            b: Endpoint {
                node: b.clone(),
                interface: ib,
            },
            capacity_mbps: d.fabric_capacity_mbps,
            delay_ms: d.delay_ms,
            state: LinkState::Up,
            error_rate: 0.0,
            buffer_bytes: d.buffer_bytes,
        });
    }

    fn host_link(&mut self, gw: &NodeId, host: &NodeId) {
        let next = self.gateways.len() as u32;
        let entry = self.gateways.entry(gw.clone()).or_insert((next, 0));
        let (subnet, k) = *entry;
        entry.1 += 1;
        assert!(subnet < 250, "too many gateway subnets");
        let third = (subnet + 1) as u8;
        let ig = self.add_interface(gw, Ipv4Addr::new(10, 0, third, 1), 24);
        let ih = self.add_interface(host, Ipv4Addr::new(10, 0, third, (10 + k) as u8), 24);
        let d = self.defaults;
        self.links.push(Link {
            a: Endpoint {
                node: gw.clone(),
                interface: ig,
            },
            b: Endpoint {
                node: host.clone(),
                interface: ih,
            },
            capacity_mbps: d.host_capacity_mbps,
            delay_ms: d.delay_ms,
            state: LinkState::Up,
            error_rate: 0.0,
            buffer_bytes: d.buffer_bytes,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(t: &Topology, kind: NodeKind) -> usize {
        t.nodes.iter().filter(|n| n.kind == kind).count()
    }

    #[test]
    fn datacenter_small_counts() {
        let t = build_scenario(Scenario::DatacenterClos, Size::S, 0);
        assert_eq!(t.nodes.len(), 14);
        assert_eq!(t.links.len(), 16);
        assert_eq!(count(&t, NodeKind::Host), 8);
        let leaf = t.node(&"pod0.leaf1".into()).unwrap();
        // two uplinks then two host ports
        assert_eq!(leaf.interfaces.len(), 4);
        assert_eq!(t.attached_hosts(&leaf.id).len(), 2);
    }

    #[test]
    fn isp_small_counts() {
        let t = build_scenario(Scenario::IspMesh, Size::S, 0);
        assert_eq!(t.nodes.len(), 9);
        assert_eq!(count(&t, NodeKind::Host), 2);
        let core_links = t
            .links
            .iter()
            .filter(|l| {
                l.a.node.as_str().starts_with("core.") && l.b.node.as_str().starts_with("core.")
            })
            .count();
        assert_eq!(core_links, 6, "4-node full mesh");
    }

    #[test]
    fn tier_tables_match_generators() {
        for s in Scenario::CANONICAL {
            for z in Size::ALL {
                let t = build_scenario(s, z, 1);
                assert_eq!(t.nodes.len(), SizeTable::node_count(s, z), "{s} {z}");
            }
        }
    }

    #[test]
    fn monotone_sizes() {
        for s in Scenario::CANONICAL {
            let n: Vec<usize> = Size::ALL
                .iter()
                .map(|z| build_scenario(s, *z, 0).nodes.len())
                .collect();
            assert!(n[0] < n[1] && n[1] < n[2], "{s}: {n:?}");
        }
    }

    #[test]
    fn generation_is_pure() {
        for s in Scenario::CANONICAL {
            for z in Size::ALL {
                let a = build_scenario(s, z, 42).to_json();
                let b = build_scenario(s, z, 42).to_json();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn hosts_have_single_interface_and_service() {
        for s in Scenario::CANONICAL {
            let t = build_scenario(s, Size::M, 0);
            for h in t.hosts() {
                assert_eq!(h.interfaces.len(), 1, "{}", h.id);
                assert_eq!(h.config.services.len(), 1);
                assert!(t.gateway_of(&h.id).is_some());
            }
        }
    }
}
