//! Static network description: nodes, interfaces, links and per-node config.
//!
//! A [`Topology`] is plain data. The simulator animates it; the incident
//! module mutates a copy of it when injecting issues.

mod scenarios;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use scenarios::{build_scenario, LinkDefaults, SizeTable};
pub use validate::{validate, Violation};

pub const MIN_MTU: u32 = 576;
pub const MAX_MTU: u32 = 9216;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InterfaceId(pub String);

impl InterfaceId {
    pub fn new(s: impl Into<String>) -> Self {
        InterfaceId(s.into())
    }

    pub fn eth(n: usize) -> Self {
        InterfaceId(format!("eth{n}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for InterfaceId {
    fn from(s: &str) -> Self {
        InterfaceId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Host,
    Switch,
    Router,
    Controller,
}

impl NodeKind {
    /// Switches and routers forward transit traffic; hosts and controllers do not.
    pub fn forwards(self) -> bool {
        matches!(self, NodeKind::Switch | NodeKind::Router)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Up,
    Crashed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdminState {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceConfig {
    pub id: InterfaceId,
    pub ip: Ipv4Addr,
    pub netmask: u8,
    pub mtu: u32,
    pub admin_state: AdminState,
}

impl InterfaceConfig {
    /// The subnet this interface believes to be on-link.
    pub fn subnet(&self) -> Ipv4Net {
        Ipv4Net::new(self.ip, self.netmask.min(32))
            .expect("prefix length clamped to 32")
            .trunc()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkState {
    Up,
    Down,
    Detached,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub node: NodeId,
    pub interface: InterfaceId,
}

impl Endpoint {
    pub fn new(node: impl Into<String>, interface: impl Into<String>) -> Self {
        Endpoint {
            node: NodeId(node.into()),
            interface: InterfaceId(interface.into()),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.node, self.interface)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: Endpoint,
    pub b: Endpoint,
    /// Mb/s, per direction.
    pub capacity_mbps: f64,
    pub delay_ms: f64,
    pub state: LinkState,
    /// Per-traversal corruption probability.
    #[serde(default)]
    pub error_rate: f64,
    /// Egress buffer per direction, bytes.
    pub buffer_bytes: u64,
}

impl Link {
    pub fn touches(&self, node: &NodeId) -> bool {
        &self.a.node == node || &self.b.node == node
    }

    /// The endpoint opposite to `(node, interface)`, if this link attaches there.
    pub fn peer_of(&self, node: &NodeId, interface: &InterfaceId) -> Option<&Endpoint> {
        if &self.a.node == node && &self.a.interface == interface {
            Some(&self.b)
        } else if &self.b.node == node && &self.b.interface == interface {
            Some(&self.a)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AclAction {
    Permit,
    Deny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AclProto {
    Any,
    Icmp,
    Tcp,
    Udp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AclRule {
    pub action: AclAction,
    pub proto: AclProto,
    #[serde(default = "any_net")]
    pub src: Ipv4Net,
    #[serde(default = "any_net")]
    pub dst: Ipv4Net,
    /// Destination ports; empty matches every port.
    #[serde(default)]
    pub dst_ports: Vec<u16>,
}

fn any_net() -> Ipv4Net {
    Ipv4Net::default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticNextHop {
    Blackhole,
    Interface(InterfaceId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticRoute {
    pub prefix: Ipv4Net,
    pub next_hop: StaticNextHop,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub name: String,
    pub port: u16,
    pub capacity_rps: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    #[serde(default)]
    pub acl_rules: Vec<AclRule>,
    #[serde(default)]
    pub static_routes: Vec<StaticRoute>,
    #[serde(default)]
    pub ospf_area_by_interface: BTreeMap<InterfaceId, u32>,
    #[serde(default)]
    pub services: Vec<ServiceConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub interfaces: Vec<InterfaceConfig>,
    pub status: NodeStatus,
    /// Management/loopback address of non-host nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loopback: Option<Ipv4Addr>,
    #[serde(default)]
    pub config: NodeConfig,
}

impl Node {
    pub fn interface(&self, id: &InterfaceId) -> Option<&InterfaceConfig> {
        self.interfaces.iter().find(|i| &i.id == id)
    }

    pub fn interface_mut(&mut self, id: &InterfaceId) -> Option<&mut InterfaceConfig> {
        self.interfaces.iter_mut().find(|i| &i.id == id)
    }

    pub fn is_host(&self) -> bool {
        self.kind == NodeKind::Host
    }

    /// The address probes and flows aim at when this node is the destination.
    pub fn primary_address(&self) -> Option<Ipv4Addr> {
        match self.kind {
            NodeKind::Host => self.interfaces.first().map(|i| i.ip),
            _ => self.loopback,
        }
    }

    pub fn components(&self) -> Vec<Component> {
        let mut out: Vec<Component> = self
            .interfaces
            .iter()
            .map(|i| Component::Interface(i.id.clone()))
            .collect();
        out.extend([Component::System, Component::Routing, Component::Acl]);
        if !self.config.services.is_empty() {
            out.push(Component::Service);
        }
        out.sort();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    DatacenterClos,
    #[serde(rename = "campus_3tier")]
    Campus3tier,
    IspMesh,
    CloudPopFabric,
    /// Loaded from a user-supplied topology file.
    Custom,
}

impl Scenario {
    pub const CANONICAL: [Scenario; 4] = [
        Scenario::DatacenterClos,
        Scenario::Campus3tier,
        Scenario::IspMesh,
        Scenario::CloudPopFabric,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::DatacenterClos => "datacenter_clos",
            Scenario::Campus3tier => "campus_3tier",
            Scenario::IspMesh => "isp_mesh",
            Scenario::CloudPopFabric => "cloud_pop_fabric",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Size {
    S,
    M,
    L,
}

impl Size {
    pub const ALL: [Size; 3] = [Size::S, Size::M, Size::L];
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Size::S => "S",
            Size::M => "M",
            Size::L => "L",
        };
        f.write_str(s)
    }
}

/// A localizable part of a node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Interface(InterfaceId),
    System,
    Routing,
    Acl,
    Service,
}

impl Component {
    pub fn as_str(&self) -> &str {
        match self {
            Component::Interface(i) => i.as_str(),
            Component::System => "system",
            Component::Routing => "routing",
            Component::Acl => "acl",
            Component::Service => "service",
        }
    }

    pub fn interface(&self) -> Option<&InterfaceId> {
        match self {
            Component::Interface(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "system" => Component::System,
            "routing" => Component::Routing,
            "acl" => Component::Acl,
            "service" => Component::Service,
            other => Component::Interface(InterfaceId(other.to_string())),
        })
    }
}

impl PartialOrd for Component {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Component {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_str().cmp(other.as_str())
    }
}

impl Serialize for Component {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Component {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().expect("infallible"))
    }
}

/// A `(device, component)` pair: one position of a localization mask.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub node: NodeId,
    pub component: Component,
}

impl Entity {
    pub fn new(node: impl Into<String>, component: &str) -> Self {
        Entity {
            node: NodeId(node.into()),
            component: component.parse().expect("infallible"),
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.node, self.component)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub scenario: Scenario,
    pub size: Size,
    pub seed: u64,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
}

impl Topology {
    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn node_mut(&mut self, id: &NodeId) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| &n.id == id)
    }

    pub fn node_index(&self) -> HashMap<&NodeId, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (&n.id, i))
            .collect()
    }

    pub fn hosts(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_host())
    }

    /// Host ids in lexicographic order.
    pub fn host_ids(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.hosts().map(|n| n.id.clone()).collect();
        v.sort();
        v
    }

    /// Index of the link attached at `(node, interface)`.
    pub fn link_at(&self, node: &NodeId, interface: &InterfaceId) -> Option<usize> {
        self.links.iter().position(|l| {
            (&l.a.node == node && &l.a.interface == interface)
                || (&l.b.node == node && &l.b.interface == interface)
        })
    }

    /// The node on the other side of `(node, interface)`.
    pub fn neighbor(&self, node: &NodeId, interface: &InterfaceId) -> Option<&Endpoint> {
        self.links.iter().find_map(|l| l.peer_of(node, interface))
    }

    /// The gateway endpoint a host's single interface attaches to.
    pub fn gateway_of(&self, host: &NodeId) -> Option<&Endpoint> {
        let node = self.node(host)?;
        let intf = node.interfaces.first()?;
        self.neighbor(host, &intf.id)
    }

    /// Hosts attached to `node`, as `(local interface, host id)` sorted by host id.
    pub fn attached_hosts(&self, node: &NodeId) -> Vec<(InterfaceId, NodeId)> {
        let Some(n) = self.node(node) else {
            return Vec::new();
        };
        let mut out: Vec<(InterfaceId, NodeId)> = n
            .interfaces
            .iter()
            .filter_map(|i| {
                let peer = self.neighbor(node, &i.id)?;
                let pn = self.node(&peer.node)?;
                pn.is_host().then(|| (i.id.clone(), pn.id.clone()))
            })
            .collect();
        out.sort_by(|a, b| a.1.cmp(&b.1));
        out
    }

    /// Every `(node, component)` pair, sorted by node id then component name.
    pub fn entity_universe(&self) -> Vec<Entity> {
        let mut nodes: Vec<&Node> = self.nodes.iter().collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        nodes
            .into_iter()
            .flat_map(|n| {
                n.components().into_iter().map(move |c| Entity {
                    node: n.id.clone(),
                    component: c,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Free function form of [`Topology::entity_universe`].
pub fn entity_universe(t: &Topology) -> Vec<Entity> {
    t.entity_universe()
}
