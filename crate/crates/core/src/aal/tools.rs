//! Tool descriptors and argument validation.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::topology::{InterfaceId, NodeId, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Node,
    /// An interface of the node named by the tool's `node` parameter.
    Interface,
    Integer,
    Number,
    Boolean,
    String,
    Array,
    Object,
}

impl ParamType {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::Node => "node",
            ParamType::Interface => "interface",
            ParamType::Integer => "integer",
            ParamType::Number => "number",
            ParamType::Boolean => "boolean",
            ParamType::String => "string",
            ParamType::Array => "array",
            ParamType::Object => "object",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamDescriptor {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeKind {
    NodeScoped,
    Global,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToolDescriptor {
    pub name: &'static str,
    pub description: &'static str,
    pub param_schema: Vec<ParamDescriptor>,
    pub scope_kind: ScopeKind,
}

impl ToolDescriptor {
    /// Values of node-typed arguments present in `args`.
    pub fn node_args<'a>(&self, args: &'a Value) -> Vec<&'a str> {
        self.param_schema
            .iter()
            .filter(|p| p.ty == ParamType::Node)
            .filter_map(|p| args.get(p.name).and_then(Value::as_str))
            .collect()
    }

    pub fn param(&self, name: &str) -> Option<&ParamDescriptor> {
        self.param_schema.iter().find(|p| p.name == name)
    }
}

fn req(name: &'static str, ty: ParamType) -> ParamDescriptor {
    ParamDescriptor {
        name,
        ty,
        required: true,
        default: None,
    }
}

fn opt(name: &'static str, ty: ParamType, default: Option<Value>) -> ParamDescriptor {
    ParamDescriptor {
        name,
        ty,
        required: false,
        default,
    }
}

pub const TOOL_NAMES: [&str; 14] = [
    "ping",
    "traceroute",
    "iperf",
    "get_reachability",
    "tcp_connect",
    "http_probe",
    "port_counters",
    "routing_table",
    "get_config",
    "get_logs",
    "queue_stats",
    "list_nodes",
    "wait",
    "submit",
];

/// The full registry in its stable listing order.
pub fn registry() -> Vec<ToolDescriptor> {
    use ParamType::*;
    use ScopeKind::*;
    let d = |name, description, param_schema, scope_kind| ToolDescriptor {
        name,
        description,
        param_schema,
        scope_kind,
    };
    vec![
        d(
            "ping",
            "ICMP echo for reachability and latency",
            vec![
                req("src", Node),
                req("dst", Node),
                opt("count", Integer, Some(4.into())),
                opt("size", Integer, Some(64.into())),
            ],
            NodeScoped,
        ),
        d(
            "traceroute",
            "Trace packet forwarding paths",
            vec![req("src", Node), req("dst", Node)],
            NodeScoped,
        ),
        d(
            "iperf",
            "Measure achievable end-to-end bandwidth",
            vec![
                req("src", Node),
                req("dst", Node),
                opt("duration_s", Number, Some(2.into())),
            ],
            NodeScoped,
        ),
        d(
            "get_reachability",
            "Check pairwise reachability among all hosts",
            vec![],
            Global,
        ),
        d(
            "tcp_connect",
            "Test TCP connection establishment",
            vec![req("src", Node), req("dst", Node), req("port", Integer)],
            NodeScoped,
        ),
        d(
            "http_probe",
            "Measure HTTP request/response latency",
            vec![req("src", Node), req("dst", Node)],
            NodeScoped,
        ),
        d(
            "port_counters",
            "Retrieve interface statistics (bytes, packets, errors)",
            vec![req("node", Node), req("intf", Interface)],
            NodeScoped,
        ),
        d(
            "routing_table",
            "Retrieve routing information from routers",
            vec![req("node", Node)],
            NodeScoped,
        ),
        d(
            "get_config",
            "Fetch device configuration files",
            vec![req("node", Node)],
            NodeScoped,
        ),
        d(
            "get_logs",
            "Fetch system and event logs",
            vec![req("node", Node), opt("since_ms", Integer, Some(0.into()))],
            NodeScoped,
        ),
        d(
            "queue_stats",
            "Query device statistics",
            vec![
                req("node", Node),
                req("intf", Interface),
                opt("since_ms", Integer, Some(0.into())),
            ],
            NodeScoped,
        ),
        d(
            "list_nodes",
            "List nodes with their kind and management status",
            vec![],
            Global,
        ),
        d(
            "wait",
            "Let virtual time pass for the given number of milliseconds",
            vec![req("ms", Integer)],
            Global,
        ),
        d(
            "submit",
            "Submit the final diagnosis; accepted once",
            vec![
                req("detected", Boolean),
                opt("localization", Array, Some(Value::Array(vec![]))),
                opt("root_causes", Array, Some(Value::Array(vec![]))),
                opt("report_text", String, Some("".into())),
                opt("agent_metadata", Object, None),
            ],
            Global,
        ),
    ]
}

/// Check `args` against `tool`'s schema and fill defaults. The message names the offending parameter.
pub fn validate_args(
    tool: &ToolDescriptor,
    args: &Value,
    topo: &Topology,
) -> Result<Map<String, Value>, String> {
    let obj = match args {
        Value::Null => Map::new(),
        Value::Object(o) => o.clone(),
        _ => return Err("arguments must be an object".into()),
    };
    if let Some(k) = obj.keys().find(|k| tool.param(k).is_none()) {
        return Err(format!("unknown parameter `{k}` for {}", tool.name));
    }
    let mut out = Map::new();
    for p in &tool.param_schema {
        let v = match obj.get(p.name) {
            Some(v) => v.clone(),
            None if p.required => return Err(format!("missing required parameter `{}`", p.name)),
            None => match &p.default {
                Some(d) => d.clone(),
                None => continue,
            },
        };
        let ok = match p.ty {
            ParamType::Node => v.as_str().is_some(),
            ParamType::Interface => v.as_str().is_some(),
            ParamType::Integer => v.as_u64().is_some(),
            ParamType::Number => v.as_f64().is_some_and(|x| x >= 0.0 && x.is_finite()),
            ParamType::Boolean => v.is_boolean(),
            ParamType::String => v.is_string(),
            ParamType::Array => v.is_array(),
            ParamType::Object => v.is_object(),
        };
        if !ok {
            return Err(format!(
                "parameter `{}` must be {}, got {v}",
                p.name,
                p.ty.as_str()
            ));
        }
        if p.ty == ParamType::Node
            && topo
                .node(&NodeId::new(v.as_str().expect("checked")))
                .is_none()
        {
            return Err(format!(
                "parameter `{}`: unknown node {}",
                p.name,
                v.as_str().expect("checked")
            ));
        }
        out.insert(p.name.to_string(), v);
    }
    for p in tool
        .param_schema
        .iter()
        .filter(|p| p.ty == ParamType::Interface)
    {
        let node = out
            .get("node")
            .and_then(Value::as_str)
            .expect("interface tools take a node");
        let intf = out[p.name].as_str().expect("checked");
        let has = topo
            .node(&NodeId::new(node))
            .is_some_and(|n| n.interface(&InterfaceId::new(intf)).is_some());
        if !has {
            return Err(format!(
                "parameter `{}`: {node} has no interface {intf}",
                p.name
            ));
        }
    }
    Ok(out)
}
