use serde::{Deserialize, Serialize};

use crate::glob::matches_any;

/// Which tools an agent may call and which nodes it may name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessPolicy {
    #[serde(alias = "nodes")]
    pub node_globs: Vec<String>,
    #[serde(alias = "tools")]
    pub tool_globs: Vec<String>,
}

impl AccessPolicy {
    pub fn permissive() -> Self {
        AccessPolicy {
            node_globs: vec!["*".into()],
            tool_globs: vec!["*".into()],
        }
    }

    pub fn allows_tool(&self, tool: &str) -> bool {
        matches_any(&self.tool_globs, tool)
    }

    /// The policy decision for a call naming `nodes`; `Err` carries the reason.
    pub fn check(&self, tool: &str, global: bool, nodes: &[&str]) -> Result<(), String> {
        if !self.allows_tool(tool) {
            return Err(format!("tool {tool} not in {:?}", self.tool_globs));
        }
        if global {
            return Ok(());
        }
        match nodes.iter().find(|n| !matches_any(&self.node_globs, n)) {
            Some(n) => Err(format!("node {n} not in {:?}", self.node_globs)),
            None => Ok(()),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoped_nodes() {
        let p: AccessPolicy =
            serde_json::from_str(r#"{"nodes": ["pod0.switch*"], "tools": ["*"]}"#).unwrap();
        assert!(p.check("port_counters", false, &["core.r1"]).is_err());
        assert!(p.check("port_counters", false, &["pod0.switch3"]).is_ok());
        assert!(p.check("get_reachability", true, &[]).is_ok());
    }

    #[test]
    fn empty_tools_denies_all() {
        let p = AccessPolicy {
            node_globs: vec!["*".into()],
            tool_globs: vec![],
        };
        assert!(p.check("ping", false, &["a"]).is_err());
    }
}
