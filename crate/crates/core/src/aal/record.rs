use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const ERR_UNKNOWN: i64 = -32601;
pub const ERR_INVALID_PARAMS: i64 = -32602;
pub const ERR_DENIED: i64 = 1001;
pub const ERR_TOOL: i64 = 1002;
pub const ERR_ALREADY_SUBMITTED: i64 = 1003;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        RpcError {
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for RpcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error {}: {}", self.code, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok { result: Value },
    Denied { policy: String },
    ToolError { code: i64, reason: String },
}

/// One line of `events.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocationRecord {
    pub seq: u64,
    pub virtual_ts: u64,
    /// Seconds since the Unix epoch. Not reproducible across runs.
    pub wall_ts: f64,
    pub tool: String,
    pub args: Value,
    pub outcome: Outcome,
    pub snapshot_id: Option<String>,
    /// Virtual ms this call advanced the clock by.
    pub charged_ms: u64,
}

impl ToolInvocationRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Parse `events.jsonl`, checking that `seq` runs 0, 1, 2, ... without gaps.
pub fn parse_events(text: &str) -> Result<Vec<ToolInvocationRecord>, String> {
    let mut out: Vec<ToolInvocationRecord> = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let r: ToolInvocationRecord =
            serde_json::from_str(line).map_err(|e| format!("events.jsonl line {}: {e}", i + 1))?;
        let want = out.len() as u64;
        if r.seq != want {
            return Err(format!(
                "events.jsonl: seq gap, expected {want} found {}",
                r.seq
            ));
        }
        out.push(r);
    }
    Ok(out)
}
