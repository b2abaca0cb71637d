//! Newline-delimited JSON envelopes: `tools/list` and `tools/call`.

use serde_json::{json, Value};

use super::record::{RpcError, ERR_INVALID_PARAMS, ERR_UNKNOWN};
use super::session::Session;

/// Tool name recorded for requests that never named a tool.
pub const MALFORMED: &str = "<malformed>";

fn reply(id: Value, r: Result<Value, RpcError>) -> Value {
    match r {
        Ok(result) => json!({"id": id, "result": result}),
        Err(e) => json!({"id": id, "error": {"code": e.code, "message": e.message}}),
    }
}

/// Answer one raw line. Unparseable input is recorded and answered with `id: null`.
pub fn handle_line(session: &mut Session, line: &str) -> String {
    let out = match serde_json::from_str::<Value>(line) {
        Ok(v) => handle_value(session, &v),
        Err(e) => {
            let err = RpcError::new(ERR_INVALID_PARAMS, format!("malformed request: {e}"));
            session.record_malformed(MALFORMED, &Value::String(line.to_string()), &err);
            reply(Value::Null, Err(err))
        }
    };
    serde_json::to_string(&out).expect("json")
}

pub fn handle_value(session: &mut Session, req: &Value) -> Value {
    let id = req.get("id").cloned().unwrap_or(Value::Null);
    let method = req.get("method").and_then(Value::as_str);
    match method {
        Some("tools/list") => {
            let tools = serde_json::to_value(session.list_tools()).expect("json");
            reply(id, Ok(json!({ "tools": tools })))
        }
        Some("tools/call") => {
            let params = req.get("params").cloned().unwrap_or(Value::Null);
            let Some(name) = params.get("name").and_then(Value::as_str) else {
                let err = RpcError::new(ERR_INVALID_PARAMS, "params.name must be a string");
                session.record_malformed(MALFORMED, &params, &err);
                return reply(id, Err(err));
            };
            let args = params.get("arguments").cloned().unwrap_or(Value::Null);
            let cli = params.get("render").and_then(Value::as_str) == Some("cli");
            reply(id, session.call(name, &args, cli))
        }
        other => {
            let err = RpcError::new(
                ERR_UNKNOWN,
                format!(
                    "unknown method: {}",
                    other.map_or("<none>".to_string(), str::to_string)
                ),
            );
            session.record_malformed(MALFORMED, req, &err);
            reply(id, Err(err))
        }
    }
}
