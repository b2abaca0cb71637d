//! Agent access layer: tool registry, policy enforcement, invocation records
//! and the wire protocol.

pub mod policy;
pub mod record;
pub mod render;
pub mod server;
pub mod session;
pub mod tools;
pub mod wire;

pub use policy::AccessPolicy;
pub use record::{
    parse_events, Outcome, RpcError, ToolInvocationRecord, ERR_ALREADY_SUBMITTED, ERR_DENIED,
    ERR_INVALID_PARAMS, ERR_TOOL, ERR_UNKNOWN,
};
pub use server::{serve, Listen};
pub use session::{parse_entity, CloseReason, Session, TimeMode};
pub use tools::{
    registry, validate_args, ParamDescriptor, ParamType, ScopeKind, ToolDescriptor, TOOL_NAMES,
};
pub use wire::{handle_line, handle_value};
