//! Network incident arena: scenario generation, a deterministic fluid
//! simulator, fault injection, a policy-enforcing tool gateway, grading and
//! run orchestration.

pub mod aal;
pub mod eval;
pub mod glob;
pub mod incident;
pub mod orchestrator;
pub mod sim;
pub mod topology;
