//! Incident model: specs, the root-cause catalog, injection and workloads.

pub mod catalog;
pub mod compose;
pub mod eligibility;
pub mod inject;
pub mod liveness;
pub mod shipped;
pub mod spec;
pub mod template;
pub mod truth;
pub mod workload;

pub use catalog::{Category, RootCause, Target, UnknownCause};
pub use compose::compose;
pub use eligibility::{check_target, eligible_entities, PathUsage};
pub use inject::{injection_plan, PlannedMutation};
pub use spec::{load_spec, Goal, IncidentSpec, Issue, SpecError, TriggerWorkload, Workload};
pub use template::{expand_template, Bindings};
pub use truth::GroundTruth;
