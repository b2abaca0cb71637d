//! Run lifecycle, artifacts, replay, catalog queries and the smoke matrix.

pub mod artifacts;
pub mod catalog;
pub mod run;
pub mod smoke;

pub use artifacts::{load_report, replay, replay_and_check, write_run, ArtifactError};
pub use catalog::{
    describe, list_incidents, resolve_incident, CatalogEntry, EntryKind, LookupError,
};
pub use run::{
    run_transcript, truth_submission_request, ActiveRun, Phase, Prepared, RunMeta, RunResult,
    Transition,
};
pub use smoke::{smoke_matrix, smoke_matrix_of, smoke_one, SmokeRow, SmokeStatus};

/// Environment variable that overrides an incident's seed.
pub const SEED_ENV: &str = "ARENA_SEED";
