//! Config-driven batch driver behind the `mrps` binary.

pub mod config;
pub mod report;
pub mod run;

pub use config::{Method, RunConfig};
pub use report::{barrier_kcal, report};
pub use run::{run, RunOutcome};
