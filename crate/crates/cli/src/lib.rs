//! Scenario runner and report emitter for the bellhist toolkit.

pub mod error;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{CliError, Result};
pub use report::{emit, Format, Report};
pub use runner::{run_scenario, RunOptions};
pub use scenario::{Kind, ScenarioFile, DEFAULT_SEED};
