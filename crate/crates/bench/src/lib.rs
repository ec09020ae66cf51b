//! Instance files, solver runs and benchmark tables on top of `nsdp-core`.

pub mod instance;
pub mod runner;
pub mod table;

pub use instance::InstanceFile;
pub use runner::{run, RunConfig, RunOutput, RunResult, Solver};
pub use table::{aggregate, aggregate_csv, runs_csv, AggregateRow};
