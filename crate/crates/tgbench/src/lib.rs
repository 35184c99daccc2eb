//! File formats, evaluation driver and reporting around `tgbench-core`.

pub mod analysis;
pub mod formats;
pub mod harness;
pub mod report;
pub mod text;

pub use formats::{Config, PredictionRecord, SchemaError};
pub use harness::{evaluate, evaluate_run, HarnessError, RunReport};
