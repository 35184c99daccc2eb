//! Temporal grounding benchmark primitives: interval algebra, answer
//! parsing, scoring, training rewards and objectives, dynamic token
//! sampling, and benchmark item construction.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod meteor;
pub mod metrics;
pub mod objectives;
pub mod parse;
pub mod qagen;
pub mod rewards;
pub mod sampling;
pub mod task;
pub mod temporal;

pub use metrics::{aggregate, MetricError, MetricsReport, TaskScores};
pub use parse::{AnswerKind, AnswerValue, ParsedAnswer};
pub use task::{Choice, Task};
pub use temporal::{Interval, IntervalSet, TemporalError, TemporalMask, Timestamp};
