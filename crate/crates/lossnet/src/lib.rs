//! Experiment harness around `lossnet-core`: JSON configs with dotted-path
//! overrides, CSV tables with run manifests, and rayon-parallel Monte Carlo.

pub mod commands;
pub mod config;
pub mod output;
pub mod overrides;
pub mod parallel;

pub use commands::{execute, Command, RunSpec};
