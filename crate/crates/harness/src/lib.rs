//! Experiment harness: dataset ingestion and synthesis, the game-testing
//! and prioritization protocols, record files, statistics and plot data.

pub mod ci;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod game;
pub mod records;
pub mod report;

pub use config::{ExperimentConfig, Overrides, Task};
pub use error::{HarnessError, Result};
