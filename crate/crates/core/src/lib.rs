//! Reinforcement-learning benchmark engine for two software-testing tasks:
//! bug hunting in a grid maze and test-case prioritization over CI cycles.
//!
//! Everything numeric is implemented here directly: a small dense network
//! with manual backpropagation, the DQN / A2C / PPO / DDPG agents, the two
//! task environments, ranking metrics and the Welch / Games-Howell
//! statistics used to compare configurations.

pub mod agents;
pub mod blockmaze;
pub mod ciprio;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod neural;
pub mod stats;

pub use error::{Error, Result};
