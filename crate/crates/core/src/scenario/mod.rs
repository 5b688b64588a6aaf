//! The simulated patrol-robot scenario: a grid world, battery and
//! navigation components, the skills that adapt them to the mission tree,
//! and optional fault injection.

pub mod build;
pub mod components;
pub mod config;
pub mod grid;
pub mod skills;

use thiserror::Error;

pub use build::{build_scenario, mission_tree, Scenario, TICK_SOURCE};
pub use components::ScenarioParams;
pub use config::{BatteryConfig, Fault, RunConfig, ScenarioConfig};
pub use grid::Grid;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("bad map: {0}")]
    BadMap(String),
    #[error("bad scenario config: {0}")]
    BadConfig(String),
    #[error("no path from {0}")]
    NoPath(String),
    #[error(transparent)]
    Model(#[from] crate::error::ModelError),
    #[error(transparent)]
    Compile(#[from] crate::bt::BtCompileError),
}
