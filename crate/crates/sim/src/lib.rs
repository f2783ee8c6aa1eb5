//! Deterministic stand-in for the delivery vehicle and its test track.
//!
//! A kinematic bicycle model, static obstacles, ray-cast LiDAR, synthetic
//! cameras, a pure-pursuit driving stub and the delivery mission lifecycle.
//! Everything is stepped on one simulated clock and seeded, so a scenario
//! replays identically.

pub mod ads;
pub mod faults;
pub mod mission;
pub mod scenario;
pub mod sensors;
pub mod sim;
pub mod vehicle;
pub mod world;

pub use scenario::{load_scenario, parse_scenario, resolve_scenario, Scenario, ScenarioError};
pub use sim::Simulation;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step must be in (0, 0.1] s, got {0}")]
    InvalidStep(f64),
}
