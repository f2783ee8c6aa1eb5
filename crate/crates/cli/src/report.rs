//! Machine-readable outcome of a scenario run.

use std::collections::BTreeMap;

use serde::Serialize;

use dcage_core::state::{DrivingMode, MissionState};

use crate::script::StepResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmergencyStop {
    /// When the cage entered ES, simulated ms.
    pub time_ms: u64,
    /// First standstill afterwards.
    pub stop_time_ms: Option<u64>,
    /// Front bumper to the nearest obstacle once stopped.
    pub front_clearance_m: Option<f64>,
    pub obstacle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeTransition {
    pub time_ms: u64,
    pub from: DrivingMode,
    pub to: DrivingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delivery {
    pub name: String,
    pub time_ms: u64,
    /// Driving mode when the delivery completed.
    pub mode: DrivingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub vehicle_id: String,
    pub passed: bool,
    pub final_mission_state: MissionState,
    pub final_mode: DrivingMode,
    pub sim_time_ms: u64,
    pub emergency_stops: Vec<EmergencyStop>,
    /// Smallest footprint-to-obstacle distance over the run, per obstacle.
    pub min_clearance_m: BTreeMap<String, f64>,
    pub mode_trace: Vec<ModeTransition>,
    pub deliveries: Vec<Delivery>,
    pub script: Vec<StepResult>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Modes visited, consecutive duplicates collapsed, starting with the
    /// initial mode.
    pub fn mode_sequence(&self, initial: DrivingMode) -> Vec<DrivingMode> {
        let mut seq = vec![initial];
        for t in &self.mode_trace {
            if seq.last() != Some(&t.to) {
                seq.push(t.to);
            }
        }
        seq
    }
}
