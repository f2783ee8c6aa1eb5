//! Scenario file: one JSON document describing the track, the vehicle, every
//! monitor parameter, the mission, injected faults and expected outcomes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use dcage_core::camera::{CameraConfig, CameraError};
use dcage_core::safe_zone::ZoneError;
use dcage_core::state::{CageMode, DrivingMode, MissionState, Waypoint};
use dcage_core::{FilterConfig, ModeCaps, VehicleGeometry, VehiclePose, ZoneParams};

use crate::ads::AdsConfig;
use crate::faults::FaultSchedule;
use crate::sensors::LidarConfig;
use crate::vehicle::Dynamics;
use crate::world::WorldModel;

const HAMBURG_DEMO: &str = include_str!("../scenarios/hamburg_demo.json");
const HAMBURG_BLOCKED: &str = include_str!("../scenarios/hamburg_blocked.json");
const EMPTY_LOT: &str = include_str!("../scenarios/empty_lot.json");

/// Scenarios compiled into the binary, by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "hamburg_demo" => Some(HAMBURG_DEMO),
        "hamburg_blocked" => Some(HAMBURG_BLOCKED),
        "empty_lot" => Some(EMPTY_LOT),
        _ => None,
    }
}

pub const BUNDLED_NAMES: [&str; 3] = ["hamburg_demo", "hamburg_blocked", "empty_lot"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("scenario key `{key}`{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid { key: String, line: Option<usize>, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub geometry: VehicleGeometry,
    pub start: StartPose,
    pub dynamics: Dynamics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZonesSection {
    pub fad: ZoneParams,
    pub lad: ZoneParams,
}

impl Default for ZonesSection {
    fn default() -> Self {
        Self { fad: ZoneParams::fad(), lad: ZoneParams::lad() }
    }
}

impl ZonesSection {
    /// Zone parameters used while in `mode`. Only FAD has its own; every
    /// other mode uses the smaller LAD zone.
    pub fn for_mode(&self, mode: DrivingMode) -> &ZoneParams {
        match mode {
            DrivingMode::Fad => &self.fad,
            _ => &self.lad,
        }
    }

    pub fn caps(&self) -> ModeCaps {
        ModeCaps { fad: self.fad.speed_cap, lad: self.lad.speed_cap }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSpec {
    pub id: String,
    /// Delivery point names, in order.
    pub waypoints: Vec<String>,
    #[serde(default)]
    pub assign_at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcSection {
    pub tick_ms: u64,
    pub cage_mode: CageMode,
    pub door_stale_ms: u64,
    pub telemetry_period_ms: u64,
}

impl Default for DcSection {
    fn default() -> Self {
        Self { tick_ms: 50, cage_mode: CageMode::Active, door_stale_ms: 2000, telemetry_period_ms: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    pub max_time_ms: u64,
    pub dwell_ms: u64,
    /// Simulated time to keep running after the mission completes.
    pub settle_ms: u64,
    pub lidar: LidarConfig,
    pub ads: AdsConfig,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            seed: 1,
            max_time_ms: 300_000,
            dwell_ms: 3000,
            settle_ms: 1000,
            lidar: LidarConfig::default(),
            ads: AdsConfig::default(),
        }
    }
}

/// Outcomes the scenario run is checked against. Absent entries are not
/// checked.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expectations {
    pub mission_state: Option<MissionState>,
    pub emergency_stops: Option<usize>,
    /// Inclusive range for the front-bumper clearance once stopped in ES.
    pub es_clearance_m: Option<[f64; 2]>,
    /// Driving mode required when each named delivery completes.
    pub deliveries_in_mode: BTreeMap<String, DrivingMode>,
    /// Sequence of driving modes, consecutive duplicates collapsed.
    pub mode_sequence: Option<Vec<DrivingMode>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub vehicle_id: String,
    pub world: WorldModel,
    pub vehicle: VehicleSection,
    pub zones: ZonesSection,
    pub filters: FilterConfig,
    pub cameras: CameraConfig,
    pub mission: Option<MissionSpec>,
    pub faults: FaultSchedule,
    pub dc: DcSection,
    pub sim: SimSection,
    pub expect: Expectations,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "unnamed".into(),
            vehicle_id: "pluto".into(),
            world: WorldModel::default(),
            vehicle: VehicleSection::default(),
            zones: ZonesSection::default(),
            filters: FilterConfig::default(),
            cameras: CameraConfig::default(),
            mission: None,
            faults: FaultSchedule::default(),
            dc: DcSection::default(),
            sim: SimSection::default(),
            expect: Expectations::default(),
        }
    }
}

impl Scenario {
    pub fn start_pose(&self) -> VehiclePose {
        let s = self.vehicle.start;
        VehiclePose { x: s.x, y: s.y, heading: s.heading, speed: 0.0, steering: 0.0 }
    }

    /// Mission waypoints resolved against the world's delivery points.
    pub fn mission_waypoints(&self) -> Vec<Waypoint> {
        self.mission
            .iter()
            .flat_map(|m| m.waypoints.iter())
            .filter_map(|n| self.world.point(n).cloned())
            .collect()
    }

    /// Checks every invariant; errors carry the dotted key path.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let sect = |s: &str, (k, r): (String, String)| (format!("{s}.{k}"), r);
        if self.vehicle_id.is_empty() {
            return Err(("vehicle_id".into(), "must not be empty".into()));
        }
        self.world.validate().map_err(|e| sect("world", e))?;
        self.vehicle.geometry.validate().map_err(|e| zone_key("vehicle.geometry", e))?;
        let s = self.vehicle.start;
        if !(s.x.is_finite() && s.y.is_finite() && s.heading.is_finite()) {
            return Err(("vehicle.start".into(), "must be finite".into()));
        }
        self.vehicle
            .dynamics
            .validate()
            .map_err(|(k, r)| (format!("vehicle.dynamics.{k}"), r))?;
        self.zones.fad.validate().map_err(|e| zone_key("zones.fad", e))?;
        self.zones.lad.validate().map_err(|e| zone_key("zones.lad", e))?;
        self.filters
            .validate()
            .map_err(|e| (format!("filters.{}", e.field), e.reason))?;
        self.cameras.validate().map_err(|e| match e {
            CameraError::Config { field, reason } => (format!("cameras.{field}"), reason),
            other => ("cameras".into(), other.to_string()),
        })?;
        if let Some(m) = &self.mission {
            if m.waypoints.is_empty() {
                return Err(("mission.waypoints".into(), "must not be empty".into()));
            }
            for (i, w) in m.waypoints.iter().enumerate() {
                if self.world.point(w).is_none() {
                    return Err((format!("mission.waypoints[{i}]"), format!("unknown delivery point {w:?}")));
                }
            }
        }
        self.faults.validate().map_err(|e| sect("faults", e))?;
        if !(1..=100).contains(&self.dc.tick_ms) {
            return Err(("dc.tick_ms".into(), format!("must be in [1, 100], got {}", self.dc.tick_ms)));
        }
        if self.dc.telemetry_period_ms == 0 {
            return Err(("dc.telemetry_period_ms".into(), "must be > 0".into()));
        }
        self.sim
            .lidar
            .validate()
            .map_err(|(k, r)| (format!("sim.lidar.{k}"), r))?;
        self.sim.ads.validate().map_err(|(k, r)| (format!("sim.ads.{k}"), r))?;
        if self.sim.max_time_ms == 0 {
            return Err(("sim.max_time_ms".into(), "must be > 0".into()));
        }
        if let Some([lo, hi]) = self.expect.es_clearance_m {
            if !(lo <= hi) {
                return Err(("expect.es_clearance_m".into(), "lower bound exceeds upper bound".into()));
            }
        }
        Ok(())
    }
}

fn zone_key(section: &str, e: ZoneError) -> (String, String) {
    match e {
        ZoneError::InvalidConfig { field, reason } => (format!("{section}.{field}"), reason),
        other => (section.to_string(), other.to_string()),
    }
}

/// Line of the last component of a dotted key, found by scanning for each
/// component's quoted name in order.
fn locate(text: &str, key: &str) -> Option<usize> {
    let mut pos = 0;
    for comp in key.split('.') {
        let name = comp.split('[').next().unwrap_or(comp);
        let needle = format!("\"{name}\"");
        pos += text[pos..].find(&needle)?;
    }
    Some(text[..pos].matches('\n').count() + 1)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate().map_err(|(key, reason)| ScenarioError::Invalid {
        line: locate(text, &key),
        key,
        reason,
    })?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Loads a file, falling back to a bundled scenario of that name.
pub fn resolve_scenario(spec: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(text) = bundled(spec) {
            return parse_scenario(text);
        }
    }
    load_scenario(path)
}
