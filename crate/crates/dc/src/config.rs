use dcage_core::camera::CameraConfig;
use dcage_core::state::{CageMode, DrivingMode};
use dcage_core::{FilterConfig, ModeCaps, VehicleGeometry, ZoneParams};
use dcage_protocol::MapInfo;

use crate::DcError;

#[derive(Debug, Clone, PartialEq)]
pub struct DcConfig {
    pub vehicle_id: String,
    pub geometry: VehicleGeometry,
    pub fad_zone: ZoneParams,
    /// Used for every mode other than FAD.
    pub lad_zone: ZoneParams,
    pub filters: FilterConfig,
    pub cameras: CameraConfig,
    pub caps: ModeCaps,
    pub initial_cage_mode: CageMode,
    /// Door telemetry older than this reads as "no data".
    pub door_stale_ms: u64,
    /// Telemetry is also sent whenever the summary changes.
    pub telemetry_period_ms: u64,
    pub map: MapInfo,
}

impl DcConfig {
    pub fn new(vehicle_id: impl Into<String>) -> Self {
        let fad_zone = ZoneParams::fad();
        let lad_zone = ZoneParams::lad();
        Self {
            vehicle_id: vehicle_id.into(),
            geometry: VehicleGeometry::default(),
            caps: ModeCaps { fad: fad_zone.speed_cap, lad: lad_zone.speed_cap },
            fad_zone,
            lad_zone,
            filters: FilterConfig::default(),
            cameras: CameraConfig::default(),
            initial_cage_mode: CageMode::Active,
            door_stale_ms: 2000,
            telemetry_period_ms: 200,
            map: MapInfo::default(),
        }
    }

    pub fn zone_params(&self, mode: DrivingMode) -> &ZoneParams {
        match mode {
            DrivingMode::Fad => &self.fad_zone,
            _ => &self.lad_zone,
        }
    }

    pub fn validate(&self) -> Result<(), DcError> {
        let cfg = |field: &str, reason: String| DcError::Config { field: field.to_string(), reason };
        if self.vehicle_id.is_empty() {
            return Err(cfg("vehicle_id", "must not be empty".into()));
        }
        self.geometry.validate().map_err(|e| cfg("geometry", e.to_string()))?;
        self.fad_zone.validate().map_err(|e| cfg("fad_zone", e.to_string()))?;
        self.lad_zone.validate().map_err(|e| cfg("lad_zone", e.to_string()))?;
        self.filters.validate().map_err(|e| cfg(&format!("filters.{}", e.field), e.reason))?;
        self.cameras.validate().map_err(|e| cfg("cameras", e.to_string()))?;
        for (field, v) in [("caps.fad", self.caps.fad), ("caps.lad", self.caps.lad)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(cfg(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.telemetry_period_ms == 0 {
            return Err(cfg("telemetry_period_ms", "must be > 0".into()));
        }
        Ok(())
    }
}
