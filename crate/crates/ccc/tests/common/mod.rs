#![allow(dead_code)]

use dcage_core::state::{
    Brake, CageMode, CageState, DoorState, DrivingMode, MissionState, Validity, VehicleStateSummary,
};
use dcage_core::{ActuationCommand, VehicleGeometry, VehiclePose};
use dcage_protocol::{Body, MapInfo, MissionInfo, Register, Telemetry, WireMessage, PROTOCOL_VERSION};

pub fn summary(id: &str, seq: u64, mode: DrivingMode) -> VehicleStateSummary {
    VehicleStateSummary {
        vehicle_id: id.into(),
        sensor_data: Validity::Valid,
        mission_state: MissionState::Active,
        door_state: DoorState::Closed,
        driving_mode: mode,
        cage_state: if mode == DrivingMode::EmergencyStop { CageState::Occupied } else { CageState::Free },
        timestamp: seq * 50,
        seq,
    }
}

pub fn telemetry(id: &str, seq: u64, mode: DrivingMode) -> WireMessage {
    let t = Telemetry {
        summary: summary(id, seq, mode),
        cage_mode: CageMode::Active,
        pose: VehiclePose::default(),
        zone: vec![[0.0, -1.0], [4.0, -1.0], [4.0, 1.0], [0.0, 1.0]],
        offending_points: vec![],
        nearest_obstacle_m: None,
        scan: vec![[5.0, 0.0, 0.5]],
        cameras: vec![],
        mission: MissionInfo::default(),
        actuation: ActuationCommand { speed_cap: 3.0, brake: Brake::None, steering_hold: false },
    };
    WireMessage::new(id, seq, seq * 50, Body::TelemetrySnapshot(Box::new(t)))
}

pub fn register(id: &str, seq: u64) -> WireMessage {
    WireMessage::new(
        id,
        seq,
        0,
        Body::Register(Register {
            protocol_version: PROTOCOL_VERSION,
            geometry: VehicleGeometry::default(),
            map: MapInfo::default(),
        }),
    )
}
