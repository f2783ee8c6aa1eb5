use std::collections::BTreeSet;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use dcage_core::camera::{CameraId, InvalidReason};
use dcage_core::mode::RequestOutcome;
use dcage_core::state::{
    CageMode, CageState, DoorAction, DoorState, DrivingMode, MissionState, Validity, VehicleStateSummary, Waypoint,
};
use dcage_core::{ActuationCommand, VehicleGeometry, VehiclePose};

pub const PROTOCOL_VERSION: u32 = 1;

/// Upper bound on scan points carried by one telemetry snapshot.
pub const MAX_TELEMETRY_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleInfo {
    pub name: String,
    pub polygon: Vec<[f64; 2]>,
}

/// Static map data for the operator's mini-map.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapInfo {
    pub delivery_points: Vec<Waypoint>,
    pub route: Vec<String>,
    pub obstacles: Vec<ObstacleInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Register {
    pub protocol_version: u32,
    pub geometry: VehicleGeometry,
    pub map: MapInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraStatus {
    pub camera_id: CameraId,
    pub validity: Validity,
    pub reasons: BTreeSet<InvalidReason>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionInfo {
    pub id: Option<String>,
    pub state: MissionState,
    pub waypoints: Vec<Waypoint>,
    /// Index of the delivery point being approached.
    pub current_target: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Telemetry {
    pub summary: VehicleStateSummary,
    pub cage_mode: CageMode,
    pub pose: VehiclePose,
    /// Safe-zone polygon of the current mode, vehicle frame.
    pub zone: Vec<[f64; 2]>,
    pub offending_points: Vec<[f64; 2]>,
    pub nearest_obstacle_m: Option<f64>,
    /// Downsampled scan, vehicle frame, at most [`MAX_TELEMETRY_POINTS`].
    pub scan: Vec<[f64; 3]>,
    pub cameras: Vec<CameraStatus>,
    pub mission: MissionInfo,
    pub actuation: ActuationCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", deny_unknown_fields)]
pub enum DcEvent {
    ModeChanged { from: DrivingMode, to: DrivingMode },
    CageStateChanged { from: CageState, to: CageState },
    MissionStateChanged { from: MissionState, to: MissionState },
    DoorStateChanged { from: DoorState, to: DoorState },
    SensorDataChanged { from: Validity, to: Validity },
    CageModeChanged { from: CageMode, to: CageMode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", deny_unknown_fields)]
pub enum Command {
    SetDrivingMode { mode: DrivingMode },
    SetCageMode { mode: CageMode },
    DoorCommand { action: DoorAction },
    AssignMission { mission_id: String, waypoints: Vec<Waypoint> },
    ManualControl { speed: f64, steering: f64 },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetDrivingMode { .. } => "SetDrivingMode",
            Command::SetCageMode { .. } => "SetCageMode",
            Command::DoorCommand { .. } => "DoorCommand",
            Command::AssignMission { .. } => "AssignMission",
            Command::ManualControl { .. } => "ManualControl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case", deny_unknown_fields)]
pub enum AckOutcome {
    Accepted,
    Rejected { reason: String },
    Timeout,
}

impl AckOutcome {
    pub fn rejected(reason: impl Into<String>) -> Self {
        AckOutcome::Rejected { reason: reason.into() }
    }
}

impl From<RequestOutcome> for AckOutcome {
    fn from(o: RequestOutcome) -> Self {
        match o {
            RequestOutcome::Accepted => AckOutcome::Accepted,
            RequestOutcome::Rejected { reason } => AckOutcome::Rejected { reason },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ref_seq: u64,
    #[serde(flatten)]
    pub outcome: AckOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolErrorReply {
    pub reason: String,
    pub ref_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Register(Register),
    TelemetrySnapshot(Box<Telemetry>),
    Event(DcEvent),
    Command(Command),
    Ack(Ack),
    ProtocolError(ProtocolErrorReply),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Register(_) => "Register",
            Body::TelemetrySnapshot(_) => "TelemetrySnapshot",
            Body::Event(_) => "Event",
            Body::Command(_) => "Command",
            Body::Ack(_) => "Ack",
            Body::ProtocolError(_) => "ProtocolError",
        }
    }
}

/// Envelope `{type, vehicle_id, seq, timestamp, payload}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub vehicle_id: String,
    /// Strictly increasing per vehicle and direction.
    pub seq: u64,
    /// Milliseconds on the sender's clock.
    pub timestamp: u64,
    pub body: Body,
}

impl WireMessage {
    pub fn new(vehicle_id: impl Into<String>, seq: u64, timestamp: u64, body: Body) -> Self {
        Self { vehicle_id: vehicle_id.into(), seq, timestamp, body }
    }
}

impl Serialize for WireMessage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("WireMessage", 5)?;
        st.serialize_field("type", self.body.kind())?;
        st.serialize_field("vehicle_id", &self.vehicle_id)?;
        st.serialize_field("seq", &self.seq)?;
        st.serialize_field("timestamp", &self.timestamp)?;
        match &self.body {
            Body::Register(p) => st.serialize_field("payload", p)?,
            Body::TelemetrySnapshot(p) => st.serialize_field("payload", p)?,
            Body::Event(p) => st.serialize_field("payload", p)?,
            Body::Command(p) => st.serialize_field("payload", p)?,
            Body::Ack(p) => st.serialize_field("payload", p)?,
            Body::ProtocolError(p) => st.serialize_field("payload", p)?,
        }
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvelope {
    #[serde(rename = "type")]
    kind: String,
    vehicle_id: String,
    seq: u64,
    timestamp: u64,
    payload: serde_json::Value,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message type {kind:?}")]
    UnknownType { kind: String, vehicle_id: String, seq: u64 },
    #[error("bad {kind} payload: {reason}")]
    BadPayload { kind: String, vehicle_id: String, seq: u64, reason: String },
}

impl<'de> Deserialize<'de> for WireMessage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawEnvelope::deserialize(d)?;
        from_raw(raw).map_err(serde::de::Error::custom)
    }
}

fn from_raw(raw: RawEnvelope) -> Result<WireMessage, DecodeError> {
    fn payload<T: serde::de::DeserializeOwned>(raw: &RawEnvelope) -> Result<T, DecodeError> {
        T::deserialize(&raw.payload).map_err(|e| DecodeError::BadPayload {
            kind: raw.kind.clone(),
            vehicle_id: raw.vehicle_id.clone(),
            seq: raw.seq,
            reason: e.to_string(),
        })
    }
    let body = match raw.kind.as_str() {
        "Register" => Body::Register(payload(&raw)?),
        "TelemetrySnapshot" => Body::TelemetrySnapshot(Box::new(payload(&raw)?)),
        "Event" => Body::Event(payload(&raw)?),
        "Command" => Body::Command(payload(&raw)?),
        "Ack" => Body::Ack(payload(&raw)?),
        "ProtocolError" => Body::ProtocolError(payload(&raw)?),
        _ => {
            return Err(DecodeError::UnknownType {
                kind: raw.kind,
                vehicle_id: raw.vehicle_id,
                seq: raw.seq,
            })
        }
    };
    Ok(WireMessage { vehicle_id: raw.vehicle_id, seq: raw.seq, timestamp: raw.timestamp, body })
}

/// Serializes to compact JSON.
pub fn encode(msg: &WireMessage) -> Vec<u8> {
    serde_json::to_vec(msg).expect("wire messages always serialize")
}

/// Parses the envelope first so callers can answer a bad payload or an
/// unknown type with a reply addressed to the sender.
pub fn decode(bytes: &[u8]) -> Result<WireMessage, DecodeError> {
    let raw: RawEnvelope = serde_json::from_slice(bytes).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    from_raw(raw)
}
