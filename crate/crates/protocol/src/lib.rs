//! Messages between the onboard cage and the command control centre.
//!
//! Every message is a JSON envelope `{type, vehicle_id, seq, timestamp,
//! payload}` sent as one length-delimited frame over TCP. The same JSON is
//! used on the operator WebSocket and, wrapped in [`EventLogEntry`], in the
//! control centre's newline-delimited event log.

pub mod framing;
pub mod log;
pub mod message;

pub use log::{Direction, EventLogEntry};
pub use message::{
    decode, encode, Ack, AckOutcome, Body, CameraStatus, Command, DcEvent, DecodeError, MapInfo, MissionInfo,
    ObstacleInfo, ProtocolErrorReply, Register, Telemetry, WireMessage, MAX_TELEMETRY_POINTS, PROTOCOL_VERSION,
};
