//! The onboard Dependability Cage.
//!
//! Each tick the cage computes the safe zone of the current driving mode,
//! checks it against the LiDAR scan, validates the camera images, applies
//! queued operator commands through mode control and reports the vehicle
//! state summary. Commands arriving from the control centre are only ever
//! appended to a queue that the tick consumes.

pub mod client;
pub mod config;
pub mod inbound;
pub mod runtime;

pub use client::CccLink;
pub use config::DcConfig;
pub use inbound::{handle_ccc_frame, handle_ccc_message};
pub use runtime::{DependabilityCage, Effect, Inbound, TickOutput};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DcError {
    #[error("invalid cage config {field}: {reason}")]
    Config { field: String, reason: String },
}
