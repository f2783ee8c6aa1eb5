//! Command Control Centre.
//!
//! Keeps the fleet registry, forwards operator commands and correlates their
//! Acks, writes every exchanged message to an append-only event log and
//! serves the operator console over HTTP and a WebSocket stream. The
//! protocol logic lives in [`CccCore`], which does no IO, so the same code
//! runs behind the network server and inside headless simulations.

pub mod check;
pub mod core;
pub mod logfile;
pub mod replay;
pub mod server;

pub use crate::core::{CccConfig, CccCore, Connection, Dispatch, Effects, Resolved, VehicleDetail, VehicleRecord};
pub use logfile::{resolve_log_dir, EventLogWriter};
