//! Append-only event log records, one JSON object per line.

use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::message::WireMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FromVehicle,
    ToVehicle,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventLogEntry {
    pub global_seq: u64,
    pub wall_time: u64,
    pub direction: Direction,
    pub message: WireMessage,
}

impl EventLogEntry {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("log entries always serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum LogReadError {
    #[error("log read failed: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt entry at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("global_seq out of order at line {line}: expected {expected}, found {found}")]
    OutOfOrder { line: usize, expected: u64, found: u64 },
}

/// Reads and checks a whole log: every line parses and global_seq is dense
/// from the first entry on.
pub fn read_log<R: BufRead>(r: R) -> Result<Vec<EventLogEntry>, LogReadError> {
    let mut out: Vec<EventLogEntry> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: EventLogEntry = serde_json::from_str(&line).map_err(|e| LogReadError::Corrupt {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if let Some(prev) = out.last() {
            if entry.global_seq != prev.global_seq + 1 {
                return Err(LogReadError::OutOfOrder {
                    line: i + 1,
                    expected: prev.global_seq + 1,
                    found: entry.global_seq,
                });
            }
        }
        out.push(entry);
    }
    Ok(out)
}
