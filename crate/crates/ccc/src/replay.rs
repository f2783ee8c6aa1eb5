//! Re-emitting a recorded event log at scaled timing.

use std::io::{self, BufRead};
use std::time::Duration;

use dcage_core::state::VehicleStateSummary;
use dcage_protocol::{Body, Direction, EventLogEntry};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("speed factor must be a finite number > 0, got {0}")]
    SpeedFactor(f64),
    #[error("log read failed: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt entry at line {line} (after {replayed} entries): {reason}")]
    Corrupt { line: usize, replayed: usize, reason: String },
    #[error("entry at line {line} has global_seq {found}, expected {expected}")]
    OutOfOrder { line: usize, expected: u64, found: u64 },
}

pub fn check_speed_factor(speed_factor: f64) -> Result<(), ReplayError> {
    if speed_factor.is_finite() && speed_factor > 0.0 {
        Ok(())
    } else {
        Err(ReplayError::SpeedFactor(speed_factor))
    }
}

/// Wall-clock pause before an entry recorded `gap_ms` after its predecessor.
pub fn scaled_delay(gap_ms: u64, speed_factor: f64) -> Duration {
    Duration::from_secs_f64(gap_ms as f64 / 1000.0 / speed_factor)
}

/// Streams a log, calling `emit` for each entry in order and `wait` with the
/// scaled gap before it. Stops at the first corrupt or out-of-order line
/// after emitting everything before it.
pub fn replay<R: BufRead>(
    reader: R,
    speed_factor: f64,
    mut wait: impl FnMut(Duration),
    mut emit: impl FnMut(&EventLogEntry),
) -> Result<usize, ReplayError> {
    check_speed_factor(speed_factor)?;
    let mut prev: Option<(u64, u64)> = None;
    let mut count = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: EventLogEntry = serde_json::from_str(&line).map_err(|e| ReplayError::Corrupt {
            line: i + 1,
            replayed: count,
            reason: e.to_string(),
        })?;
        if let Some((seq, wall)) = prev {
            if entry.global_seq != seq + 1 {
                return Err(ReplayError::OutOfOrder { line: i + 1, expected: seq + 1, found: entry.global_seq });
            }
            wait(scaled_delay(entry.wall_time.saturating_sub(wall), speed_factor));
        }
        emit(&entry);
        prev = Some((entry.global_seq, entry.wall_time));
        count += 1;
    }
    Ok(count)
}

/// Summaries carried by the vehicles' telemetry, in log order.
pub fn summaries<'a>(entries: impl IntoIterator<Item = &'a EventLogEntry>) -> Vec<VehicleStateSummary> {
    entries
        .into_iter()
        .filter(|e| e.direction == Direction::FromVehicle)
        .filter_map(|e| match &e.message.body {
            Body::TelemetrySnapshot(t) => Some(t.summary.clone()),
            _ => None,
        })
        .collect()
}
