//! Whole-log invariants.

use std::collections::BTreeMap;

use dcage_protocol::{AckOutcome, Body, Direction, EventLogEntry};

/// Every command sent to a vehicle is answered exactly once, by the vehicle's
/// Ack or by a timeout. Returns a description of the first mismatch.
pub fn exactly_one_ack<'a>(entries: impl IntoIterator<Item = &'a EventLogEntry>) -> Result<usize, String> {
    // (vehicle, seq) -> (commands, answers)
    let mut tally: BTreeMap<(String, u64), (u32, u32)> = BTreeMap::new();
    for e in entries {
        let key = |seq| (e.message.vehicle_id.clone(), seq);
        match (&e.direction, &e.message.body) {
            (Direction::ToVehicle, Body::Command(_)) => tally.entry(key(e.message.seq)).or_default().0 += 1,
            (Direction::FromVehicle, Body::Ack(a)) => tally.entry(key(a.ref_seq)).or_default().1 += 1,
            (Direction::Internal, Body::Ack(a)) if a.outcome == AckOutcome::Timeout => {
                tally.entry(key(a.ref_seq)).or_default().1 += 1
            }
            _ => {}
        }
    }
    for ((vehicle, seq), (commands, answers)) in &tally {
        if *commands != 1 || *answers != 1 {
            return Err(format!("vehicle {vehicle} seq {seq}: {commands} command(s), {answers} answer(s)"));
        }
    }
    Ok(tally.len())
}
