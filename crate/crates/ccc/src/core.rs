//! The control centre's state machine, free of IO.
//!
//! Callers feed it decoded vehicle messages, operator commands and the
//! current time; it answers with log entries to append, messages to send and
//! command outcomes to hand back to whoever issued them.

use std::collections::BTreeMap;

use serde::Serialize;

use dcage_core::state::VehicleStateSummary;
use dcage_protocol::{
    Ack, AckOutcome, Body, Command, Direction, EventLogEntry, ProtocolErrorReply, Register, Telemetry, WireMessage,
};

pub const REASON_UNKNOWN_VEHICLE: &str = "unknown vehicle";
pub const REASON_DISCONNECTED: &str = "disconnected";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CccConfig {
    /// A vehicle silent for longer than this is listed as lost.
    pub connection_timeout_ms: u64,
    pub ack_timeout_ms: u64,
}

impl Default for CccConfig {
    fn default() -> Self {
        Self { connection_timeout_ms: 3000, ack_timeout_ms: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Connection {
    Connected,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleRecord {
    pub vehicle_id: String,
    pub last_summary: Option<VehicleStateSummary>,
    pub last_seen: u64,
    pub connection: Connection,
    /// Telemetry snapshots discarded as out of order.
    pub dropped_snapshots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleDetail {
    #[serde(flatten)]
    pub record: VehicleRecord,
    pub registration: Option<Register>,
    pub telemetry: Option<Telemetry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub vehicle_id: String,
    pub ref_seq: u64,
    pub outcome: AckOutcome,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Effects {
    pub log: Vec<EventLogEntry>,
    pub to_vehicle: Vec<WireMessage>,
    pub resolved: Vec<Resolved>,
}

impl Effects {
    pub fn extend(&mut self, other: Effects) {
        self.log.extend(other.log);
        self.to_vehicle.extend(other.to_vehicle);
        self.resolved.extend(other.resolved);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dispatch {
    Sent { seq: u64 },
    Rejected { reason: String },
}

#[derive(Debug, Clone)]
struct Vehicle {
    registration: Option<Register>,
    last_summary: Option<VehicleStateSummary>,
    telemetry: Option<Telemetry>,
    last_seen: u64,
    /// Highest seq seen from the vehicle in the current session.
    last_seq: Option<u64>,
    dropped_snapshots: u64,
    /// Closed transport; cleared by the next message.
    disconnected: bool,
    /// Seq counter for CCC-to-vehicle messages.
    out_seq: u64,
}

#[derive(Debug, Clone)]
struct Pending {
    deadline: u64,
}

#[derive(Debug, Default)]
pub struct CccCore {
    cfg: CccConfig,
    vehicles: BTreeMap<String, Vehicle>,
    pending: BTreeMap<(String, u64), Pending>,
    global_seq: u64,
    internal_seq: u64,
    late_acks: u64,
}

impl CccCore {
    pub fn new(cfg: CccConfig) -> Self {
        Self { cfg, ..Self::default() }
    }

    /// Late or unsolicited acks, dropped without logging.
    pub fn late_acks(&self) -> u64 {
        self.late_acks
    }

    pub fn pending_commands(&self) -> usize {
        self.pending.len()
    }

    fn entry(&mut self, now: u64, direction: Direction, message: WireMessage) -> EventLogEntry {
        let e = EventLogEntry { global_seq: self.global_seq, wall_time: now, direction, message };
        self.global_seq += 1;
        e
    }

    /// Processes one message received from a vehicle connection.
    pub fn ingest(&mut self, msg: WireMessage, now: u64) -> Effects {
        let mut fx = Effects::default();
        let v = self.vehicles.entry(msg.vehicle_id.clone()).or_insert_with(|| Vehicle {
            registration: None,
            last_summary: None,
            telemetry: None,
            last_seen: now,
            last_seq: None,
            dropped_snapshots: 0,
            disconnected: false,
            out_seq: 0,
        });
        v.last_seen = now;
        v.disconnected = false;
        match &msg.body {
            Body::Register(r) => {
                // A registration opens a new session, possibly after a restart.
                v.registration = Some(r.clone());
                v.last_seq = Some(msg.seq);
            }
            Body::TelemetrySnapshot(t) => {
                if v.last_seq.is_some_and(|last| msg.seq <= last) {
                    v.dropped_snapshots += 1;
                    return fx;
                }
                v.last_summary = Some(t.summary.clone());
                v.telemetry = Some((**t).clone());
            }
            Body::Ack(a) => {
                if self.pending.remove(&(msg.vehicle_id.clone(), a.ref_seq)).is_none() {
                    self.late_acks += 1;
                    return fx;
                }
                fx.resolved.push(Resolved {
                    vehicle_id: msg.vehicle_id.clone(),
                    ref_seq: a.ref_seq,
                    outcome: a.outcome.clone(),
                });
            }
            Body::Event(_) | Body::ProtocolError(_) => {}
            Body::Command(_) => {
                let reply = self.protocol_error(&msg.vehicle_id, "vehicles may not send commands", Some(msg.seq), now);
                fx.extend(reply);
                return fx;
            }
        }
        let v = self.vehicles.get_mut(&msg.vehicle_id).expect("inserted above");
        v.last_seq = Some(v.last_seq.map_or(msg.seq, |s| s.max(msg.seq)));
        let e = self.entry(now, Direction::FromVehicle, msg);
        fx.log.push(e);
        fx
    }

    /// Reply to a frame that could not be processed.
    pub fn protocol_error(&mut self, vehicle_id: &str, reason: &str, ref_seq: Option<u64>, now: u64) -> Effects {
        let mut fx = Effects::default();
        let Some(v) = self.vehicles.get_mut(vehicle_id) else {
            return fx;
        };
        v.out_seq += 1;
        let msg = WireMessage::new(
            vehicle_id,
            v.out_seq,
            now,
            Body::ProtocolError(ProtocolErrorReply { reason: reason.to_string(), ref_seq }),
        );
        fx.to_vehicle.push(msg.clone());
        let e = self.entry(now, Direction::ToVehicle, msg);
        fx.log.push(e);
        fx
    }

    /// The vehicle's transport closed.
    pub fn disconnect(&mut self, vehicle_id: &str) {
        if let Some(v) = self.vehicles.get_mut(vehicle_id) {
            v.disconnected = true;
        }
    }

    fn connection(&self, v: &Vehicle, now: u64) -> Connection {
        if v.disconnected || now.saturating_sub(v.last_seen) > self.cfg.connection_timeout_ms {
            Connection::Lost
        } else {
            Connection::Connected
        }
    }

    /// Forwards an operator command. The outcome arrives later through
    /// [`Effects::resolved`], by Ack or by timeout.
    pub fn dispatch(&mut self, vehicle_id: &str, command: Command, now: u64) -> (Dispatch, Effects) {
        let mut fx = Effects::default();
        let Some(v) = self.vehicles.get(vehicle_id) else {
            return (Dispatch::Rejected { reason: REASON_UNKNOWN_VEHICLE.into() }, fx);
        };
        if self.connection(v, now) == Connection::Lost {
            return (Dispatch::Rejected { reason: REASON_DISCONNECTED.into() }, fx);
        }
        let v = self.vehicles.get_mut(vehicle_id).expect("checked above");
        v.out_seq += 1;
        let seq = v.out_seq;
        let msg = WireMessage::new(vehicle_id, seq, now, Body::Command(command));
        self.pending
            .insert((vehicle_id.to_string(), seq), Pending { deadline: now + self.cfg.ack_timeout_ms });
        fx.to_vehicle.push(msg.clone());
        let e = self.entry(now, Direction::ToVehicle, msg);
        fx.log.push(e);
        (Dispatch::Sent { seq }, fx)
    }

    /// Expires commands whose Ack did not arrive in time.
    pub fn poll(&mut self, now: u64) -> Effects {
        let mut fx = Effects::default();
        let expired: Vec<(String, u64)> = self
            .pending
            .iter()
            .filter(|(_, p)| now >= p.deadline)
            .map(|(k, _)| k.clone())
            .collect();
        for (vehicle_id, ref_seq) in expired {
            self.pending.remove(&(vehicle_id.clone(), ref_seq));
            self.internal_seq += 1;
            let msg = WireMessage::new(
                vehicle_id.clone(),
                self.internal_seq,
                now,
                Body::Ack(Ack { ref_seq, outcome: AckOutcome::Timeout }),
            );
            let e = self.entry(now, Direction::Internal, msg);
            fx.log.push(e);
            fx.resolved.push(Resolved { vehicle_id, ref_seq, outcome: AckOutcome::Timeout });
        }
        fx
    }

    fn record(&self, id: &str, v: &Vehicle, now: u64) -> VehicleRecord {
        VehicleRecord {
            vehicle_id: id.to_string(),
            last_summary: v.last_summary.clone(),
            last_seen: v.last_seen,
            connection: self.connection(v, now),
            dropped_snapshots: v.dropped_snapshots,
        }
    }

    pub fn fleet(&self, now: u64) -> Vec<VehicleRecord> {
        self.vehicles.iter().map(|(id, v)| self.record(id, v, now)).collect()
    }

    pub fn vehicle_detail(&self, id: &str, now: u64) -> Option<VehicleDetail> {
        let v = self.vehicles.get(id)?;
        Some(VehicleDetail {
            record: self.record(id, v, now),
            registration: v.registration.clone(),
            telemetry: v.telemetry.clone(),
        })
    }
}
