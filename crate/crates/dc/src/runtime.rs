//! The per-tick cage pipeline.

use std::collections::{BTreeMap, VecDeque};

use dcage_core::camera::{validate_frame, CameraFrame, CameraId, ValidityVerdict};
use dcage_core::lidar::evaluate;
use dcage_core::mode::{decision_for, step, RequestOutcome};
use dcage_core::safe_zone::compute_safe_zone;
use dcage_core::state::{
    Brake, CageMode, CageState, DoorAction, DoorState, DrivingMode, MissionState, Validity, VehicleStateSummary,
    Waypoint,
};
use dcage_core::{ActuationCommand, LidarVerdict, ModeInputs, Point2, SensorSnapshot, ZonePolygon};
use dcage_protocol::{
    Ack, AckOutcome, Body, CameraStatus, Command, DcEvent, MissionInfo, ProtocolErrorReply, Register, Telemetry,
    WireMessage, MAX_TELEMETRY_POINTS, PROTOCOL_VERSION,
};

use crate::config::DcConfig;
use crate::DcError;

pub const REASON_NOT_STATIONARY: &str = "vehicle not stationary";
pub const REASON_MISSION_ASSIGNED: &str = "mission already assigned";
pub const REASON_NO_WAYPOINTS: &str = "mission has no waypoints";
pub const REASON_NOT_RMD: &str = "not in remote manual driving";

/// An item waiting for the next tick boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    /// `seq` is the CCC message seq; `None` for commands issued on board,
    /// which are not acknowledged.
    Command { seq: Option<u64>, command: Command },
    /// A command that could not be parsed; answered with a rejection.
    Reject { ref_seq: u64, reason: String },
    ProtocolError { reason: String, ref_seq: Option<u64> },
}

impl Inbound {
    pub fn local(command: Command) -> Self {
        Inbound::Command { seq: None, command }
    }
}

/// Accepted commands the vehicle platform has to carry out.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    AssignMission { id: String, waypoints: Vec<Waypoint> },
    Door(DoorAction),
    ManualControl { speed: f64, steering: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub actuation: ActuationCommand,
    pub summary: VehicleStateSummary,
    pub events: Vec<DcEvent>,
    pub effects: Vec<Effect>,
    /// Acks, events and telemetry, in send order.
    pub outbound: Vec<WireMessage>,
}

impl TickOutput {
    pub fn mode(&self) -> DrivingMode {
        self.summary.driving_mode
    }
}

#[derive(Debug, Clone)]
struct ZoneEval {
    zone: ZonePolygon,
    verdict: LidarVerdict,
}

pub struct DependabilityCage {
    cfg: DcConfig,
    mode: DrivingMode,
    cage_mode: CageMode,
    /// Zone that was in force when the emergency stop was entered. While
    /// stopped, cage_state keeps reporting against it so the operator sees
    /// what caused the stop.
    latched: Option<ZonePolygon>,
    camera_history: BTreeMap<CameraId, VecDeque<CameraFrame>>,
    summary: VehicleStateSummary,
    out_seq: u64,
    last_telemetry_ms: Option<u64>,
    mission_id: Option<String>,
    mission_waypoints: Vec<Waypoint>,
}

impl DependabilityCage {
    pub fn new(cfg: DcConfig) -> Result<Self, DcError> {
        cfg.validate()?;
        let summary = VehicleStateSummary {
            vehicle_id: cfg.vehicle_id.clone(),
            sensor_data: Validity::Valid,
            mission_state: MissionState::Inactive,
            door_state: DoorState::Closed,
            driving_mode: DrivingMode::Fad,
            cage_state: CageState::Free,
            timestamp: 0,
            seq: 0,
        };
        Ok(Self {
            mode: DrivingMode::Fad,
            cage_mode: cfg.initial_cage_mode,
            latched: None,
            camera_history: BTreeMap::new(),
            summary,
            out_seq: 0,
            last_telemetry_ms: None,
            mission_id: None,
            mission_waypoints: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &DcConfig {
        &self.cfg
    }

    pub fn mode(&self) -> DrivingMode {
        self.mode
    }

    pub fn cage_mode(&self) -> CageMode {
        self.cage_mode
    }

    /// Latest summary; the boot state before the first tick.
    pub fn build_summary(&self) -> VehicleStateSummary {
        self.summary.clone()
    }

    fn next_seq(&mut self) -> u64 {
        self.out_seq += 1;
        self.out_seq
    }

    fn wire(&mut self, timestamp: u64, body: Body) -> WireMessage {
        let seq = self.next_seq();
        WireMessage::new(self.cfg.vehicle_id.clone(), seq, timestamp, body)
    }

    /// The first message on every connection.
    pub fn register_message(&mut self, timestamp: u64) -> WireMessage {
        let body = Body::Register(Register {
            protocol_version: PROTOCOL_VERSION,
            geometry: self.cfg.geometry,
            map: self.cfg.map.clone(),
        });
        self.wire(timestamp, body)
    }

    fn zone_for(&self, mode: DrivingMode, snap: &SensorSnapshot) -> ZonePolygon {
        if mode == DrivingMode::EmergencyStop {
            if let Some(z) = &self.latched {
                return z.clone();
            }
        }
        let speed = snap.pose.speed.max(0.0);
        let limit = std::f64::consts::FRAC_PI_2 - 1e-6;
        let steering = snap.pose.steering.clamp(-limit, limit);
        compute_safe_zone(speed, steering, &self.cfg.geometry, self.cfg.zone_params(mode), mode)
            .expect("zone inputs validated at construction and clamped here")
    }

    fn eval(&self, mode: DrivingMode, snap: &SensorSnapshot) -> ZoneEval {
        let zone = self.zone_for(mode, snap);
        let verdict = match &snap.lidar {
            Some(scan) => evaluate(scan, &zone, &self.cfg.filters),
            // No scan cannot prove the zone free.
            None => LidarVerdict {
                cage_state: CageState::Occupied,
                offending_points: Vec::new(),
                nearest_obstacle_distance: None,
                scan_seq: 0,
            },
        };
        ZoneEval { zone, verdict }
    }

    fn camera_verdict(&mut self, id: CameraId, snap: &SensorSnapshot) -> ValidityVerdict {
        let keep = self.cfg.cameras.frozen_repeat_count.saturating_sub(1);
        let history = self.camera_history.entry(id).or_default();
        let Some(frame) = snap.camera(id) else {
            history.clear();
            return ValidityVerdict::missing();
        };
        let verdict = validate_frame(frame, history.make_contiguous(), snap.clock, &self.cfg.cameras);
        if history.back().is_none_or(|last| last.seq != frame.seq) {
            history.push_back(frame.clone());
            while history.len() > keep {
                history.pop_front();
            }
        }
        verdict.unwrap_or_else(|_| ValidityVerdict::missing())
    }

    fn set_mode(&mut self, new_mode: DrivingMode, current: &ZoneEval) {
        if new_mode == self.mode {
            return;
        }
        if new_mode == DrivingMode::EmergencyStop {
            self.latched = Some(current.zone.clone());
        } else {
            self.latched = None;
        }
        self.mode = new_mode;
    }

    /// One control period: monitors, queued commands, mode control, summary.
    pub fn tick(&mut self, snap: &SensorSnapshot, queue: &mut VecDeque<Inbound>) -> TickOutput {
        let front = self.camera_verdict(CameraId::Front, snap);
        let back = self.camera_verdict(CameraId::Back, snap);
        let camera_validity = front.validity;
        let prev_cage_mode = self.cage_mode;

        let eval = |dc: &Self, mode: DrivingMode| dc.eval(mode, snap);
        let inputs = |dc: &Self, current: &ZoneEval, request: Option<(DrivingMode, CageState)>| ModeInputs {
            current_mode: dc.mode,
            cage_state_current: current.verdict.cage_state,
            cage_state_requested: request.map(|r| r.1),
            camera_validity,
            operator_request: request.map(|r| r.0),
            cage_mode: dc.cage_mode,
            speed: snap.pose.speed,
            steering_angle: snap.pose.steering,
        };

        // Fail-safe on this tick's readings before any request is considered.
        let current = eval(self, self.mode);
        let decision = step(&inputs(self, &current, None), &self.cfg.caps);
        self.set_mode(decision.new_mode, &current);

        let mut acks: Vec<WireMessage> = Vec::new();
        let mut effects = Vec::new();
        let mut mission_claimed = false;
        // Set when the last change this tick was a granted mode request; the
        // next tick's readings decide whether it holds.
        let mut granted = false;
        let raw_mission = snap.mission_state;
        while let Some(item) = queue.pop_front() {
            let (seq, command) = match item {
                Inbound::Command { seq, command } => (seq, command),
                Inbound::Reject { ref_seq, reason } => {
                    let m = self.wire(snap.clock, Body::Ack(Ack { ref_seq, outcome: AckOutcome::rejected(reason) }));
                    acks.push(m);
                    continue;
                }
                Inbound::ProtocolError { reason, ref_seq } => {
                    let m = self.wire(snap.clock, Body::ProtocolError(ProtocolErrorReply { reason, ref_seq }));
                    acks.push(m);
                    continue;
                }
            };
            let outcome = match command {
                Command::SetDrivingMode { mode } => {
                    let current = eval(self, self.mode);
                    let requested = eval(self, mode);
                    let d = step(&inputs(self, &current, Some((mode, requested.verdict.cage_state))), &self.cfg.caps);
                    if d.new_mode != self.mode {
                        granted = true;
                    }
                    self.set_mode(d.new_mode, &current);
                    AckOutcome::from(d.request_outcome.unwrap_or(RequestOutcome::Accepted))
                }
                Command::SetCageMode { mode } => {
                    granted = false;
                    self.cage_mode = mode;
                    AckOutcome::Accepted
                }
                Command::DoorCommand { action } => {
                    if snap.pose.speed == 0.0 {
                        effects.push(Effect::Door(action));
                        AckOutcome::Accepted
                    } else {
                        AckOutcome::rejected(REASON_NOT_STATIONARY)
                    }
                }
                Command::AssignMission { mission_id, waypoints } => {
                    if raw_mission != MissionState::Inactive || mission_claimed {
                        AckOutcome::rejected(REASON_MISSION_ASSIGNED)
                    } else if waypoints.is_empty() {
                        AckOutcome::rejected(REASON_NO_WAYPOINTS)
                    } else {
                        mission_claimed = true;
                        self.mission_id = Some(mission_id.clone());
                        self.mission_waypoints = waypoints.clone();
                        effects.push(Effect::AssignMission { id: mission_id, waypoints });
                        AckOutcome::Accepted
                    }
                }
                Command::ManualControl { speed, steering } => {
                    if self.mode != DrivingMode::Rmd {
                        AckOutcome::rejected(REASON_NOT_RMD)
                    } else if !(speed.is_finite() && steering.is_finite()) {
                        AckOutcome::rejected("manual targets must be finite")
                    } else {
                        effects.push(Effect::ManualControl { speed, steering });
                        AckOutcome::Accepted
                    }
                }
            };
            if let Some(ref_seq) = seq {
                let m = self.wire(snap.clock, Body::Ack(Ack { ref_seq, outcome }));
                acks.push(m);
            }
        }

        // A cage switched to active by a queued command must react this tick.
        let current = eval(self, self.mode);
        if !granted {
            let decision = step(&inputs(self, &current, None), &self.cfg.caps);
            self.set_mode(decision.new_mode, &current);
        }
        let current = eval(self, self.mode);
        let decision = decision_for(self.mode, &self.cfg.caps);

        let brake = decision.brake;
        let actuation = ActuationCommand {
            speed_cap: if brake == Brake::Full { 0.0 } else { decision.speed_cap },
            brake,
            steering_hold: brake == Brake::Full,
        };

        let mission_state = match raw_mission {
            MissionState::Active | MissionState::Blocked if self.mode == DrivingMode::EmergencyStop => {
                MissionState::Blocked
            }
            MissionState::Active | MissionState::Blocked => MissionState::Active,
            other => other,
        };
        let door_state = if snap.clock.saturating_sub(snap.door_timestamp) > self.cfg.door_stale_ms {
            DoorState::NoData
        } else {
            snap.door_state
        };
        let seq = self.summary.seq + 1;
        let prev = std::mem::replace(
            &mut self.summary,
            VehicleStateSummary {
                vehicle_id: self.cfg.vehicle_id.clone(),
                sensor_data: camera_validity,
                mission_state,
                door_state,
                driving_mode: self.mode,
                cage_state: current.verdict.cage_state,
                timestamp: snap.clock,
                seq,
            },
        );
        let now = &self.summary;
        let mut events = Vec::new();
        if prev.driving_mode != now.driving_mode {
            events.push(DcEvent::ModeChanged { from: prev.driving_mode, to: now.driving_mode });
        }
        if prev.cage_state != now.cage_state {
            events.push(DcEvent::CageStateChanged { from: prev.cage_state, to: now.cage_state });
        }
        if prev.mission_state != now.mission_state {
            events.push(DcEvent::MissionStateChanged { from: prev.mission_state, to: now.mission_state });
        }
        if prev.door_state != now.door_state {
            events.push(DcEvent::DoorStateChanged { from: prev.door_state, to: now.door_state });
        }
        if prev.sensor_data != now.sensor_data {
            events.push(DcEvent::SensorDataChanged { from: prev.sensor_data, to: now.sensor_data });
        }
        if prev_cage_mode != self.cage_mode {
            events.push(DcEvent::CageModeChanged { from: prev_cage_mode, to: self.cage_mode });
        }

        let mut outbound = acks;
        for e in &events {
            let m = self.wire(snap.clock, Body::Event(e.clone()));
            outbound.push(m);
        }
        let due = self
            .last_telemetry_ms
            .is_none_or(|t| snap.clock.saturating_sub(t) >= self.cfg.telemetry_period_ms);
        if due || !events.is_empty() {
            self.last_telemetry_ms = Some(snap.clock);
            let telemetry = self.telemetry(snap, &current, actuation, [(CameraId::Front, front), (CameraId::Back, back)]);
            let m = self.wire(snap.clock, Body::TelemetrySnapshot(Box::new(telemetry)));
            outbound.push(m);
        }

        TickOutput { actuation, summary: self.summary.clone(), events, effects, outbound }
    }

    fn telemetry(
        &self,
        snap: &SensorSnapshot,
        current: &ZoneEval,
        actuation: ActuationCommand,
        cameras: [(CameraId, ValidityVerdict); 2],
    ) -> Telemetry {
        let scan: Vec<[f64; 3]> = snap
            .lidar
            .as_ref()
            .map(|s| downsample(&s.points, MAX_TELEMETRY_POINTS).map(|p| [mm(p.x), mm(p.y), mm(p.z)]).collect())
            .unwrap_or_default();
        let flat = |p: &Point2| [p.x, p.y];
        Telemetry {
            summary: self.summary.clone(),
            cage_mode: self.cage_mode,
            pose: snap.pose,
            zone: current.zone.vertices.iter().map(flat).collect(),
            offending_points: downsample(&current.verdict.offending_points, MAX_TELEMETRY_POINTS)
                .map(|p| [mm(p.x), mm(p.y)])
                .collect(),
            nearest_obstacle_m: current.verdict.nearest_obstacle_distance,
            scan,
            cameras: cameras
                .into_iter()
                .map(|(camera_id, v)| CameraStatus { camera_id, validity: v.validity, reasons: v.reasons })
                .collect(),
            mission: MissionInfo {
                id: self.mission_id.clone(),
                state: self.summary.mission_state,
                waypoints: self.mission_waypoints.clone(),
                current_target: snap.mission_target,
            },
            actuation,
        }
    }
}

fn mm(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Evenly strided subset of at most `max` items.
pub fn downsample<T: Copy>(items: &[T], max: usize) -> impl Iterator<Item = T> + '_ {
    let stride = if max == 0 { usize::MAX } else { items.len().div_ceil(max).max(1) };
    items.iter().step_by(stride).take(max).copied()
}
