//! Co-simulated vehicle: sensing, actuation and mission progress on one clock.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dcage_core::camera::{CameraFrame, CameraId};
use dcage_core::state::{DoorAction, DoorState, DrivingMode, MissionState, Waypoint};
use dcage_core::{ActuationCommand, SensorSnapshot, VehiclePose};

use crate::ads::{ads_step, track};
use crate::mission::{Mission, MissionEvent};
use crate::scenario::Scenario;
use crate::sensors::{raycast_lidar, synth_frame};
use crate::vehicle::{step_vehicle, Controls};
use crate::SimError;

pub struct Simulation {
    scenario: Scenario,
    pose: VehiclePose,
    mission: Mission,
    door: DoorState,
    time_ms: u64,
    lidar_seq: u64,
    camera_seq: u64,
    last_frames: Vec<CameraFrame>,
    manual: Option<(f64, f64)>,
    rng: ChaCha8Rng,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(scenario.sim.seed);
        Self {
            pose: scenario.start_pose(),
            scenario,
            mission: Mission::default(),
            door: DoorState::Closed,
            time_ms: 0,
            lidar_seq: 0,
            camera_seq: 0,
            last_frames: Vec::new(),
            manual: None,
            rng,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn pose(&self) -> &VehiclePose {
        &self.pose
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn door(&self) -> DoorState {
        self.door
    }

    pub fn time_ms(&self) -> u64 {
        self.time_ms
    }

    /// Samples every sensor at the current time.
    pub fn sense(&mut self) -> SensorSnapshot {
        let t = self.time_ms;
        let ghosts: Vec<_> = self.scenario.faults.ghosts_at(t).copied().collect();
        self.lidar_seq += 1;
        let scan = raycast_lidar(
            &self.scenario.world,
            &self.pose,
            &self.scenario.vehicle.geometry,
            &self.scenario.sim.lidar,
            &ghosts,
            t,
            self.lidar_seq,
            &mut self.rng,
        );
        self.camera_seq += 1;
        let mut frames = Vec::with_capacity(2);
        for id in [CameraId::Front, CameraId::Back] {
            let mut frame = synth_frame(id, self.camera_seq, t);
            if self.scenario.faults.camera_frozen(id, t) {
                if let Some(prev) = self.last_frames.iter().find(|f| f.camera_id == id) {
                    frame.pixels = prev.pixels.clone();
                }
            }
            frames.push(frame);
        }
        self.last_frames = frames.clone();
        SensorSnapshot {
            pose: self.pose,
            lidar: Some(scan),
            cameras: frames,
            door_state: self.door,
            door_timestamp: t,
            mission_state: self.mission.state,
            mission_target: (self.mission.state != MissionState::Inactive
                && self.mission.current_target < self.mission.waypoints.len())
            .then_some(self.mission.current_target),
            clock: t,
        }
    }

    pub fn assign_mission(&mut self, id: String, waypoints: Vec<Waypoint>) -> Result<(), &'static str> {
        self.mission.assign(id, waypoints, self.pose.position())
    }

    /// Operator door command; callers enforce the standstill rule.
    pub fn door_command(&mut self, action: DoorAction) {
        self.door = match action {
            DoorAction::Open => DoorState::Open,
            DoorAction::Close => DoorState::Closed,
        };
    }

    /// Speed and steering targets used while in remote manual driving.
    pub fn manual_control(&mut self, speed: f64, steering: f64) {
        self.manual = Some((speed, steering));
    }

    pub fn advance(
        &mut self,
        act: &ActuationCommand,
        mode: DrivingMode,
        dt_ms: u64,
    ) -> Result<Vec<MissionEvent>, SimError> {
        let s = &self.scenario;
        let dt = dt_ms as f64 / 1000.0;
        let dynamics = &s.vehicle.dynamics;
        let wheelbase = s.vehicle.geometry.wheelbase;
        if mode != DrivingMode::Rmd {
            self.manual = None;
        }
        let controls = match mode {
            DrivingMode::Fad | DrivingMode::Lad => {
                let leg = self.mission.leg();
                ads_step(&self.pose, leg.as_ref(), act, &s.sim.ads, wheelbase, dynamics, dt)
            }
            DrivingMode::Rmd => {
                let (speed, steering) = self.manual.unwrap_or((0.0, self.pose.steering));
                track(&self.pose, speed, steering, dynamics, dt)
            }
            DrivingMode::Imd | DrivingMode::EmergencyStop => Controls {
                accel: -dynamics.brake_decel,
                steering_rate: 0.0,
            },
        };
        self.pose = step_vehicle(&self.pose, controls, act, wheelbase, dynamics, dt)?;
        self.time_ms += dt_ms;
        let events = self.mission.update(
            &self.pose,
            mode,
            &mut self.door,
            self.time_ms,
            s.sim.ads.reach_tolerance,
            s.sim.dwell_ms,
        );
        Ok(events)
    }

    pub fn mission_finished(&self) -> bool {
        self.mission.state == MissionState::Completed
    }
}
