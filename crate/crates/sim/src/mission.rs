//! Delivery mission lifecycle and the door cycle at each stop.

use serde::{Deserialize, Serialize};

use dcage_core::state::{DoorState, DrivingMode, MissionState, Waypoint};
use dcage_core::{Point2, VehiclePose};

use crate::ads::Leg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Driving,
    /// Within reach of the target, braking to a standstill.
    Stopping,
    Dwelling { since_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MissionEvent {
    StateChanged { from: MissionState, to: MissionState },
    Arrived { index: usize, name: String },
    DeliveryCompleted { index: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub id: String,
    pub waypoints: Vec<Waypoint>,
    pub state: MissionState,
    pub current_target: usize,
    pub phase: Phase,
    /// Start of the current leg.
    pub origin: Point2,
}

impl Default for Mission {
    fn default() -> Self {
        Self {
            id: String::new(),
            waypoints: Vec::new(),
            state: MissionState::Inactive,
            current_target: 0,
            phase: Phase::Driving,
            origin: Point2::origin(),
        }
    }
}

impl Mission {
    /// Starts a mission; only an inactive slot accepts one.
    pub fn assign(&mut self, id: String, waypoints: Vec<Waypoint>, origin: Point2) -> Result<(), &'static str> {
        if self.state != MissionState::Inactive {
            return Err("mission already assigned");
        }
        if waypoints.is_empty() {
            return Err("mission has no waypoints");
        }
        *self = Mission {
            id,
            waypoints,
            state: MissionState::Active,
            current_target: 0,
            phase: Phase::Driving,
            origin,
        };
        Ok(())
    }

    pub fn target(&self) -> Option<&Waypoint> {
        self.waypoints.get(self.current_target)
    }

    /// The leg the ADS should follow, if it should be moving at all.
    pub fn leg(&self) -> Option<Leg> {
        if self.state != MissionState::Active || self.phase != Phase::Driving {
            return None;
        }
        self.target().map(|w| Leg { from: self.origin, to: Point2::new(w.x, w.y) })
    }

    fn set_state(&mut self, to: MissionState, events: &mut Vec<MissionEvent>) {
        debug_assert!(self.state.may_transition_to(to), "{:?} -> {:?}", self.state, to);
        events.push(MissionEvent::StateChanged { from: self.state, to });
        self.state = to;
    }

    pub fn update(
        &mut self,
        pose: &VehiclePose,
        mode: DrivingMode,
        door: &mut DoorState,
        now_ms: u64,
        reach_tolerance: f64,
        dwell_ms: u64,
    ) -> Vec<MissionEvent> {
        let mut events = Vec::new();
        let es = mode == DrivingMode::EmergencyStop;
        match self.state {
            MissionState::Active if es => self.set_state(MissionState::Blocked, &mut events),
            MissionState::Blocked if !es => self.set_state(MissionState::Active, &mut events),
            _ => {}
        }
        if self.state != MissionState::Active {
            return events;
        }
        let Some(target) = self.target().cloned() else {
            return events;
        };
        match self.phase {
            Phase::Driving => {
                if pose.position().dist(Point2::new(target.x, target.y)) <= reach_tolerance {
                    self.phase = Phase::Stopping;
                    events.push(MissionEvent::Arrived { index: self.current_target, name: target.name });
                }
            }
            Phase::Stopping => {
                if pose.speed == 0.0 {
                    *door = DoorState::Open;
                    self.phase = Phase::Dwelling { since_ms: now_ms };
                }
            }
            Phase::Dwelling { since_ms } => {
                if now_ms.saturating_sub(since_ms) >= dwell_ms {
                    *door = DoorState::Closed;
                    events.push(MissionEvent::DeliveryCompleted { index: self.current_target, name: target.name });
                    self.origin = Point2::new(target.x, target.y);
                    self.current_target += 1;
                    self.phase = Phase::Driving;
                    if self.current_target >= self.waypoints.len() {
                        self.set_state(MissionState::Completed, &mut events);
                    }
                }
            }
        }
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(name: &str, x: f64) -> Waypoint {
        Waypoint { name: name.into(), x, y: 0.0 }
    }

    #[test]
    fn unassigned_stays_inactive() {
        let mut m = Mission::default();
        let mut door = DoorState::Closed;
        for t in 0..100 {
            assert!(m.update(&VehiclePose::default(), DrivingMode::EmergencyStop, &mut door, t * 50, 0.5, 3000).is_empty());
        }
        assert_eq!(m.state, MissionState::Inactive);
    }

    #[test]
    fn emergency_blocks_and_release_resumes() {
        let mut m = Mission::default();
        m.assign("m".into(), vec![wp("A", 10.0)], Point2::origin()).unwrap();
        let mut door = DoorState::Closed;
        let p = VehiclePose::default();
        m.update(&p, DrivingMode::EmergencyStop, &mut door, 0, 0.5, 3000);
        assert_eq!(m.state, MissionState::Blocked);
        assert!(m.leg().is_none());
        m.update(&p, DrivingMode::Lad, &mut door, 50, 0.5, 3000);
        assert_eq!(m.state, MissionState::Active);
    }

    #[test]
    fn door_cycle_then_completed() {
        let mut m = Mission::default();
        m.assign("m".into(), vec![wp("A", 0.2)], Point2::origin()).unwrap();
        let mut door = DoorState::Closed;
        let p = VehiclePose::default();
        m.update(&p, DrivingMode::Fad, &mut door, 0, 0.5, 3000);
        assert_eq!(m.phase, Phase::Stopping);
        m.update(&p, DrivingMode::Fad, &mut door, 50, 0.5, 3000);
        assert_eq!(door, DoorState::Open);
        m.update(&p, DrivingMode::Fad, &mut door, 3000, 0.5, 3000);
        assert_eq!(m.state, MissionState::Active);
        let ev = m.update(&p, DrivingMode::Fad, &mut door, 3050, 0.5, 3000);
        assert_eq!(door, DoorState::Closed);
        assert_eq!(m.state, MissionState::Completed);
        assert!(ev.contains(&MissionEvent::StateChanged { from: MissionState::Active, to: MissionState::Completed }));
        assert_eq!(m.assign("n".into(), vec![wp("B", 1.0)], Point2::origin()), Err("mission already assigned"));
    }
}
