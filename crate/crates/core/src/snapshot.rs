//! What the cage sees of the vehicle at the start of a tick.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraFrame, CameraId};
use crate::geometry::Point2;
use crate::lidar::LidarScan;
use crate::scalar::Scalar;
use crate::state::{DoorState, MissionState};

/// Rear-axle pose in the world frame plus the longitudinal state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehiclePose<T> {
    pub x: T,
    pub y: T,
    pub heading: T,
    pub speed: T,
    pub steering: T,
}

impl<T: Scalar> VehiclePose<T> {
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    /// Maps a vehicle-frame point into the world frame.
    pub fn to_world(&self, p: Point2<T>) -> Point2<T> {
        p.to_parent(self.position(), self.heading)
    }

    pub fn to_vehicle(&self, p: Point2<T>) -> Point2<T> {
        p.to_local(self.position(), self.heading)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSnapshot<T> {
    pub pose: VehiclePose<T>,
    pub lidar: Option<LidarScan<T>>,
    pub cameras: Vec<CameraFrame>,
    pub door_state: DoorState,
    /// Time of the latest door telemetry, ms.
    pub door_timestamp: u64,
    /// Mission state as reported by the ADS.
    pub mission_state: MissionState,
    /// Index of the delivery point the ADS is heading for.
    pub mission_target: Option<usize>,
    pub clock: u64,
}

impl<T> SensorSnapshot<T> {
    pub fn camera(&self, id: CameraId) -> Option<&CameraFrame> {
        self.cameras.iter().find(|f| f.camera_id == id)
    }
}
