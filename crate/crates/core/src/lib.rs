//! Onboard runtime monitors of the dependability cage.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`, which is what the runtime and the wire format use.

pub mod camera;
pub mod geometry;
pub mod lidar;
pub mod mode;
pub mod safe_zone;
pub mod scalar;
pub mod snapshot;
pub mod state;

pub use scalar::Scalar;

pub type Point2 = geometry::Point2<f64>;
pub type Point3 = lidar::Point3<f64>;
pub type VehicleGeometry = safe_zone::VehicleGeometry<f64>;
pub type ZoneParams = safe_zone::ZoneParams<f64>;
pub type ZonePolygon = safe_zone::ZonePolygon<f64>;
pub type LidarScan = lidar::LidarScan<f64>;
pub type FilterConfig = lidar::FilterConfig<f64>;
pub type LidarVerdict = lidar::LidarVerdict<f64>;
pub type ModeCaps = mode::ModeCaps<f64>;
pub type ModeInputs = mode::ModeInputs<f64>;
pub type ModeDecision = mode::ModeDecision<f64>;
pub type ActuationCommand = state::ActuationCommand<f64>;
pub type VehiclePose = snapshot::VehiclePose<f64>;
pub type SensorSnapshot = snapshot::SensorSnapshot<f64>;
