//! Kinematic bicycle model.

use serde::{Deserialize, Serialize};

use dcage_core::state::Brake;
use dcage_core::{ActuationCommand, VehiclePose};

use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dynamics {
    pub accel_max: f64,
    /// Deceleration applied by a full brake.
    pub brake_decel: f64,
    pub steering_rate_max: f64,
    pub steering_max: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            accel_max: 1.0,
            brake_decel: 2.0,
            steering_rate_max: 0.8,
            steering_max: 0.6,
        }
    }
}

impl Dynamics {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (field, v) in [
            ("accel_max", self.accel_max),
            ("brake_decel", self.brake_decel),
            ("steering_rate_max", self.steering_rate_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((field, format!("must be > 0, got {v}")));
            }
        }
        if !(self.steering_max > 0.0 && self.steering_max <= 0.6) {
            return Err(("steering_max", format!("must be in (0, 0.6], got {}", self.steering_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Controls {
    pub accel: f64,
    pub steering_rate: f64,
}

/// Advances the pose by `dt` seconds. Position and heading integrate with the
/// speed and steering at the start of the step.
pub fn step_vehicle(
    pose: &VehiclePose,
    controls: Controls,
    caps: &ActuationCommand,
    wheelbase: f64,
    dynamics: &Dynamics,
    dt: f64,
) -> Result<VehiclePose, SimError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(SimError::InvalidStep(dt));
    }
    let v = pose.speed;
    let mut next = *pose;
    next.x += v * pose.heading.cos() * dt;
    next.y += v * pose.heading.sin() * dt;
    next.heading += v * pose.steering.tan() / wheelbase * dt;

    if !caps.steering_hold {
        let rate = controls
            .steering_rate
            .clamp(-dynamics.steering_rate_max, dynamics.steering_rate_max);
        next.steering = (pose.steering + rate * dt).clamp(-dynamics.steering_max, dynamics.steering_max);
    }

    next.speed = match caps.brake {
        Brake::Full => (v - dynamics.brake_decel * dt).max(0.0),
        Brake::None => {
            let a = controls.accel.clamp(-dynamics.brake_decel, dynamics.accel_max);
            (v + a * dt).clamp(0.0, caps.speed_cap.max(0.0))
        }
    };
    Ok(next)
}
