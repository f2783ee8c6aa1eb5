//! Waypoint-following stand-in for the automated driving system.

use serde::{Deserialize, Serialize};

use dcage_core::{ActuationCommand, Point2, VehiclePose};

use crate::vehicle::{Controls, Dynamics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdsConfig {
    pub lookahead: f64,
    pub reach_tolerance: f64,
    /// Deceleration used to plan the approach to a stop.
    pub approach_decel: f64,
    /// Speed kept until the stop tolerance is reached.
    pub creep_speed: f64,
}

impl Default for AdsConfig {
    fn default() -> Self {
        Self { lookahead: 2.0, reach_tolerance: 0.5, approach_decel: 1.0, creep_speed: 0.3 }
    }
}

impl AdsConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (field, v) in [
            ("lookahead", self.lookahead),
            ("reach_tolerance", self.reach_tolerance),
            ("approach_decel", self.approach_decel),
            ("creep_speed", self.creep_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((field, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// A straight leg ending in a stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub from: Point2,
    pub to: Point2,
}

/// Point on the leg `lookahead` metres past the projection of `pos`,
/// clamped to the leg end.
fn lookahead_point(pos: Point2, leg: &Leg, lookahead: f64) -> Point2 {
    let seg = leg.to.sub(leg.from);
    let len = seg.norm();
    if len == 0.0 || pos.dist(leg.to) <= lookahead {
        return leg.to;
    }
    let u = seg.scale(1.0 / len);
    let s = pos.sub(leg.from).dot(u).clamp(0.0, len);
    let foot = leg.from.add(u.scale(s));
    let off = pos.dist(foot);
    // Walk along the leg so the chord to the goal point is about `lookahead`.
    let ahead = (lookahead * lookahead - off * off).max(0.0).sqrt();
    leg.from.add(u.scale((s + ahead).min(len)))
}

/// Pure-pursuit steering angle towards `goal`, unclamped.
pub fn pursuit_steering(pose: &VehiclePose, goal: Point2, wheelbase: f64) -> f64 {
    let local = pose.to_vehicle(goal);
    let ld = local.norm();
    if ld < 1e-9 {
        return 0.0;
    }
    let alpha = local.y.atan2(local.x);
    (2.0 * wheelbase * alpha.sin() / ld).atan()
}

pub fn ads_step(
    pose: &VehiclePose,
    leg: Option<&Leg>,
    caps: &ActuationCommand,
    cfg: &AdsConfig,
    wheelbase: f64,
    dynamics: &Dynamics,
    dt: f64,
) -> Controls {
    let (target_speed, target_steering) = match leg {
        Some(leg) => {
            let pos = pose.position();
            let goal = lookahead_point(pos, leg, cfg.lookahead);
            let steering = pursuit_steering(pose, goal, wheelbase).clamp(-dynamics.steering_max, dynamics.steering_max);
            let remaining = pos.dist(leg.to);
            let planned = (2.0 * cfg.approach_decel * remaining).sqrt().max(cfg.creep_speed);
            (planned.min(caps.speed_cap), steering)
        }
        None => (0.0, pose.steering),
    };
    track(pose, target_speed, target_steering, dynamics, dt)
}

/// Controls that move speed and steering towards the targets as fast as the
/// dynamics allow.
pub fn track(pose: &VehiclePose, speed: f64, steering: f64, dynamics: &Dynamics, dt: f64) -> Controls {
    Controls {
        accel: ((speed - pose.speed) / dt).clamp(-dynamics.brake_decel, dynamics.accel_max),
        steering_rate: ((steering - pose.steering) / dt).clamp(-dynamics.steering_rate_max, dynamics.steering_rate_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_target_needs_no_steering() {
        let pose = VehiclePose::default();
        assert!(pursuit_steering(&pose, Point2::new(2.0, 0.0), 2.0).abs() < 1e-12);
    }

    #[test]
    fn left_target_steers_left() {
        let pose = VehiclePose::default();
        assert!(pursuit_steering(&pose, Point2::new(0.0, 2.0), 2.0) > 0.0);
        assert!(pursuit_steering(&pose, Point2::new(0.0, -2.0), 2.0) < 0.0);
    }

    #[test]
    fn lookahead_clamps_to_goal() {
        let leg = Leg { from: Point2::new(0.0, 0.0), to: Point2::new(10.0, 0.0) };
        assert_eq!(lookahead_point(Point2::new(9.0, 0.0), &leg, 2.0), leg.to);
        let p = lookahead_point(Point2::new(2.0, 0.0), &leg, 2.0);
        assert!((p.x - 4.0).abs() < 1e-12);
    }
}
