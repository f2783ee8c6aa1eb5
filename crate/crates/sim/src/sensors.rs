//! Synthetic LiDAR and camera data.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use dcage_core::camera::{CameraFrame, CameraId};
use dcage_core::geometry;
use dcage_core::{LidarScan, Point2, Point3, VehicleGeometry, VehiclePose};

use crate::faults::GhostFault;
use crate::world::WorldModel;

/// Heights at which a beam hitting an obstacle returns points.
pub const HIT_HEIGHTS: [f64; 3] = [0.3, 0.6, 0.9];

/// Minimum spacing between an injected ghost and any other non-ground point.
const GHOST_SPACING: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub n_beams: usize,
    /// Total horizontal field of view, rad, centered on the heading.
    pub fov: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self { n_beams: 360, fov: PI, max_range: 30.0 }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.n_beams < 1 {
            return Err(("n_beams", "must be >= 1".into()));
        }
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI) {
            return Err(("fov", format!("must be in (0, 2pi], got {}", self.fov)));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(("max_range", format!("must be > 0, got {}", self.max_range)));
        }
        Ok(())
    }

    /// Beam angle relative to the heading; beam `n/2` points straight ahead.
    pub fn beam_angle(&self, i: usize) -> f64 {
        -self.fov / 2.0 + self.fov * i as f64 / self.n_beams as f64
    }
}

/// Nearest hit of a world-frame ray against all obstacle edges, with the
/// height of the obstacle that was hit.
pub fn cast_ray(world: &WorldModel, origin: Point2, dir: Point2, max_range: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for o in &world.obstacles {
        let ring = o.ring();
        for i in 0..ring.len() {
            if let Some(t) = geometry::ray_segment_hit(origin, dir, ring[i], ring[(i + 1) % ring.len()]) {
                if t <= max_range && best.is_none_or(|(b, _)| t < b) {
                    best = Some((t, o.height));
                }
            }
        }
    }
    best
}

/// Scan from a sensor at the front-bumper midpoint. Points are returned in
/// the vehicle frame.
#[allow(clippy::too_many_arguments)]
pub fn raycast_lidar<R: Rng>(
    world: &WorldModel,
    pose: &VehiclePose,
    geom: &VehicleGeometry,
    cfg: &LidarConfig,
    ghosts: &[GhostFault],
    t: u64,
    seq: u64,
    rng: &mut R,
) -> LidarScan {
    let mount = geom.front_bumper_mid();
    let origin = pose.to_world(mount);
    let mut points = Vec::with_capacity(cfg.n_beams * 4);
    for i in 0..cfg.n_beams {
        let a = cfg.beam_angle(i);
        let world_angle = pose.heading + a;
        let dir = Point2::new(world_angle.cos(), world_angle.sin());
        let local_dir = Point2::new(a.cos(), a.sin());
        let hit = cast_ray(world, origin, dir, cfg.max_range);
        let ground_range = 1.5 + 0.5 * (i % 4) as f64;
        if hit.is_none_or(|(r, _)| ground_range < r) {
            let p = mount.add(local_dir.scale(ground_range));
            points.push(Point3::new(p.x, p.y, rng.random_range(-0.02..=0.02)));
        }
        if let Some((r, height)) = hit {
            let p = mount.add(local_dir.scale(r));
            let mut any = false;
            for z in HIT_HEIGHTS.into_iter().filter(|&z| z <= height) {
                points.push(Point3::new(p.x, p.y, z));
                any = true;
            }
            if !any {
                points.push(Point3::new(p.x, p.y, height / 2.0));
            }
        }
    }
    for g in ghosts {
        inject_ghosts(&mut points, g, rng);
    }
    LidarScan { points, timestamp: t, seq }
}

/// Appends exactly `g.count` points inside the region, spaced away from
/// every non-ground point where the region leaves room for it.
fn inject_ghosts<R: Rng>(points: &mut Vec<Point3>, g: &GhostFault, rng: &mut R) {
    let r = g.region;
    for _ in 0..g.count {
        let mut candidate = Point3::new(r.x_min, r.y_min, 1.0);
        for _ in 0..200 {
            candidate = Point3::new(
                rng.random_range(r.x_min..r.x_max),
                rng.random_range(r.y_min..r.y_max),
                rng.random_range(0.3..1.5),
            );
            let clear = points
                .iter()
                .filter(|p| p.z > 0.05)
                .all(|p| p.xy().dist(candidate.xy()) > GHOST_SPACING);
            if clear {
                break;
            }
        }
        points.push(candidate);
    }
}

pub const FRAME_WIDTH: u32 = 32;
pub const FRAME_HEIGHT: u32 = 24;

/// A mid-grey test pattern that shifts with every frame.
pub fn synth_frame(camera_id: CameraId, seq: u64, t: u64) -> CameraFrame {
    let offset = match camera_id {
        CameraId::Front => 0,
        CameraId::Back => 17,
    };
    let mut pixels = Vec::with_capacity((FRAME_WIDTH * FRAME_HEIGHT) as usize);
    for y in 0..FRAME_HEIGHT as u64 {
        for x in 0..FRAME_WIDTH as u64 {
            pixels.push((96 + (x * 7 + y * 13 + seq * 5 + offset) % 64) as u8);
        }
    }
    CameraFrame { width: FRAME_WIDTH, height: FRAME_HEIGHT, pixels, timestamp: t, seq, camera_id }
}
