use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use dcage_core::geometry;
use dcage_core::state::Waypoint;
use dcage_core::Point2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub name: String,
    /// Footprint corners in the world frame, either orientation.
    pub polygon: Vec<[f64; 2]>,
    pub height: f64,
}

impl Obstacle {
    pub fn ring(&self) -> Vec<Point2> {
        self.polygon.iter().map(|&[x, y]| Point2::new(x, y)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldModel {
    pub obstacles: Vec<Obstacle>,
    pub delivery_points: Vec<Waypoint>,
    /// Names of delivery points in driving order.
    pub route: Vec<String>,
}

impl WorldModel {
    pub fn point(&self, name: &str) -> Option<&Waypoint> {
        self.delivery_points.iter().find(|p| p.name == name)
    }

    /// On failure returns the offending key (relative to the world section)
    /// and the reason.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let mut names = BTreeSet::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            let ring = o.ring();
            if ring.iter().any(|p| !p.is_finite()) || !geometry::is_simple(&ring) {
                return Err((format!("obstacles[{i}].polygon"), format!("obstacle {:?} is not a simple polygon", o.name)));
            }
            if !(o.height > 0.0) {
                return Err((format!("obstacles[{i}].height"), format!("must be > 0, got {}", o.height)));
            }
            if !names.insert(o.name.as_str()) {
                return Err((format!("obstacles[{i}].name"), format!("duplicate name {:?}", o.name)));
            }
        }
        let mut points = BTreeSet::new();
        for (i, p) in self.delivery_points.iter().enumerate() {
            if !points.insert(p.name.as_str()) {
                return Err((format!("delivery_points[{i}].name"), format!("duplicate name {:?}", p.name)));
            }
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err((format!("delivery_points[{i}]"), "coordinates must be finite".into()));
            }
        }
        for (i, r) in self.route.iter().enumerate() {
            if !points.contains(r.as_str()) {
                return Err((format!("route[{i}]"), format!("unknown delivery point {r:?}")));
            }
        }
        Ok(())
    }
}
