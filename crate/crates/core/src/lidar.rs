//! LiDAR occupancy check for the safe zone.
//!
//! Points outside the height band are dropped as ground or overhead
//! background, the remainder is projected to the ground plane and grouped by
//! distance; groups smaller than `cluster_min_pts` are ghost returns.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::safe_zone::ZonePolygon;
use crate::scalar::Scalar;
use crate::state::CageState;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan<T> {
    pub points: Vec<Point3<T>>,
    /// Milliseconds since scenario start.
    pub timestamp: u64,
    pub seq: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid filter config {field}: {reason}")]
pub struct FilterConfigError {
    pub field: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig<T> {
    pub z_min: T,
    pub z_max: T,
    pub cluster_eps: T,
    pub cluster_min_pts: usize,
}

impl<T: Scalar> Default for FilterConfig<T> {
    fn default() -> Self {
        Self {
            z_min: T::lit(0.10),
            z_max: T::lit(2.50),
            cluster_eps: T::lit(0.30),
            cluster_min_pts: 3,
        }
    }
}

impl<T: Scalar> FilterConfig<T> {
    pub fn validate(&self) -> Result<(), FilterConfigError> {
        if !(self.z_min < self.z_max) {
            return Err(FilterConfigError {
                field: "z_min",
                reason: format!("must be below z_max ({}), got {}", self.z_max, self.z_min),
            });
        }
        if !(self.cluster_eps > T::zero()) || !self.cluster_eps.is_finite() {
            return Err(FilterConfigError {
                field: "cluster_eps",
                reason: format!("must be > 0, got {}", self.cluster_eps),
            });
        }
        if self.cluster_min_pts < 1 {
            return Err(FilterConfigError {
                field: "cluster_min_pts",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarVerdict<T> {
    pub cage_state: CageState,
    pub offending_points: Vec<Point2<T>>,
    pub nearest_obstacle_distance: Option<T>,
    pub scan_seq: u64,
}

impl<T: Scalar> LidarVerdict<T> {
    pub fn is_free(&self) -> bool {
        self.cage_state.is_free()
    }
}

/// Keeps points with `z_min <= z <= z_max`, preserving order.
pub fn z_cutoff<T: Scalar>(scan: &LidarScan<T>, cfg: &FilterConfig<T>) -> LidarScan<T> {
    LidarScan {
        points: scan
            .points
            .iter()
            .copied()
            .filter(|p| p.z >= cfg.z_min && p.z <= cfg.z_max)
            .collect(),
        timestamp: scan.timestamp,
        seq: scan.seq,
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins so the result does not depend on visit order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Index groups of points connected through chains of neighbours at most
/// `cluster_eps` apart, keeping only groups of at least `cluster_min_pts`.
/// Groups are ordered by their smallest index; members ascend.
pub fn cluster_indices<T: Scalar>(points: &[Point2<T>], cfg: &FilterConfig<T>) -> Vec<Vec<usize>> {
    let eps = cfg.cluster_eps;
    let eps2 = eps * eps;
    let cell = |p: &Point2<T>| -> (i64, i64) {
        (
            (p.x / eps).floor().to_i64().unwrap_or(i64::MAX),
            (p.y / eps).floor().to_i64().unwrap_or(i64::MAX),
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let mut sets = DisjointSet::new(points.len());
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx.saturating_add(dx), cy.saturating_add(dy))) else {
                    continue;
                };
                for &j in bucket {
                    if j > i {
                        let d = p.sub(points[j]);
                        if d.dot(d) <= eps2 {
                            sets.union(i, j);
                        }
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..points.len() {
        let root = sets.find(i);
        let k = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(i);
    }
    groups.retain(|g| g.len() >= cfg.cluster_min_pts);
    groups
}

pub fn cluster<T: Scalar>(points: &[Point2<T>], cfg: &FilterConfig<T>) -> Vec<Vec<Point2<T>>> {
    cluster_indices(points, cfg)
        .into_iter()
        .map(|g| g.into_iter().map(|i| points[i]).collect())
        .collect()
}

/// Height filter, clustering, then zone containment of clustered points.
pub fn evaluate<T: Scalar>(
    scan: &LidarScan<T>,
    zone: &ZonePolygon<T>,
    cfg: &FilterConfig<T>,
) -> LidarVerdict<T> {
    let kept = z_cutoff(scan, cfg);
    let flat: Vec<Point2<T>> = kept.points.iter().map(|p| p.xy()).collect();
    let mut clustered: Vec<usize> = cluster_indices(&flat, cfg).into_iter().flatten().collect();
    clustered.sort_unstable();
    let offending: Vec<Point2<T>> = clustered
        .into_iter()
        .map(|i| flat[i])
        .filter(|&p| zone.contains(p))
        .collect();
    let nearest = offending
        .iter()
        .map(|p| p.dist(zone.front_reference))
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))));
    LidarVerdict {
        cage_state: if offending.is_empty() {
            CageState::Free
        } else {
            CageState::Occupied
        },
        offending_points: offending,
        nearest_obstacle_distance: nearest,
        scan_seq: scan.seq,
    }
}
