//! Hazard-free area around the vehicle.
//!
//! The zone is the vehicle footprint, widened by a lateral margin, swept along
//! the kinematic-bicycle path implied by the current steering angle for the
//! stopping distance plus a front margin. All coordinates are in the vehicle
//! frame: origin at the rear-axle center, x forward, y left.
//!
//! On a curved path the sweep is discretized into poses rotated about the
//! turn center in steps of `arc_step` (measured along the rear-axle path) and
//! the sweep length is rounded up to a whole number of steps. The polygon is
//! the exact boundary of the union of the convex hulls of consecutive poses,
//! computed as a polar envelope around the turn center, so zones for a longer sweep or a wider
//! footprint always contain the shorter/narrower ones. A sweep that closes a
//! full revolution is bounded by a polygon circumscribing the reachable disk.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Point2};
use crate::scalar::Scalar;
use crate::state::DrivingMode;

/// Below this steering magnitude the path is treated as straight.
pub const STRAIGHT_STEERING_THRESHOLD: f64 = 1e-3;

/// Upper bound on the angular step between discretized poses.
const MAX_POSE_ANGLE_STEP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZoneError {
    #[error("speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("steering angle {0} rad outside the open interval (-pi/2, pi/2)")]
    SteeringOutOfRange(f64),
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

fn require<T: Scalar>(ok: bool, field: &'static str, value: T, rule: &str) -> Result<(), ZoneError> {
    if ok {
        Ok(())
    } else {
        Err(ZoneError::InvalidConfig {
            field,
            reason: format!("{rule}, got {value}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleGeometry<T> {
    pub wheelbase: T,
    pub width: T,
    /// Front axle to front bumper.
    pub front_overhang: T,
    /// Rear axle to rear bumper.
    pub rear_overhang: T,
}

impl<T: Scalar> Default for VehicleGeometry<T> {
    fn default() -> Self {
        Self {
            wheelbase: T::lit(2.0),
            width: T::lit(1.2),
            front_overhang: T::lit(0.5),
            rear_overhang: T::lit(0.5),
        }
    }
}

impl<T: Scalar> VehicleGeometry<T> {
    pub fn validate(&self) -> Result<(), ZoneError> {
        let finite_pos = |v: T| v.is_finite() && v > T::zero();
        require(
            finite_pos(self.wheelbase) && self.wheelbase > T::lit(0.1),
            "wheelbase",
            self.wheelbase,
            "must be > 0.1 m",
        )?;
        require(finite_pos(self.width), "width", self.width, "must be > 0")?;
        require(
            finite_pos(self.front_overhang),
            "front_overhang",
            self.front_overhang,
            "must be > 0",
        )?;
        require(
            finite_pos(self.rear_overhang),
            "rear_overhang",
            self.rear_overhang,
            "must be > 0",
        )
    }

    /// x coordinate of the front bumper.
    pub fn front_x(&self) -> T {
        self.wheelbase + self.front_overhang
    }

    pub fn front_bumper_mid(&self) -> Point2<T> {
        Point2::new(self.front_x(), T::zero())
    }

    /// Footprint rectangle, counterclockwise from the rear-right corner.
    pub fn footprint(&self) -> [Point2<T>; 4] {
        rect(-self.rear_overhang, self.front_x(), self.width / T::lit(2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneParams<T> {
    pub decel_max: T,
    pub react_time: T,
    pub front_margin: T,
    pub lat_margin: T,
    pub speed_cap: T,
    pub arc_step: T,
}

impl<T: Scalar> ZoneParams<T> {
    /// Defaults for fully autonomous driving.
    pub fn fad() -> Self {
        Self {
            decel_max: T::lit(2.0),
            react_time: T::lit(0.2),
            front_margin: T::lit(1.0),
            lat_margin: T::lit(0.3),
            speed_cap: T::lit(3.0),
            arc_step: T::lit(0.25),
        }
    }

    /// Defaults for limited autonomous driving: narrower zone, lower speed.
    pub fn lad() -> Self {
        Self {
            lat_margin: T::lit(0.15),
            speed_cap: T::lit(1.0),
            ..Self::fad()
        }
    }

    pub fn validate(&self) -> Result<(), ZoneError> {
        let pos = |v: T| v.is_finite() && v > T::zero();
        require(pos(self.decel_max), "decel_max", self.decel_max, "must be > 0")?;
        require(pos(self.react_time), "react_time", self.react_time, "must be > 0")?;
        require(pos(self.front_margin), "front_margin", self.front_margin, "must be > 0")?;
        require(pos(self.lat_margin), "lat_margin", self.lat_margin, "must be > 0")?;
        require(pos(self.speed_cap), "speed_cap", self.speed_cap, "must be > 0")?;
        require(
            pos(self.arc_step) && self.arc_step <= T::lit(0.5),
            "arc_step",
            self.arc_step,
            "must be in (0, 0.5] m",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePolygon<T> {
    /// Counterclockwise, simple.
    pub vertices: Vec<Point2<T>>,
    pub mode_label: DrivingMode,
    /// Front-bumper midpoint; obstacle distances are measured from here.
    pub front_reference: Point2<T>,
}

impl<T: Scalar> ZonePolygon<T> {
    /// Inside or on the boundary.
    pub fn contains(&self, p: Point2<T>) -> bool {
        geometry::ring_contains(&self.vertices, p, T::boundary_tol())
    }

    pub fn centroid(&self) -> Point2<T> {
        geometry::centroid(&self.vertices)
    }

    pub fn area(&self) -> T {
        geometry::signed_area2(&self.vertices) / T::lit(2.0)
    }
}

/// Inside or on the boundary of `zone`.
pub fn contains<T: Scalar>(zone: &ZonePolygon<T>, p: Point2<T>) -> bool {
    zone.contains(p)
}

/// Reaction distance plus constant-deceleration braking distance.
pub fn stopping_distance<T: Scalar>(speed: T, params: &ZoneParams<T>) -> Result<T, ZoneError> {
    if !(speed >= T::zero()) {
        return Err(ZoneError::NegativeSpeed(speed.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(speed * params.react_time + speed * speed / (T::lit(2.0) * params.decel_max))
}

pub fn compute_safe_zone<T: Scalar>(
    speed: T,
    steering_angle: T,
    geom: &VehicleGeometry<T>,
    params: &ZoneParams<T>,
    mode_label: DrivingMode,
) -> Result<ZonePolygon<T>, ZoneError> {
    geom.validate()?;
    params.validate()?;
    if !(steering_angle.abs() < T::FRAC_PI_2()) {
        return Err(ZoneError::SteeringOutOfRange(
            steering_angle.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let sweep = stopping_distance(speed, params)? + params.front_margin;
    let half_width = geom.width / T::lit(2.0) + params.lat_margin;
    let rear = -geom.rear_overhang;
    let front = geom.front_x();

    let vertices = if steering_angle.abs() < T::lit(STRAIGHT_STEERING_THRESHOLD) {
        rect(rear, front + sweep, half_width).to_vec()
    } else {
        let radius = geom.wheelbase / steering_angle.abs().tan();
        let left = curved_sweep(rear, front, half_width, radius, sweep, params.arc_step);
        if steering_angle > T::zero() {
            left
        } else {
            // Mirror about the x-axis; reversing restores counterclockwise order.
            left.into_iter().rev().map(|p| Point2::new(p.x, -p.y)).collect()
        }
    };

    Ok(ZonePolygon {
        vertices,
        mode_label,
        front_reference: geom.front_bumper_mid(),
    })
}

fn rect<T: Scalar>(x0: T, x1: T, half_width: T) -> [Point2<T>; 4] {
    [
        Point2::new(x0, -half_width),
        Point2::new(x1, -half_width),
        Point2::new(x1, half_width),
        Point2::new(x0, half_width),
    ]
}

/// Local polar frame around the turn center `(0, radius)` of a left turn.
/// Angles are measured from the downward direction towards +x, so a
/// counterclockwise rotation of the vehicle about the center increases them.
struct TurnFrame<T> {
    radius: T,
    /// Convex, counterclockwise shape swept about the center.
    cell: Vec<Point2<T>>,
}

impl<T: Scalar> TurnFrame<T> {
    fn center(&self) -> Point2<T> {
        Point2::new(T::zero(), self.radius)
    }

    fn dir(angle: T) -> Point2<T> {
        Point2::new(angle.sin(), -angle.cos())
    }

    fn angle_of(&self, p: Point2<T>) -> T {
        p.x.atan2(self.radius - p.y)
    }

    /// Entry and exit distances of the ray from the center at local angle
    /// `phi` through the unrotated cell (half-plane clipping).
    fn ray_interval(&self, phi: T) -> Option<(T, T)> {
        let d = Self::dir(phi);
        let c = self.center();
        let mut t_in = T::zero();
        let mut t_out = T::infinity();
        let n = self.cell.len();
        for i in 0..n {
            let a = self.cell[i];
            let e = self.cell[(i + 1) % n].sub(a);
            // Inside when cross(e, c + t·d − a) ≥ 0.
            let k = e.cross(c.sub(a));
            let m = e.cross(d);
            if m == T::zero() {
                if k < T::zero() {
                    return None;
                }
            } else if m > T::zero() {
                t_in = t_in.max(-k / m);
            } else {
                t_out = t_out.min(-k / m);
            }
        }
        let slack = T::lit(1e-9) * (T::one() + t_out.abs().min(T::lit(1e6)));
        if t_in <= t_out {
            Some((t_in, t_out))
        } else if t_in - t_out <= slack {
            let m = (t_in + t_out) / T::lit(2.0);
            Some((m, m))
        } else {
            None
        }
    }
}

/// Convex hull, counterclockwise, without collinear points.
fn convex_hull<T: Scalar>(mut pts: Vec<Point2<T>>) -> Vec<Point2<T>> {
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    let turn = |o: Point2<T>, a: Point2<T>, b: Point2<T>| a.sub(o).cross(b.sub(o));
    let mut lower: Vec<Point2<T>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= T::zero() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2<T>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= T::zero() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn curved_sweep<T: Scalar>(
    rear: T,
    front: T,
    half_width: T,
    radius: T,
    sweep: T,
    arc_step: T,
) -> Vec<Point2<T>> {
    let center = Point2::new(T::zero(), radius);
    let step = (arc_step / radius).min(T::lit(MAX_POSE_ANGLE_STEP));
    let n_steps = (sweep / (radius * step)).ceil().to_usize().unwrap_or(1).max(1);
    let angles: Vec<T> = (0..n_steps).map(|k| step * T::from_usize(k).unwrap()).collect();
    let total = step * T::from_usize(n_steps).unwrap();

    // Each cell is the hull of two consecutive poses, which covers the
    // motion between them up to the sagitta of the outermost corner.
    let base = rect(rear, front, half_width);
    let mut corners = base.to_vec();
    corners.extend(base.map(|p| p.rotate_about(center, step)));
    let frame = TurnFrame { radius, cell: convex_hull(corners) };
    let cells: Vec<Vec<Point2<T>>> = angles
        .iter()
        .map(|&a| frame.cell.iter().map(|p| p.rotate_about(center, a)).collect())
        .collect();

    let center_inside = radius < half_width;
    let phi_min = frame.cell.iter().map(|&p| frame.angle_of(p)).fold(T::infinity(), T::min);
    let phi_max = frame.cell.iter().map(|&p| frame.angle_of(p)).fold(T::neg_infinity(), T::max);
    let span = total + frame.angle_of(Point2::new(front, half_width)) - frame.angle_of(Point2::new(rear, half_width));
    if span >= T::TAU() - T::lit(1e-6) {
        // The sweep closes a full revolution; bound it by the disk reached by
        // the farthest footprint corner.
        let reach = base.iter().map(|p| p.dist(center)).fold(T::zero(), T::max);
        return enclosing_polygon(center, reach);
    }
    let fan = center_inside;

    // Candidate breakpoints: every cell vertex and every crossing between
    // edges of two different cells.
    let mut breaks: Vec<T> = Vec::new();
    let wrap = |a: T| -> T {
        let tau = T::TAU();
        let mut a = a % tau;
        if a < T::zero() {
            a += tau;
        }
        a
    };
    let angle_in_cell = |p: Point2<T>, k: usize| -> T {
        frame.angle_of(p.rotate_about(center, -angles[k])) + angles[k]
    };
    for (k, cell) in cells.iter().enumerate() {
        for &v in cell {
            let a = angle_in_cell(v, k);
            breaks.push(if fan { wrap(a) } else { a });
        }
    }
    for j in 0..cells.len() {
        for k in (j + 1)..cells.len() {
            if !fan && angles[k] + phi_min > angles[j] + phi_max {
                break;
            }
            let (cj, ck) = (&cells[j], &cells[k]);
            for e in 0..cj.len() {
                let (a, b) = (cj[e], cj[(e + 1) % cj.len()]);
                for f in 0..ck.len() {
                    let (c, d) = (ck[f], ck[(f + 1) % ck.len()]);
                    if let Some(q) = geometry::segment_intersection(a, b, c, d) {
                        let ang = angle_in_cell(q, j);
                        breaks.push(if fan { wrap(ang) } else { ang });
                    }
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-13));

    let envelope = |psi: T| -> Option<(T, T)> {
        let mut inner = T::infinity();
        let mut outer = T::neg_infinity();
        for &a in &angles {
            let phi = psi - a;
            if !fan {
                let tol = T::lit(1e-9);
                if phi < phi_min - tol || phi > phi_max + tol {
                    continue;
                }
            }
            if let Some((t_in, t_out)) = frame.ray_interval(phi) {
                inner = inner.min(t_in);
                outer = outer.max(t_out);
            }
        }
        (outer >= inner).then_some((inner, outer))
    };

    let mut ring: Vec<Point2<T>> = Vec::with_capacity(breaks.len() * 2);
    if fan {
        for &psi in &breaks {
            if let Some((_, outer)) = envelope(psi) {
                ring.push(center.add(TurnFrame::<T>::dir(psi).scale(outer)));
            }
        }
    } else {
        let mut inner_chain = Vec::with_capacity(breaks.len());
        for &psi in &breaks {
            if let Some((inner, outer)) = envelope(psi) {
                let d = TurnFrame::<T>::dir(psi);
                ring.push(center.add(d.scale(outer)));
                inner_chain.push(center.add(d.scale(inner)));
            }
        }
        ring.extend(inner_chain.into_iter().rev());
    }
    simplify_ring(ring)
}

/// Regular polygon circumscribing the circle of radius `reach` about `center`.
fn enclosing_polygon<T: Scalar>(center: Point2<T>, reach: T) -> Vec<Point2<T>> {
    const SIDES: usize = 64;
    let half = T::PI() / T::from_usize(SIDES).unwrap();
    let r = reach / half.cos();
    (0..SIDES)
        .map(|k| {
            let a = half * T::lit(2.0) * T::from_usize(k).unwrap();
            center.add(Point2::new(a.cos(), a.sin()).scale(r))
        })
        .collect()
}

/// Drops repeated and exactly collinear vertices.
fn simplify_ring<T: Scalar>(ring: Vec<Point2<T>>) -> Vec<Point2<T>> {
    let eps = T::lit(1e-12);
    let mut out: Vec<Point2<T>> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last().is_some_and(|q: &Point2<T>| q.dist(p) <= eps) {
            continue;
        }
        out.push(p);
    }
    while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= eps {
        out.pop();
    }
    let mut changed = true;
    while changed && out.len() > 3 {
        changed = false;
        let n = out.len();
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let prev = out[(i + n - 1) % n];
            let cur = out[i];
            let next = out[(i + 1) % n];
            let u = cur.sub(prev);
            let v = next.sub(cur);
            let collinear = u.cross(v).abs() <= eps * u.norm() * v.norm() && u.dot(v) > T::zero();
            if collinear {
                changed = true;
            } else {
                keep.push(cur);
            }
        }
        out = keep;
    }
    out
}
