//! Planar primitives used by the zone and obstacle code.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Self) -> T {
        self.sub(o).norm()
    }

    /// Rotates counterclockwise by `angle` about `center`.
    pub fn rotate_about(self, center: Self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let d = self.sub(center);
        Self::new(center.x + d.x * c - d.y * s, center.y + d.x * s + d.y * c)
    }

    /// Maps a point from a frame located at `origin` with heading `heading`
    /// into the parent frame.
    pub fn to_parent(self, origin: Self, heading: T) -> Self {
        let (s, c) = heading.sin_cos();
        Self::new(origin.x + self.x * c - self.y * s, origin.y + self.x * s + self.y * c)
    }

    /// Inverse of [`Point2::to_parent`].
    pub fn to_local(self, origin: Self, heading: T) -> Self {
        let (s, c) = heading.sin_cos();
        let d = self.sub(origin);
        Self::new(d.x * c + d.y * s, -d.x * s + d.y * c)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Twice the signed area; positive for counterclockwise rings.
pub fn signed_area2<T: Scalar>(ring: &[Point2<T>]) -> T {
    let n = ring.len();
    let mut acc = T::zero();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.cross(b);
    }
    acc
}

pub fn is_ccw<T: Scalar>(ring: &[Point2<T>]) -> bool {
    signed_area2(ring) > T::zero()
}

/// Area centroid of a simple ring.
pub fn centroid<T: Scalar>(ring: &[Point2<T>]) -> Point2<T> {
    let n = ring.len();
    let mut cx = T::zero();
    let mut cy = T::zero();
    let mut a2 = T::zero();
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    let k = T::lit(3.0) * a2;
    Point2::new(cx / k, cy / k)
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance<T: Scalar>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == T::zero() {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).max(T::zero()).min(T::one());
    p.dist(a.add(ab.scale(t)))
}

/// Intersection point of two closed segments, if they cross at a single point.
pub fn segment_intersection<T: Scalar>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
) -> Option<Point2<T>> {
    let r = b.sub(a);
    let s = d.sub(c);
    let denom = r.cross(s);
    if denom == T::zero() {
        return None;
    }
    let qp = c.sub(a);
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let zero = T::zero();
    let one = T::one();
    if t >= zero && t <= one && u >= zero && u <= one {
        Some(a.add(r.scale(t)))
    } else {
        None
    }
}

fn segments_touch<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>, d: Point2<T>) -> bool {
    fn orient<T: Scalar>(p: Point2<T>, q: Point2<T>, r: Point2<T>) -> T {
        q.sub(p).cross(r.sub(p))
    }
    fn on_seg<T: Scalar>(p: Point2<T>, q: Point2<T>, r: Point2<T>) -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    }
    let z = T::zero();
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    (d1 == z && on_seg(c, d, a))
        || (d2 == z && on_seg(c, d, b))
        || (d3 == z && on_seg(a, b, c))
        || (d4 == z && on_seg(a, b, d))
}

/// True if no two non-adjacent edges of the ring touch.
pub fn is_simple<T: Scalar>(ring: &[Point2<T>]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let c = ring[j];
            let d = ring[(j + 1) % n];
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Winding-number containment; points within `tol` of an edge count as inside.
pub fn ring_contains<T: Scalar>(ring: &[Point2<T>], p: Point2<T>, tol: T) -> bool {
    let n = ring.len();
    let mut winding: i32 = 0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if point_segment_distance(p, a, b) <= tol {
            return true;
        }
        let side = b.sub(a).cross(p.sub(a));
        if a.y <= p.y {
            if b.y > p.y && side > T::zero() {
                winding += 1;
            }
        } else if b.y <= p.y && side < T::zero() {
            winding -= 1;
        }
    }
    winding != 0
}

/// Minimum distance between the boundaries-or-interiors of two simple rings.
/// Zero when they overlap.
pub fn ring_distance<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> T {
    if a.iter().any(|&p| ring_contains(b, p, T::zero()))
        || b.iter().any(|&p| ring_contains(a, p, T::zero()))
    {
        return T::zero();
    }
    let mut best = T::infinity();
    for i in 0..a.len() {
        let (p, q) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (r, s) = (b[j], b[(j + 1) % b.len()]);
            if segments_touch(p, q, r, s) {
                return T::zero();
            }
            best = best
                .min(point_segment_distance(p, r, s))
                .min(point_segment_distance(q, r, s))
                .min(point_segment_distance(r, p, q))
                .min(point_segment_distance(s, p, q));
        }
    }
    best
}

/// Distance along the ray `origin + t·dir` (unit `dir`) to the first crossing
/// of the closed segment `a`–`b`.
pub fn ray_segment_hit<T: Scalar>(origin: Point2<T>, dir: Point2<T>, a: Point2<T>, b: Point2<T>) -> Option<T> {
    let s = b.sub(a);
    let denom = dir.cross(s);
    if denom == T::zero() {
        return None;
    }
    let qp = a.sub(origin);
    let t = qp.cross(s) / denom;
    let u = qp.cross(dir) / denom;
    if t >= T::zero() && u >= T::zero() && u <= T::one() {
        Some(t)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point2<f64>> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn square_basics() {
        let sq = square();
        assert!(is_ccw(&sq));
        assert!(is_simple(&sq));
        assert_eq!(signed_area2(&sq), 2.0);
        let c = centroid(&sq);
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(!is_simple(&bow));
    }

    #[test]
    fn containment_includes_boundary() {
        let sq = square();
        assert!(ring_contains(&sq, Point2::new(0.5, 0.5), 0.0));
        assert!(ring_contains(&sq, Point2::new(1.0, 0.5), 1e-12));
        assert!(ring_contains(&sq, Point2::new(0.0, 0.0), 1e-12));
        assert!(!ring_contains(&sq, Point2::new(1.5, 0.5), 1e-12));
    }

    #[test]
    fn ring_distance_of_separated_squares() {
        let a = square();
        let b: Vec<_> = square().into_iter().map(|p| p.add(Point2::new(3.0, 0.0))).collect();
        assert!((ring_distance(&a, &b) - 2.0).abs() < 1e-12);
        assert_eq!(ring_distance(&a, &a), 0.0);
    }

    #[test]
    fn ray_hits_wall() {
        let t = ray_segment_hit(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(5.0, -1.0),
            Point2::new(5.0, 1.0),
        );
        assert_eq!(t, Some(5.0));
    }

    #[test]
    fn frame_round_trip_f32() {
        let p = Point2::new(1.0f32, 2.0);
        let o = Point2::new(-3.0f32, 0.5);
        let q = p.to_parent(o, 0.7).to_local(o, 0.7);
        assert!((q.x - p.x).abs() < 1e-5 && (q.y - p.y).abs() < 1e-5);
    }
}
