use dcage_core::geometry::Point2;
use dcage_core::lidar::{cluster, evaluate, z_cutoff, FilterConfig, LidarScan, Point3};
use dcage_core::safe_zone::{compute_safe_zone, VehicleGeometry, ZoneParams, ZonePolygon};
use dcage_core::state::{CageState, DrivingMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> FilterConfig<f64> {
    FilterConfig::default()
}

/// Component id of every point by repeated flood fill over the eps-graph.
fn components(points: &[Point2<f64>], eps: f64) -> Vec<usize> {
    let n = points.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if comp[j] == usize::MAX && points[i].dist(points[j]) <= eps {
                    comp[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

fn oracle_state(scan: &LidarScan<f64>, zone: &ZonePolygon<f64>, c: &FilterConfig<f64>) -> CageState {
    let kept: Vec<Point2<f64>> = scan
        .points
        .iter()
        .filter(|p| p.z >= c.z_min && p.z <= c.z_max)
        .map(|p| Point2::new(p.x, p.y))
        .collect();
    let comp = components(&kept, c.cluster_eps);
    let size = |k: usize| comp.iter().filter(|&&x| x == k).count();
    let hit = kept
        .iter()
        .zip(&comp)
        .any(|(p, &k)| size(k) >= c.cluster_min_pts && zone.contains(*p));
    if hit {
        CageState::Occupied
    } else {
        CageState::Free
    }
}

fn random_scan(rng: &mut ChaCha8Rng) -> LidarScan<f64> {
    let n = rng.random_range(0..=500);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        // Blobs of varying density plus uniform clutter.
        if rng.random_bool(0.3) {
            points.push(Point3::new(rng.random_range(-2.0..12.0), rng.random_range(-5.0..5.0), rng.random_range(-0.2..3.0)));
        } else {
            let (cx, cy) = (rng.random_range(-2.0..12.0), rng.random_range(-5.0..5.0));
            let spread = rng.random_range(0.05..0.6);
            for _ in 0..rng.random_range(1..8) {
                points.push(Point3::new(
                    cx + rng.random_range(-spread..spread),
                    cy + rng.random_range(-spread..spread),
                    rng.random_range(-0.2..3.0),
                ));
            }
        }
    }
    points.truncate(n);
    LidarScan { points, timestamp: 0, seq: 1 }
}

fn fad_zone(v: f64, d: f64) -> ZonePolygon<f64> {
    compute_safe_zone(v, d, &VehicleGeometry::default(), &ZoneParams::fad(), DrivingMode::Fad).unwrap()
}

#[test]
fn z_filter_matches_per_point_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<_> = (0..1000).map(|_| Point3::new(1.0, 0.0, rng.random_range(-1.0..4.0))).collect();
    let scan = LidarScan { points, timestamp: 5, seq: 9 };
    let c = cfg();
    let expected = scan.points.iter().filter(|p| p.z >= 0.10 && p.z <= 2.50).count();
    let out = z_cutoff(&scan, &c);
    assert_eq!(out.points.len(), expected);
    assert_eq!((out.timestamp, out.seq), (5, 9));
}

#[test]
fn clusters_match_transitive_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let pts: Vec<Point2<f64>> = (0..500)
            .map(|_| Point2::new(rng.random_range(0.0..8.0), rng.random_range(0.0..8.0)))
            .collect();
        let c = cfg();
        let comp = components(&pts, c.cluster_eps);
        let mut expected: Vec<Vec<Point2<f64>>> = Vec::new();
        for k in 0..=comp.iter().copied().max().unwrap_or(0) {
            let g: Vec<_> = pts.iter().zip(&comp).filter(|(_, &x)| x == k).map(|(p, _)| *p).collect();
            if g.len() >= c.cluster_min_pts {
                expected.push(g);
            }
        }
        let got = cluster(&pts, &c);
        let key = |g: &Vec<Point2<f64>>| {
            let mut v: Vec<(u64, u64)> = g.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
            v.sort();
            v
        };
        let mut a: Vec<_> = got.iter().map(key).collect();
        let mut b: Vec<_> = expected.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}

#[test]
fn cluster_ahead_is_reported_with_distance() {
    let zone = fad_zone(2.0, 0.0);
    let front = VehicleGeometry::<f64>::default().front_x();
    let points: Vec<_> = (0..10)
        .map(|i| Point3::new(front + 2.0, -0.2 + 0.05 * i as f64, 0.5))
        .collect();
    let v = evaluate(&LidarScan { points, timestamp: 0, seq: 3 }, &zone, &cfg());
    assert_eq!(v.cage_state, CageState::Occupied);
    assert_eq!(v.offending_points.len(), 10);
    let d = v.nearest_obstacle_distance.unwrap();
    assert!((d - 2.0).abs() < 1e-9, "{d}");
    assert_eq!(v.scan_seq, 3);
}

#[test]
fn cluster_outside_is_free() {
    let zone = fad_zone(2.0, 0.0);
    let points: Vec<_> = (0..10).map(|i| Point3::new(3.0 + 0.05 * i as f64, 3.0, 0.5)).collect();
    let v = evaluate(&LidarScan { points, timestamp: 0, seq: 1 }, &zone, &cfg());
    assert_eq!(v.cage_state, CageState::Free);
    assert!(v.nearest_obstacle_distance.is_none());
}

#[test]
fn randomized_scans_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let scan = random_scan(&mut rng);
        let zone = fad_zone(rng.random_range(0.0..3.0), rng.random_range(-0.6..0.6));
        let v = evaluate(&scan, &zone, &cfg());
        assert_eq!(v.cage_state, oracle_state(&scan, &zone, &cfg()));
        assert_eq!(v.cage_state == CageState::Occupied, !v.offending_points.is_empty());
        assert_eq!(v.nearest_obstacle_distance.is_some(), !v.offending_points.is_empty());
    }
}

/// Up to `k` points at least 1 m from each other and from every scan point.
fn isolated_points(rng: &mut ChaCha8Rng, scan: &LidarScan<f64>, k: usize) -> Vec<Point3<f64>> {
    let mut out: Vec<Point3<f64>> = Vec::new();
    let mut tries = 0;
    while out.len() < k && tries < 10_000 {
        tries += 1;
        let p = Point3::new(rng.random_range(-2.0..12.0), rng.random_range(-5.0..5.0), rng.random_range(0.1..2.5));
        let far = |q: &Point3<f64>| p.xy().dist(q.xy()) > 1.0;
        if scan.points.iter().all(far) && out.iter().all(far) {
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ghosts_never_flip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scan = random_scan(&mut rng);
        let zone = fad_zone(rng.random_range(0.0..3.0), rng.random_range(-0.6..0.6));
        let c = cfg();
        let before = evaluate(&scan, &zone, &c).cage_state;
        let mut noisy = scan.clone();
        noisy.points.extend(isolated_points(&mut rng, &scan, c.cluster_min_pts - 1));
        prop_assert_eq!(evaluate(&noisy, &zone, &c).cage_state, before);
    }

    #[test]
    fn adding_clustered_point_keeps_occupied(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scan = random_scan(&mut rng);
        let zone = fad_zone(1.0, 0.0);
        let c = cfg();
        let v = evaluate(&scan, &zone, &c);
        if let Some(p) = v.offending_points.first() {
            let mut more = scan.clone();
            more.points.push(Point3::new(p.x + 0.01, p.y, 0.5));
            prop_assert_eq!(evaluate(&more, &zone, &c).cage_state, CageState::Occupied);
        }
    }

    #[test]
    fn evaluate_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scan = random_scan(&mut rng);
        let zone = fad_zone(2.0, 0.2);
        prop_assert_eq!(evaluate(&scan, &zone, &cfg()), evaluate(&scan, &zone, &cfg()));
    }
}
