use std::f64::consts::FRAC_PI_2;

use hsc_core::planner::{plan_parking_path, BezierPath, PlannerConfig, Pose2D, TravelDirection, Vec2};
use hsc_core::Error;
use proptest::prelude::*;

fn cfg(r: f64) -> PlannerConfig {
    PlannerConfig {
        min_turn_radius: r,
        ..PlannerConfig::default()
    }
}

fn canonical() -> BezierPath {
    plan_parking_path(Pose2D::new(0.0, 0.0, 0.0), Pose2D::new(-15.0, -12.0, FRAC_PI_2), &cfg(8.0)).unwrap()
}

#[test]
fn canonical_path_meets_its_bounds() {
    let path = canonical();
    assert!(path.max_curvature(4096) <= 1.001 / 8.0);
    assert_eq!(path.start(), Vec2::new(0.0, 0.0));
    assert_eq!(path.end(), Vec2::new(-15.0, -12.0));
    // leaves backwards along −x and enters the slot moving along −y
    let d0 = path.derivative(0.0);
    let d1 = path.derivative(1.0);
    assert!(d0.x < 0.0 && d0.y.abs() < 1e-12);
    assert!(d1.y < 0.0 && d1.x.abs() < 1e-12);
}

#[test]
fn forward_and_reverse_plans_are_reflections_in_time() {
    // Driving forward from the goal pose to the start pose traces the same
    // curve as reversing from start to goal.
    let start = Pose2D::new(0.0, 0.0, 0.0);
    let goal = Pose2D::new(-15.0, -12.0, FRAC_PI_2);
    let reverse = plan_parking_path(start, goal, &cfg(8.0)).unwrap();
    let forward = plan_parking_path(
        goal,
        start,
        &PlannerConfig {
            travel: TravelDirection::Forward,
            ..cfg(8.0)
        },
    )
    .unwrap();
    assert!((reverse.length() - forward.length()).abs() < 1e-3 * reverse.length());
}

#[test]
fn infeasible_geometry_reports_best_curvature() {
    match plan_parking_path(Pose2D::new(0.0, 0.0, 0.0), Pose2D::new(-1.5, -1.5, FRAC_PI_2), &cfg(8.0)) {
        Err(Error::Infeasible { best_curvature, limit }) => {
            assert!(best_curvature > limit);
            assert_eq!(limit, 1.0 / 8.0);
        }
        other => panic!("expected Infeasible, got {other:?}"),
    }
}

/// Minimum distance by dense sampling plus a local golden-section polish.
fn dense_distance(path: &BezierPath, p: Vec2) -> f64 {
    let n = 20_000;
    let d = |u: f64| (path.point(u) - p).norm();
    let (i, _) = (0..=n)
        .map(|i| d(i as f64 / n as f64))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let (mut lo, mut hi) = (((i as f64) - 1.0).max(0.0) / n as f64, ((i as f64) + 1.0).min(n as f64) / n as f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if d(a) < d(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    d(0.5 * (lo + hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mirror_symmetry(gx in -20.0f64..-8.0, gy in 4.0f64..14.0, dh in -0.4f64..0.4, r in 4.5f64..7.0) {
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let goal = Pose2D::new(gx, -gy, FRAC_PI_2 + dh);
        let c = cfg(r);
        if let Ok(path) = plan_parking_path(start, goal, &c) {
            let mirrored = plan_parking_path(start.mirrored(), goal.mirrored(), &c).unwrap();
            for (a, b) in path.mirrored().control_points.iter().zip(mirrored.control_points.iter()) {
                prop_assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
            }
        } else {
            prop_assert!(plan_parking_path(start.mirrored(), goal.mirrored(), &c).is_err());
        }
    }

    #[test]
    fn longer_radius_never_shortens(gx in -20.0f64..-10.0, gy in 6.0f64..14.0, r in 4.5f64..6.5, extra in 0.2f64..2.0) {
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let goal = Pose2D::new(gx, -gy, FRAC_PI_2);
        let tight = plan_parking_path(start, goal, &cfg(r));
        let loose = plan_parking_path(start, goal, &cfg(r + extra));
        match (tight, loose) {
            (Ok(a), Ok(b)) => prop_assert!(b.length() >= a.length() * (1.0 - 1e-3), "{} < {}", b.length(), a.length()),
            // a larger radius can only lose feasibility
            (Err(_), Ok(_)) => prop_assert!(false, "feasible at R+extra but not at R"),
            _ => {}
        }
    }

    #[test]
    fn scaling_poses_scales_the_path(s in 0.5f64..2.0) {
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let goal = Pose2D::new(-15.0, -12.0, FRAC_PI_2);
        let base = plan_parking_path(start, goal, &cfg(6.0)).unwrap();
        let scaled = plan_parking_path(Pose2D::new(0.0, 0.0, 0.0), Pose2D::new(-15.0 * s, -12.0 * s, FRAC_PI_2), &cfg(6.0 * s)).unwrap();
        prop_assert!((scaled.length() - s * base.length()).abs() < 2e-3 * s * base.length());
    }

    #[test]
    fn projection_matches_dense_search(x in -20.0f64..5.0, y in -16.0f64..4.0, hint in 0.0f64..1.0) {
        let path = canonical();
        let p = Vec2::new(x, y);
        let proj = path.project(p, hint);
        let dense = dense_distance(&path, p);
        prop_assert!((0.0..=1.0).contains(&proj.u_star));
        prop_assert!((proj.lateral_error.abs() - (path.point(proj.u_star) - p).norm()).abs() < 1e-9);
        prop_assert!((proj.lateral_error.abs() - dense).abs() < 1e-6, "{} vs {}", proj.lateral_error, dense);
    }
}
