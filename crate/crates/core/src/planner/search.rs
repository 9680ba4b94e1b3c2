use super::{BezierPath, PlannerConfig, Pose2D, Vec2};
use crate::{Error, Result};

const GRID: usize = 64;
/// Relative length difference below which two candidates count as tied.
const TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    m0: f64,
    m1: f64,
    length: f64,
}

impl Candidate {
    /// Shorter wins; near-equal lengths fall back to the smaller magnitude sum.
    fn better_than(&self, other: &Candidate) -> bool {
        let scale = self.length.max(other.length);
        if self.length < other.length - TIE * scale {
            return true;
        }
        if self.length > other.length + TIE * scale {
            return false;
        }
        self.m0 + self.m1 < other.m0 + other.m1
    }
}

struct Problem {
    p0: Vec2,
    p3: Vec2,
    dir0: Vec2,
    dir3: Vec2,
    kappa_max: f64,
    samples: usize,
    upper: f64,
}

impl Problem {
    fn path(&self, m0: f64, m1: f64) -> BezierPath {
        BezierPath::new([self.p0, self.p0 + m0 * self.dir0, self.p3 - m1 * self.dir3, self.p3])
    }

    /// Length when the curvature bound holds, `None` otherwise.
    fn evaluate(&self, m0: f64, m1: f64) -> (f64, Option<Candidate>) {
        if !(m0 > 0.0 && m1 > 0.0 && m0 <= self.upper && m1 <= self.upper) {
            return (f64::INFINITY, None);
        }
        let path = self.path(m0, m1);
        let k = path.max_curvature(self.samples);
        if k <= self.kappa_max {
            (k, Some(Candidate { m0, m1, length: path.length() }))
        } else {
            (k, None)
        }
    }
}

/// Plans the shortest cubic Bezier from `start` to `goal` whose curvature
/// never exceeds `1 / cfg.min_turn_radius`.
///
/// The inner control points sit on the endpoint motion directions,
/// `P1 = P0 + m0·d_start` and `P2 = P3 − m1·d_goal`, with both magnitudes
/// searched over `(0, 3·|P3 − P0|]`: a 32×32 grid, then a pattern search
/// from the best few grid cells. Infeasible candidates are rejected outright.
pub fn plan_parking_path(start: Pose2D, goal: Pose2D, cfg: &PlannerConfig) -> Result<BezierPath> {
    cfg.validate()?;
    for v in [start.x, start.y, start.heading, goal.x, goal.y, goal.heading] {
        if !v.is_finite() {
            return Err(Error::invalid("poses must be finite"));
        }
    }
    let p0 = start.position();
    let p3 = goal.position();
    let d = (p3 - p0).norm();
    if d <= 1e-9 {
        return Err(Error::invalid("start and goal positions coincide"));
    }
    let problem = Problem {
        p0,
        p3,
        dir0: cfg.travel.motion_direction(start.heading),
        dir3: cfg.travel.motion_direction(goal.heading),
        kappa_max: cfg.max_curvature(),
        samples: cfg.curvature_samples,
        upper: 3.0 * d,
    };

    let step = problem.upper / GRID as f64;
    let mut best_k = f64::INFINITY;
    let mut grid: Vec<Option<Candidate>> = Vec::with_capacity(GRID * GRID);
    for i in 1..=GRID {
        for j in 1..=GRID {
            let (k, c) = problem.evaluate(i as f64 * step, j as f64 * step);
            best_k = best_k.min(k);
            grid.push(c);
        }
    }

    // Seeds: feasible cells that are no longer than any feasible neighbour.
    let at = |i: isize, j: isize| -> Option<Candidate> {
        if i < 0 || j < 0 || i >= GRID as isize || j >= GRID as isize {
            None
        } else {
            grid[i as usize * GRID + j as usize]
        }
    };
    let mut seeds: Vec<Candidate> = Vec::new();
    for i in 0..GRID as isize {
        for j in 0..GRID as isize {
            let Some(c) = at(i, j) else { continue };
            let is_local_min = NEIGHBOURS.iter().all(|(di, dj)| {
                at(i + *di as isize, j + *dj as isize).is_none_or(|n| !n.better_than(&c))
            });
            if is_local_min {
                seeds.push(c);
            }
        }
    }
    if seeds.is_empty() {
        return Err(Error::Infeasible {
            best_curvature: best_k,
            limit: problem.kappa_max,
        });
    }
    seeds.sort_by(|a, b| {
        if a.better_than(b) {
            std::cmp::Ordering::Less
        } else if b.better_than(a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    seeds.truncate(8);

    let min_step = cfg.length_tolerance * 1e-5 * d;
    let mut best: Option<Candidate> = None;
    for seed in seeds {
        let c = pattern_search(&problem, seed, step, min_step);
        if best.is_none_or(|b| c.better_than(&b)) {
            best = Some(c);
        }
    }
    let best = best.expect("at least one seed");
    Ok(problem.path(best.m0, best.m1))
}

const NEIGHBOURS: [(i8, i8); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

fn pattern_search(problem: &Problem, seed: Candidate, mut h: f64, min_step: f64) -> Candidate {
    let mut cur = seed;
    while h >= min_step {
        let mut next: Option<Candidate> = None;
        for (di, dj) in NEIGHBOURS {
            let m0 = cur.m0 + di as f64 * h;
            let m1 = cur.m1 + dj as f64 * h;
            if let (_, Some(c)) = problem.evaluate(m0, m1) {
                let shorter = c.length < cur.length - TIE * cur.length;
                if shorter && next.is_none_or(|n| c.better_than(&n)) {
                    next = Some(c);
                }
            }
        }
        match next {
            Some(c) => cur = c,
            None => h *= 0.5,
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::TravelDirection;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cfg(r: f64) -> PlannerConfig {
        PlannerConfig {
            min_turn_radius: r,
            ..Default::default()
        }
    }

    #[test]
    fn collinear_forward_poses_give_a_straight_segment() {
        let c = PlannerConfig {
            travel: TravelDirection::Forward,
            ..cfg(4.5)
        };
        let path = plan_parking_path(Pose2D::new(0.0, 0.0, PI), Pose2D::new(-10.0, 0.0, PI), &c).unwrap();
        assert!((path.length() - 10.0).abs() < 1e-6);
        assert_eq!(path.max_curvature(256), 0.0);
    }

    #[test]
    fn collinear_reverse_poses_give_a_straight_segment() {
        let path =
            plan_parking_path(Pose2D::new(0.0, 0.0, 0.0), Pose2D::new(-10.0, 0.0, 0.0), &cfg(4.5)).unwrap();
        assert!((path.length() - 10.0).abs() < 1e-6);
        assert_eq!(path.max_curvature(256), 0.0);
    }

    #[test]
    fn u_turn_with_one_meter_offset_is_infeasible() {
        let r = plan_parking_path(Pose2D::new(0.0, 0.0, PI), Pose2D::new(0.0, -1.0, 0.0), &cfg(4.5));
        match r {
            Err(Error::Infeasible { best_curvature, limit }) => assert!(best_curvature > limit),
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn coincident_positions_rejected() {
        let r = plan_parking_path(Pose2D::new(1.0, 1.0, 0.0), Pose2D::new(1.0, 1.0, FRAC_PI_2), &cfg(4.5));
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn endpoint_tangents_follow_motion_direction() {
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let goal = Pose2D::new(-15.0, -12.0, FRAC_PI_2);
        let path = plan_parking_path(start, goal, &cfg(8.0)).unwrap();
        assert_eq!(path.start(), start.position());
        assert_eq!(path.end(), goal.position());
        let t0 = path.eval(0.0).unwrap().tangent;
        let t1 = path.eval(1.0).unwrap().tangent;
        // reverse travel: moving along −x at the start and −y into the slot
        assert!(t0.cross(Vec2::new(-1.0, 0.0)).abs() < 1e-9 && t0.x < 0.0);
        assert!(t1.cross(Vec2::new(0.0, -1.0)).abs() < 1e-9 && t1.y < 0.0);
        assert!(path.max_curvature(4096) <= (1.0 + 1e-3) / 8.0);
    }
}
