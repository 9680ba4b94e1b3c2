use std::f64::consts::PI;

use super::Vec2;
use crate::{fmt::sig9, Error, Result};

const DEGENERATE_SPEED: f64 = 1e-12;
const PROJECTION_SCAN: usize = 64;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Cubic Bezier in the order the vehicle travels it: `P0` at the start pose,
/// `P3` at the parking slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BezierPath {
    pub control_points: [Vec2; 4],
}

/// Geometry at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub point: Vec2,
    /// Unit tangent in the direction of travel.
    pub tangent: Vec2,
    /// Unsigned curvature, 1/m.
    pub curvature: f64,
    /// Curvature with sign, positive when the path turns counterclockwise.
    pub signed_curvature: f64,
}

/// Closest point on the path to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProjection {
    pub u_star: f64,
    /// Positive when the query point lies left of the path, looking along
    /// the direction of travel.
    pub lateral_error: f64,
    /// Arc length from `P0` to the foot point, meters.
    pub arc_position: f64,
    pub foot: Vec2,
    /// Unit tangent at the foot point.
    pub tangent: Vec2,
}

impl BezierPath {
    pub fn new(control_points: [Vec2; 4]) -> Self {
        Self { control_points }
    }

    pub fn start(&self) -> Vec2 {
        self.control_points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.control_points[3]
    }

    pub fn point(&self, u: f64) -> Vec2 {
        let [p0, p1, p2, p3] = self.control_points;
        let v = 1.0 - u;
        let b0 = v * v * v;
        let b1 = 3.0 * v * v * u;
        let b2 = 3.0 * v * u * u;
        let b3 = u * u * u;
        Vec2::new(
            b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
            b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y,
        )
    }

    pub fn derivative(&self, u: f64) -> Vec2 {
        let [p0, p1, p2, p3] = self.control_points;
        let v = 1.0 - u;
        let a = 3.0 * v * v;
        let b = 6.0 * v * u;
        let c = 3.0 * u * u;
        a * (p1 - p0) + b * (p2 - p1) + c * (p3 - p2)
    }

    pub fn second_derivative(&self, u: f64) -> Vec2 {
        let [p0, p1, p2, p3] = self.control_points;
        let v = 1.0 - u;
        (6.0 * v) * (p2 - 2.0 * p1 + p0) + (6.0 * u) * (p3 - 2.0 * p2 + p1)
    }

    fn signed_curvature_at(&self, u: f64) -> Option<f64> {
        let d1 = self.derivative(u);
        let speed = d1.norm();
        if speed < DEGENERATE_SPEED {
            return None;
        }
        let d2 = self.second_derivative(u);
        Some(d1.cross(d2) / (speed * speed * speed))
    }

    /// Unsigned curvature, or `+inf` where the derivative vanishes.
    pub fn curvature(&self, u: f64) -> f64 {
        self.signed_curvature_at(u).map_or(f64::INFINITY, f64::abs)
    }

    pub fn eval(&self, u: f64) -> Result<PathSample> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("path parameter {u} outside [0, 1]")));
        }
        let d1 = self.derivative(u);
        let speed = d1.norm();
        if speed < DEGENERATE_SPEED {
            return Err(Error::DegenerateDerivative { u });
        }
        let k = self.signed_curvature_at(u).unwrap_or(0.0);
        Ok(PathSample {
            point: self.point(u),
            tangent: (1.0 / speed) * d1,
            curvature: k.abs(),
            signed_curvature: k,
        })
    }

    /// Total arc length.
    pub fn length(&self) -> f64 {
        self.length_between(0.0, 1.0)
    }

    /// Arc length between two parameter values by adaptive Simpson
    /// quadrature of the speed.
    pub fn length_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let f = |u: f64| self.derivative(u).norm();
        let fa = f(a);
        let fb = f(b);
        let m = 0.5 * (a + b);
        let fm = f(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        // Speed is bounded by three times the control polygon's longest leg.
        let scale = self.polygon_length().max(f64::MIN_POSITIVE);
        simpson(&f, a, b, fa, fm, fb, whole, 1e-11 * scale, 48)
    }

    fn polygon_length(&self) -> f64 {
        let p = self.control_points;
        (p[1] - p[0]).norm() + (p[2] - p[1]).norm() + (p[3] - p[2]).norm()
    }

    /// Largest curvature over the path. The curvature is sampled at `samples`
    /// Chebyshev-Lobatto points and every sampled local maximum is refined by
    /// golden-section search between its neighbours. Returns `+inf` when the
    /// derivative vanishes at a sample.
    pub fn max_curvature(&self, samples: usize) -> f64 {
        let n = samples.max(3);
        let us: Vec<f64> = (0..n)
            .map(|i| 0.5 * (1.0 - (PI * i as f64 / (n - 1) as f64).cos()))
            .collect();
        let mut ks = Vec::with_capacity(n);
        for &u in &us {
            let k = self.curvature(u);
            if !k.is_finite() {
                return f64::INFINITY;
            }
            ks.push(k);
        }
        let mut best = ks.iter().cloned().fold(0.0, f64::max);
        for i in 0..n {
            let left = if i > 0 { ks[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { ks[i + 1] } else { f64::NEG_INFINITY };
            if ks[i] >= left && ks[i] >= right && ks[i] > 0.0 {
                let lo = us[i.saturating_sub(1)];
                let hi = us[(i + 1).min(n - 1)];
                let k = golden_max(|u| self.curvature(u), lo, hi, 1e-12);
                if !k.is_finite() {
                    return f64::INFINITY;
                }
                best = best.max(k);
            }
        }
        best
    }

    /// Closest point on the path to `p`. A bracket around `u_hint` is searched
    /// first; a coarse scan of the whole curve then guards against the hint
    /// sitting in the basin of a worse local minimum.
    pub fn project(&self, p: Vec2, u_hint: f64) -> PathProjection {
        let hint = if u_hint.is_finite() {
            u_hint.clamp(0.0, 1.0)
        } else {
            0.0
        };
        let dist_sq = |u: f64| (self.point(u) - p).norm_sq();

        let h = 1.0 / PROJECTION_SCAN as f64;
        let mut best_u = self.refine_projection(p, (hint - h).max(0.0), (hint + h).min(1.0));
        let mut best_d = dist_sq(best_u);

        let scan: Vec<f64> = (0..=PROJECTION_SCAN).map(|i| dist_sq(i as f64 * h)).collect();
        for i in 0..=PROJECTION_SCAN {
            let left = if i > 0 { scan[i - 1] } else { f64::INFINITY };
            let right = if i < PROJECTION_SCAN { scan[i + 1] } else { f64::INFINITY };
            if scan[i] > left || scan[i] > right || scan[i] >= best_d {
                continue;
            }
            let lo = (i as f64 - 1.0).max(0.0) * h;
            let hi = ((i + 1) as f64 * h).min(1.0);
            let u = self.refine_projection(p, lo, hi);
            let d = dist_sq(u);
            let closer_to_hint = (u - hint).abs() < (best_u - hint).abs();
            if d < best_d - 1e-15 * best_d.max(1.0) || (d <= best_d && closer_to_hint) {
                best_u = u;
                best_d = d;
            }
        }
        self.projection_at(p, best_u)
    }

    fn projection_at(&self, p: Vec2, u: f64) -> PathProjection {
        let foot = self.point(u);
        let d1 = self.derivative(u);
        let speed = d1.norm();
        let tangent = if speed > 0.0 {
            (1.0 / speed) * d1
        } else {
            // Cusp: fall back to the chord direction.
            let chord = self.end() - self.start();
            (1.0 / chord.norm().max(f64::MIN_POSITIVE)) * chord
        };
        let offset = p - foot;
        let normal_part = tangent.cross(offset);
        // Interior feet are orthogonal, so the normal component is the
        // distance; clamped ends keep the along-path part too.
        let lateral_error = if u > 0.0 && u < 1.0 {
            normal_part
        } else {
            offset.norm().copysign(normal_part)
        };
        PathProjection {
            u_star: u,
            lateral_error,
            arc_position: self.length_between(0.0, u),
            foot,
            tangent,
        }
    }

    /// Minimizes the squared distance on `[lo, hi]`: golden-section to
    /// localize, then Newton on the stationarity condition until
    /// `|d/du dist²| < 1e-10` or the iterate reaches a domain endpoint.
    fn refine_projection(&self, p: Vec2, lo: f64, hi: f64) -> f64 {
        let dist_sq = |u: f64| (self.point(u) - p).norm_sq();
        let mut u = golden_min(dist_sq, lo, hi, 1e-9);
        // half-derivative of the squared distance
        let g = |u: f64| (self.point(u) - p).dot(self.derivative(u));
        for _ in 0..30 {
            let gu = g(u);
            if 2.0 * gu.abs() < 1e-10 {
                break;
            }
            if (u <= 0.0 && gu > 0.0) || (u >= 1.0 && gu < 0.0) {
                break;
            }
            let d1 = self.derivative(u);
            let gp = d1.norm_sq() + (self.point(u) - p).dot(self.second_derivative(u));
            if !(gp > 0.0) {
                break;
            }
            let next = (u - gu / gp).clamp(0.0, 1.0);
            if dist_sq(next) > dist_sq(u) {
                break;
            }
            if next == u {
                break;
            }
            u = next;
        }
        u
    }

    /// Mirror image about the x-axis.
    pub fn mirrored(&self) -> Self {
        let m = |v: Vec2| Vec2::new(v.x, -v.y);
        let [a, b, c, d] = self.control_points;
        Self::new([m(a), m(b), m(c), m(d)])
    }

    pub fn scaled(&self, s: f64) -> Self {
        let [a, b, c, d] = self.control_points;
        Self::new([s * a, s * b, s * c, s * d])
    }

    pub const CSV_HEADER: &'static str = "p0x,p0y,p1x,p1y,p2x,p2y,p3x,p3y";

    /// One exchange row, `p0x,p0y,...,p3y`.
    pub fn to_csv_row(&self) -> String {
        self.control_points
            .iter()
            .flat_map(|p| [sig9(p.x), sig9(p.y)])
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses the exchange format: an optional header line followed by one
    /// row of eight numbers.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut row = rows.next().ok_or_else(|| Error::Csv("empty path file".into()))?;
        if row == Self::CSV_HEADER {
            row = rows.next().ok_or_else(|| Error::Csv("path row missing".into()))?;
        }
        let vals: Vec<f64> = row
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Csv(format!("bad number in path row: {e}")))?;
        if vals.len() != 8 {
            return Err(Error::Csv(format!("path row has {} fields, expected 8", vals.len())));
        }
        let p = |i: usize| Vec2::new(vals[2 * i], vals[2 * i + 1]);
        Ok(Self::new([p(0), p(1), p(2), p(3)]))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    // The endpoints are candidates too: the minimum may sit on the boundary.
    let mid = 0.5 * (a + b);
    [a, mid, b]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(mid)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let u = golden_min(|u| -f(u), a, b, tol);
    f(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> BezierPath {
        BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-3.0, 0.0),
            Vec2::new(-7.0, 0.0),
            Vec2::new(-10.0, 0.0),
        ])
    }

    #[test]
    fn endpoints_are_exact() {
        let p = BezierPath::new([
            Vec2::new(0.3, -1.7),
            Vec2::new(2.0, 5.0),
            Vec2::new(-3.0, 4.0),
            Vec2::new(9.1, 0.2),
        ]);
        assert_eq!(p.point(0.0), p.control_points[0]);
        assert_eq!(p.point(1.0), p.control_points[3]);
        assert_eq!(p.eval(0.0).unwrap().point, p.control_points[0]);
    }

    #[test]
    fn straight_line_points_and_curvature() {
        // uniform speed when the inner points sit at thirds
        let p = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-10.0 / 3.0, 0.0),
            Vec2::new(-20.0 / 3.0, 0.0),
            Vec2::new(-10.0, 0.0),
        ]);
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            let s = p.eval(u).unwrap();
            assert!((s.point.x + 10.0 * u).abs() < 1e-12);
            assert_eq!(s.point.y, 0.0);
            assert_eq!(s.curvature, 0.0);
            assert!((s.tangent.x + 1.0).abs() < 1e-15);
        }
        assert!((straight().length() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn eval_rejects_out_of_range_and_cusps() {
        assert!(straight().eval(1.5).is_err());
        let cusp = BezierPath::new([Vec2::new(0.0, 0.0); 4]);
        assert!(matches!(cusp.eval(0.5), Err(Error::DegenerateDerivative { .. })));
        assert!(cusp.max_curvature(64).is_infinite());
    }

    #[test]
    fn curvature_matches_finite_difference_of_tangent_angle() {
        // symmetric quarter-circle-like polygon
        let k = 0.552_284_749_831;
        let p = BezierPath::new([
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, k),
            Vec2::new(k, 1.0),
            Vec2::new(0.0, 1.0),
        ]);
        let h = 1e-5;
        let angle = |u: f64| p.derivative(u).angle();
        let dtheta = angle(0.5 + h) - angle(0.5 - h);
        let ds = p.length_between(0.5 - h, 0.5 + h);
        let fd = dtheta / ds;
        let s = p.eval(0.5).unwrap();
        assert!((s.signed_curvature - fd).abs() < 1e-6, "{} vs {}", s.signed_curvature, fd);
        assert!((s.curvature - 1.0).abs() < 1e-2);
    }

    #[test]
    fn length_matches_dense_polyline() {
        let p = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ]);
        let n = 1_000_000;
        let mut poly = 0.0;
        let mut prev = p.point(0.0);
        for i in 1..=n {
            let q = p.point(i as f64 / n as f64);
            poly += (q - prev).norm();
            prev = q;
        }
        let len = p.length();
        assert!(((len - poly) / poly).abs() < 1e-6, "{len} vs {poly}");
    }

    #[test]
    fn length_is_homogeneous() {
        let p = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ]);
        let l1 = p.length();
        let l2 = p.scaled(2.0).length();
        assert!((l2 / l1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn projection_of_point_on_curve() {
        let p = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-4.0, 0.0),
            Vec2::new(-9.0, -2.0),
            Vec2::new(-9.0, -6.0),
        ]);
        let q = p.point(0.3);
        let proj = p.project(q, 0.25);
        assert!((proj.u_star - 0.3).abs() < 1e-8);
        assert!(proj.lateral_error.abs() < 1e-12);
        assert!((proj.arc_position - p.length_between(0.0, 0.3)).abs() < 1e-6);
    }

    #[test]
    fn projection_sign_convention() {
        // travelling along −x, +y is to the right of the direction of travel
        let proj = straight().project(Vec2::new(-5.0, 0.2), 0.5);
        assert!((proj.lateral_error + 0.2).abs() < 1e-12);
        let proj = straight().project(Vec2::new(-5.0, -0.2), 0.5);
        assert!((proj.lateral_error - 0.2).abs() < 1e-12);
    }

    #[test]
    fn projection_clamps_to_endpoints() {
        let proj = straight().project(Vec2::new(3.0, 1.0), 0.4);
        assert_eq!(proj.u_star, 0.0);
        assert!((proj.lateral_error.abs() - 10.0f64.sqrt()).abs() < 1e-12);
        let proj = straight().project(Vec2::new(-12.0, 0.0), 0.4);
        assert_eq!(proj.u_star, 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let p = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-4.12345678, 0.5),
            Vec2::new(-9.0, -2.0),
            Vec2::new(-9.0, -6.0),
        ]);
        let text = format!("{}\n{}\n", BezierPath::CSV_HEADER, p.to_csv_row());
        assert_eq!(BezierPath::from_csv(&text).unwrap(), p);
        assert!(BezierPath::from_csv("1,2,3").is_err());
    }
}
