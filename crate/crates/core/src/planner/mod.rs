//! Desired parking path: a cubic Bezier joining the start pose to the slot
//! pose, the shortest one in its tangent-magnitude family whose curvature
//! stays within the vehicle's minimum turning radius.

mod bezier;
mod search;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

pub use bezier::{BezierPath, PathProjection, PathSample};
pub use search::plan_parking_path;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Left-hand normal (rotated +90°).
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π]. Angles already in range are returned as is.
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Planar pose. `heading` is the direction the vehicle's nose points,
/// counterclockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Reflection about the x-axis.
    pub fn mirrored(&self) -> Self {
        Self::new(self.x, -self.y, -self.heading)
    }
}

/// Which way the vehicle moves along the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TravelDirection {
    Forward,
    /// Tail first: the path tangent points opposite to the heading.
    #[default]
    Reverse,
}

impl TravelDirection {
    /// Unit direction of motion for a vehicle with the given heading.
    pub fn motion_direction(self, heading: f64) -> Vec2 {
        let mut nose = Vec2::from_angle(heading);
        // Axis-aligned headings give exact axis directions, so collinear
        // poses plan an exactly straight segment.
        for c in [&mut nose.x, &mut nose.y] {
            if c.abs() < 1e-15 {
                *c = 0.0;
            }
        }
        match self {
            TravelDirection::Forward => nose,
            TravelDirection::Reverse => -nose,
        }
    }

    /// +1 forward, −1 reverse.
    pub fn sign(self) -> f64 {
        match self {
            TravelDirection::Forward => 1.0,
            TravelDirection::Reverse => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Minimum turning radius, meters. The default sits well above the
    /// vehicle's geometric limit (about 5 m): near the column stop the
    /// default drivers cannot out-torque the aligning stiffness.
    pub min_turn_radius: f64,
    /// Chebyshev-spaced samples used to bound curvature.
    pub curvature_samples: usize,
    /// Relative tolerance on the optimal length.
    pub length_tolerance: f64,
    pub travel: TravelDirection,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            min_turn_radius: 8.0,
            curvature_samples: 256,
            length_tolerance: 0.01,
            travel: TravelDirection::Reverse,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_turn_radius > 0.0 && self.min_turn_radius.is_finite()) {
            return Err(Error::invalid("min_turn_radius must be > 0"));
        }
        if self.curvature_samples < 64 {
            return Err(Error::invalid("curvature_samples must be >= 64"));
        }
        if !(self.length_tolerance > 0.0) {
            return Err(Error::invalid("length_tolerance must be > 0"));
        }
        Ok(())
    }

    pub fn max_curvature(&self) -> f64 {
        1.0 / self.min_turn_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-0.5 * PI - 2.0 * PI) + 0.5 * PI).abs() < 1e-12);
        assert_eq!(normalize_angle(0.3), 0.3);
    }

    #[test]
    fn reverse_motion_points_behind() {
        let d = TravelDirection::Reverse.motion_direction(0.0);
        assert_eq!(d, Vec2::new(-1.0, -0.0));
    }

    #[test]
    fn config_validation() {
        assert!(PlannerConfig::default().validate().is_ok());
        let bad = PlannerConfig {
            curvature_samples: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PlannerConfig {
            min_turn_radius: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
