//! Shared plant: a kinematic bicycle model and a second-order steering column
//! that receives driver and assist torques at the same time.
//!
//! The column obeys `J·θ̈ = τ_c + τ_das − B·θ̇ − K·θ`, where the `K·θ` term
//! stands in for the self-aligning torque. Road-wheel angle is `θ / ratio`.

use crate::planner::{normalize_angle, Pose2D};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Wheelbase, meters.
    pub wheelbase: f64,
    /// Column angle per road-wheel angle.
    pub steering_ratio: f64,
    /// Column stop, radians.
    pub max_column_angle: f64,
    /// Cruise speed during the maneuver, m/s (negative when backing).
    pub reverse_speed: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.7,
            steering_ratio: 16.0,
            max_column_angle: 2.5 * std::f64::consts::PI,
            reverse_speed: -1.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0) {
            return Err(Error::invalid("wheelbase must be > 0"));
        }
        if !(self.steering_ratio > 0.0) {
            return Err(Error::invalid("steering_ratio must be > 0"));
        }
        if !(self.max_column_angle > 0.0) {
            return Err(Error::invalid("max_column_angle must be > 0"));
        }
        if self.max_column_angle / self.steering_ratio >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("max road-wheel angle must stay below pi/2"));
        }
        if !self.reverse_speed.is_finite() || self.reverse_speed == 0.0 {
            return Err(Error::invalid("reverse_speed must be finite and nonzero"));
        }
        Ok(())
    }

    pub fn road_wheel_angle(&self, column_angle: f64) -> f64 {
        column_angle / self.steering_ratio
    }

    /// Tightest radius the column stop allows.
    pub fn min_turn_radius(&self) -> f64 {
        self.wheelbase / (self.max_column_angle / self.steering_ratio).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    /// Velocity signal the pseudo-works integrate against. The kinematic
    /// step leaves it untouched; the trial runner sets it from the path.
    pub lateral_velocity_signal: f64,
}

impl VehicleState {
    pub fn at_rest(pose: Pose2D) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
            speed: 0.0,
            lateral_velocity_signal: 0.0,
        }
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite() && self.speed.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringColumn {
    /// Column angle, radians.
    pub theta: f64,
    pub theta_dot: f64,
    /// kg·m²
    pub inertia: f64,
    /// N·m·s/rad
    pub damping: f64,
    /// Self-aligning stiffness, N·m/rad.
    pub aligning_stiffness: f64,
    /// Hard stop, radians.
    pub max_angle: f64,
}

impl Default for SteeringColumn {
    fn default() -> Self {
        Self {
            theta: 0.0,
            theta_dot: 0.0,
            inertia: 0.05,
            damping: 0.3,
            aligning_stiffness: 1.0,
            max_angle: 2.5 * std::f64::consts::PI,
        }
    }
}

impl SteeringColumn {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia > 0.0) {
            return Err(Error::invalid("column inertia must be > 0"));
        }
        if !(self.damping >= 0.0) || !(self.aligning_stiffness >= 0.0) {
            return Err(Error::invalid("column damping and stiffness must be >= 0"));
        }
        if !(self.max_angle > 0.0) {
            return Err(Error::invalid("column max angle must be > 0"));
        }
        if self.theta.abs() > self.max_angle {
            return Err(Error::invalid("initial column angle beyond the stop"));
        }
        Ok(())
    }
}

fn check_dt(dt: f64) {
    debug_assert!(dt > 0.0 && dt <= 0.01 + 1e-15, "dt {dt} outside (0, 0.01]");
}

/// Advances the pose by one classical Runge-Kutta step of
/// `ẋ = v·cos ψ, ẏ = v·sin ψ, ψ̇ = (v/L)·tan δ` with the column angle held
/// over the step.
pub fn step_vehicle(
    state: &VehicleState,
    column: &SteeringColumn,
    params: &VehicleParams,
    dt: f64,
) -> VehicleState {
    check_dt(dt);
    let v = state.speed;
    let yaw_rate = v / params.wheelbase * params.road_wheel_angle(column.theta).tan();
    let f = |psi: f64| (v * psi.cos(), v * psi.sin());

    let psi0 = state.heading;
    let (x1, y1) = f(psi0);
    let psi_mid = psi0 + 0.5 * dt * yaw_rate;
    let (x2, y2) = f(psi_mid);
    let (x3, y3) = (x2, y2);
    let psi_end = psi0 + dt * yaw_rate;
    let (x4, y4) = f(psi_end);

    VehicleState {
        x: state.x + dt / 6.0 * (x1 + 2.0 * x2 + 2.0 * x3 + x4),
        y: state.y + dt / 6.0 * (y1 + 2.0 * y2 + 2.0 * y3 + y4),
        heading: normalize_angle(psi_end),
        ..*state
    }
}

/// One semi-implicit Euler step of the column: velocity first, then angle
/// from the new velocity. At the stop the angle is clamped and the rate zeroed.
pub fn step_steering(column: &SteeringColumn, tau_c: f64, tau_das: f64, dt: f64) -> SteeringColumn {
    check_dt(dt);
    let accel = (tau_c + tau_das - column.damping * column.theta_dot - column.aligning_stiffness * column.theta)
        / column.inertia;
    let mut theta_dot = column.theta_dot + dt * accel;
    let mut theta = column.theta + dt * theta_dot;
    if theta.abs() > column.max_angle {
        theta = column.max_angle.copysign(theta);
        theta_dot = 0.0;
    }
    SteeringColumn {
        theta,
        theta_dot,
        ..*column
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reversing(heading: f64) -> VehicleState {
        VehicleState {
            speed: -1.0,
            ..VehicleState::at_rest(Pose2D::new(0.0, 0.0, heading))
        }
    }

    fn column_at(theta: f64) -> SteeringColumn {
        SteeringColumn {
            theta,
            max_angle: 10.0,
            ..Default::default()
        }
    }

    #[test]
    fn straight_reverse_moves_against_heading() {
        let p = VehicleParams::default();
        let col = column_at(0.0);
        let mut s = reversing(PI);
        for _ in 0..5000 {
            s = step_vehicle(&s, &col, &p, 1e-3);
        }
        assert!((s.x - 5.0).abs() < 1e-9);
        assert!(s.y.abs() < 1e-9);
        assert_eq!(s.heading, PI);
    }

    #[test]
    fn constant_steer_closes_the_circle() {
        let p = VehicleParams::default();
        let col = column_at(3.0);
        let delta = p.road_wheel_angle(3.0);
        let radius = p.wheelbase / delta.tan();
        let dt = 1e-3;
        let steps = (2.0 * PI * radius / dt).round() as usize;
        let mut s = reversing(0.3);
        let mut turned = 0.0;
        for _ in 0..steps {
            let next = step_vehicle(&s, &col, &p, dt);
            turned += normalize_angle(next.heading - s.heading);
            s = next;
        }
        assert!(s.x.hypot(s.y) < 1e-3 * radius, "closure {}", s.x.hypot(s.y));
        assert!((turned.abs() - 2.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn column_equilibrium_is_unchanged() {
        let c = column_at(0.0);
        assert_eq!(step_steering(&c, 0.0, 0.0, 1e-3), c);
    }

    #[test]
    fn column_settles_to_static_equilibrium() {
        let mut c = column_at(0.0);
        for _ in 0..20_000 {
            c = step_steering(&c, 0.5, 0.0, 1e-3);
        }
        assert!((c.theta - 0.5).abs() < 1e-4);
    }

    #[test]
    fn column_clamps_at_the_stop() {
        let mut c = SteeringColumn {
            max_angle: 1.0,
            ..Default::default()
        };
        for _ in 0..5000 {
            c = step_steering(&c, 5.0, 0.0, 1e-3);
            assert!(c.theta.abs() <= 1.0);
        }
        assert_eq!(c.theta, 1.0);
        assert_eq!(c.theta_dot, 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(VehicleParams::default().validate().is_ok());
        let bad = VehicleParams {
            wheelbase: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!((VehicleParams::default().min_turn_radius() - 5.0513).abs() < 1e-4);
    }
}
