//! Synthetic driver.
//!
//! Steering intent comes from a second-order preview law: the lateral error
//! is extrapolated over the preview horizon with its first and second
//! derivatives, `ê = e + T·ė + (T²/2)·ë`, and mapped to a desired column
//! angle, optionally on top of a curvature feedforward. The limb then turns
//! the delayed desired angle into torque through a spring-damper law with
//! additive noise.
//!
//! Parameter sets for a novice and an expert are anchors; intermediate
//! drivers interpolate between them by a scalar skill.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::planner::{BezierPath, PathProjection, TravelDirection, Vec2};
use crate::rng::NoiseSource;
use crate::sim::TrialMetrics;
use crate::vehicle::{SteeringColumn, VehicleParams};
use crate::{Error, Result};

/// Cutoff of the low-pass filters on the error derivatives.
pub const DERIVATIVE_CUTOFF_HZ: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PreviewParams {
    /// Preview horizon, seconds.
    pub preview_time: f64,
    /// Column angle per meter of predicted error, rad/m.
    pub error_gain: f64,
    pub feedforward_on: bool,
}

impl PreviewParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.preview_time > 0.0) {
            return Err(Error::invalid("preview_time must be > 0"));
        }
        if !(self.error_gain > 0.0) {
            return Err(Error::invalid("error_gain must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverParams {
    /// N·m/rad
    pub neuromuscular_gain: f64,
    /// N·m·s/rad
    pub neuromuscular_damping: f64,
    /// Pure delay on the desired angle, seconds.
    pub reaction_delay: f64,
    /// N·m
    pub torque_noise_std: f64,
    pub skill: f64,
    pub preview: PreviewParams,
}

pub const EXPERT_ERROR_GAIN: f64 = 40.0;
pub const EXPERT_PREVIEW_TIME: f64 = 1.0;

impl DriverParams {
    pub fn novice() -> Self {
        Self {
            neuromuscular_gain: 1.0,
            neuromuscular_damping: 0.05,
            reaction_delay: 0.3,
            torque_noise_std: 0.08,
            skill: 0.0,
            preview: PreviewParams {
                preview_time: EXPERT_PREVIEW_TIME,
                error_gain: 0.6 * EXPERT_ERROR_GAIN,
                feedforward_on: true,
            },
        }
    }

    pub fn expert() -> Self {
        Self {
            neuromuscular_gain: 3.0,
            neuromuscular_damping: 0.2,
            reaction_delay: 0.1,
            torque_noise_std: 0.02,
            skill: 1.0,
            preview: PreviewParams {
                preview_time: EXPERT_PREVIEW_TIME,
                error_gain: EXPERT_ERROR_GAIN,
                feedforward_on: true,
            },
        }
    }

    /// Componentwise linear blend of two anchors; `skill` is clamped to [0, 1].
    /// The feedforward flag follows whichever anchor is nearer.
    pub fn interpolate(novice: &DriverParams, expert: &DriverParams, skill: f64) -> DriverParams {
        let s = skill.clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64| a * (1.0 - s) + b * s;
        DriverParams {
            neuromuscular_gain: lerp(novice.neuromuscular_gain, expert.neuromuscular_gain),
            neuromuscular_damping: lerp(novice.neuromuscular_damping, expert.neuromuscular_damping),
            reaction_delay: lerp(novice.reaction_delay, expert.reaction_delay),
            torque_noise_std: lerp(novice.torque_noise_std, expert.torque_noise_std),
            skill: s,
            preview: PreviewParams {
                preview_time: lerp(novice.preview.preview_time, expert.preview.preview_time),
                error_gain: lerp(novice.preview.error_gain, expert.preview.error_gain),
                feedforward_on: if s < 0.5 {
                    novice.preview.feedforward_on
                } else {
                    expert.preview.feedforward_on
                },
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gains = [
            self.neuromuscular_gain,
            self.neuromuscular_damping,
            self.reaction_delay,
            self.torque_noise_std,
        ];
        if gains.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::invalid("driver gains, delay and noise must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.skill) {
            return Err(Error::invalid("skill must lie in [0, 1]"));
        }
        self.preview.validate()
    }
}

/// The path the driver wants to follow. It may differ from the assist's path.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverIntent {
    pub target_path: BezierPath,
}

/// Vehicle constants the preview law needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringGeometry {
    pub wheelbase: f64,
    pub steering_ratio: f64,
    pub max_column_angle: f64,
    pub travel: TravelDirection,
}

impl SteeringGeometry {
    pub fn new(params: &VehicleParams, travel: TravelDirection) -> Self {
        Self {
            wheelbase: params.wheelbase,
            steering_ratio: params.steering_ratio,
            max_column_angle: params.max_column_angle,
            travel,
        }
    }
}

/// Lateral error with its filtered derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorTerms {
    pub e: f64,
    pub e_dot: f64,
    pub e_ddot: f64,
}

/// Desired column angle from the error terms and the path curvature at the
/// foot point.
///
/// Reversing flips the sign of the yaw response to the wheel, so both the
/// feedback correction and the feedforward carry the travel sign. With
/// `s = ±1` for forward/reverse travel:
/// `θ_d = s·ratio·atan(L·κ) − s·k·ê`, clamped to the column stop.
pub fn desired_steer(terms: ErrorTerms, signed_curvature: f64, prev: &PreviewParams, geo: &SteeringGeometry) -> f64 {
    let s = geo.travel.sign();
    let t = prev.preview_time;
    let predicted = terms.e + t * terms.e_dot + 0.5 * t * t * terms.e_ddot;
    let feedback = -s * prev.error_gain * predicted;
    let feedforward = if prev.feedforward_on {
        s * geo.steering_ratio * (geo.wheelbase * signed_curvature).atan()
    } else {
        0.0
    };
    (feedforward + feedback).clamp(-geo.max_column_angle, geo.max_column_angle)
}

/// Output of one preview evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreviewOutput {
    pub theta_d: f64,
    pub projection: PathProjection,
    pub terms: ErrorTerms,
}

/// Stateful wrapper around [`desired_steer`]: projects onto the target path,
/// differentiates the error with two- and three-point backward differences
/// and low-passes both derivatives.
#[derive(Debug, Clone)]
pub struct PreviewSteering {
    params: PreviewParams,
    geometry: SteeringGeometry,
    dt: f64,
    alpha: f64,
    history: [Option<f64>; 2],
    e_dot: f64,
    e_ddot: f64,
    u_hint: f64,
}

impl PreviewSteering {
    pub fn new(params: PreviewParams, geometry: SteeringGeometry, dt: f64) -> Self {
        let tau = 1.0 / (2.0 * PI * DERIVATIVE_CUTOFF_HZ);
        Self {
            params,
            geometry,
            dt,
            alpha: dt / (dt + tau),
            history: [None, None],
            e_dot: 0.0,
            e_ddot: 0.0,
            u_hint: 0.0,
        }
    }

    pub fn params(&self) -> &PreviewParams {
        &self.params
    }

    pub fn update(&mut self, position: Vec2, path: &BezierPath) -> PreviewOutput {
        let projection = path.project(position, self.u_hint);
        self.u_hint = projection.u_star;
        let e = projection.lateral_error;
        if let Some(e1) = self.history[0] {
            let raw = (e - e1) / self.dt;
            self.e_dot += self.alpha * (raw - self.e_dot);
            if let Some(e2) = self.history[1] {
                let raw = (e - 2.0 * e1 + e2) / (self.dt * self.dt);
                self.e_ddot += self.alpha * (raw - self.e_ddot);
            }
        }
        self.history = [Some(e), self.history[0]];
        let terms = ErrorTerms {
            e,
            e_dot: self.e_dot,
            e_ddot: self.e_ddot,
        };
        let kappa = path.eval(projection.u_star).map_or(0.0, |s| s.signed_curvature);
        PreviewOutput {
            theta_d: desired_steer(terms, kappa, &self.params, &self.geometry),
            projection,
            terms,
        }
    }
}

/// Muscle torque and the torque the limb delivers to the wheel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimbTorque {
    /// Active muscle torque: spring term plus noise.
    pub tau_msl: f64,
    /// Torque at the wheel: muscle torque minus limb damping.
    pub tau_c: f64,
}

/// `τ_c = k·(θ_d − θ) − b·θ̇ + n`; the damping part is attributed to the limb,
/// so `τ_msl` excludes it.
pub fn muscle_torque(
    theta_d_delayed: f64,
    column: &SteeringColumn,
    params: &DriverParams,
    noise: &mut NoiseSource,
) -> LimbTorque {
    let n = noise.sample();
    let tau_msl = params.neuromuscular_gain * (theta_d_delayed - column.theta) + n;
    LimbTorque {
        tau_msl,
        tau_c: tau_msl - params.neuromuscular_damping * column.theta_dot,
    }
}

/// Cross-trial skill growth: `skill + rate·max(0, 1 − rms_e/e_ref)`, clamped
/// to [0, 1]. This is a harness rule, not a model of motor learning.
pub fn skill_update(skill: f64, metrics: &TrialMetrics, rate: f64, e_ref: f64) -> f64 {
    let quality = if e_ref > 0.0 {
        (1.0 - metrics.rms_e / e_ref).max(0.0)
    } else {
        0.0
    };
    (skill + rate.max(0.0) * quality).clamp(0.0, 1.0)
}

/// One synthetic driver for one trial: preview on its own intent path,
/// reaction delay line, limb law and noise stream.
#[derive(Debug, Clone)]
pub struct Driver {
    params: DriverParams,
    preview: PreviewSteering,
    delay: VecDeque<f64>,
    noise: NoiseSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverOutput {
    pub theta_d: f64,
    pub theta_d_delayed: f64,
    pub torque: LimbTorque,
    pub projection: PathProjection,
}

impl Driver {
    pub fn new(params: DriverParams, geometry: SteeringGeometry, control_dt: f64, initial_theta: f64, seed: u64) -> Self {
        let delay_ticks = (params.reaction_delay / control_dt).round() as usize;
        let preview = PreviewSteering::new(params.preview.clone(), geometry, control_dt);
        let noise = NoiseSource::new(seed, params.torque_noise_std);
        Self {
            params,
            preview,
            delay: std::iter::repeat_n(initial_theta, delay_ticks).collect(),
            noise,
        }
    }

    pub fn params(&self) -> &DriverParams {
        &self.params
    }

    pub fn step(&mut self, position: Vec2, intent: &DriverIntent, column: &SteeringColumn) -> DriverOutput {
        let out = self.preview.update(position, &intent.target_path);
        self.delay.push_back(out.theta_d);
        let delayed = self.delay.pop_front().expect("delay line holds at least the new value");
        DriverOutput {
            theta_d: out.theta_d,
            theta_d_delayed: delayed,
            torque: muscle_torque(delayed, column, &self.params, &mut self.noise),
            projection: out.projection,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo() -> SteeringGeometry {
        SteeringGeometry::new(&VehicleParams::default(), TravelDirection::Reverse)
    }

    fn quiet(gain: f64, damping: f64) -> DriverParams {
        DriverParams {
            neuromuscular_gain: gain,
            neuromuscular_damping: damping,
            torque_noise_std: 0.0,
            ..DriverParams::expert()
        }
    }

    #[test]
    fn zero_error_on_straight_path_gives_zero_angle() {
        let prev = DriverParams::expert().preview;
        assert_eq!(desired_steer(ErrorTerms::default(), 0.0, &prev, &geo()), 0.0);

        let path = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-3.0, 0.0),
            Vec2::new(-7.0, 0.0),
            Vec2::new(-10.0, 0.0),
        ]);
        let mut p = PreviewSteering::new(prev, geo(), 0.01);
        for i in 0..5 {
            let out = p.update(Vec2::new(-0.1 * i as f64, 0.0), &path);
            assert_eq!(out.theta_d, 0.0, "{out:?}");
        }
    }

    #[test]
    fn on_arc_only_feedforward_remains() {
        let prev = DriverParams::expert().preview;
        let g = geo();
        let kappa = 0.1;
        let ff = -g.steering_ratio * (g.wheelbase * kappa).atan();
        assert_eq!(desired_steer(ErrorTerms::default(), kappa, &prev, &g), ff);
    }

    #[test]
    fn feedback_sign_flips_with_travel() {
        let prev = DriverParams::expert().preview;
        let terms = ErrorTerms {
            e: 0.1,
            ..Default::default()
        };
        let rev = desired_steer(terms, 0.0, &prev, &geo());
        let fwd = desired_steer(
            terms,
            0.0,
            &prev,
            &SteeringGeometry {
                travel: TravelDirection::Forward,
                ..geo()
            },
        );
        assert!(rev > 0.0 && fwd < 0.0);
        assert_eq!(rev, -fwd);
    }

    #[test]
    fn output_is_clamped() {
        let prev = DriverParams::expert().preview;
        let terms = ErrorTerms {
            e: 100.0,
            ..Default::default()
        };
        assert_eq!(desired_steer(terms, 0.0, &prev, &geo()), geo().max_column_angle);
    }

    #[test]
    fn muscle_torque_law() {
        let col = SteeringColumn {
            theta: 0.4,
            ..Default::default()
        };
        let mut n = NoiseSource::new(1, 0.0);
        assert_eq!(muscle_torque(0.4, &col, &quiet(3.0, 0.2), &mut n).tau_c, 0.0);
        let t = muscle_torque(0.5, &col, &quiet(2.0, 0.0), &mut n);
        assert!((t.tau_c - 0.2).abs() < 1e-15);

        let moving = SteeringColumn {
            theta_dot: 2.0,
            ..col
        };
        let t = muscle_torque(0.4, &moving, &quiet(2.0, 0.25), &mut n);
        assert_eq!(t.tau_msl, 0.0);
        assert_eq!(t.tau_c, -0.5);
    }

    #[test]
    fn noise_sequence_is_seeded() {
        let col = SteeringColumn::default();
        let p = DriverParams::novice();
        let run = |seed| {
            let mut n = NoiseSource::new(seed, p.torque_noise_std);
            (0..50).map(|_| muscle_torque(0.1, &col, &p, &mut n).tau_c).collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn delay_line_holds_initial_angle() {
        let path = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-3.0, 0.0),
            Vec2::new(-7.0, 0.0),
            Vec2::new(-10.0, 0.0),
        ]);
        let intent = DriverIntent { target_path: path };
        let params = quiet(3.0, 0.0);
        let mut d = Driver::new(params, geo(), 0.01, 0.0, 3);
        // 0.5 m left of the path: desired angle is immediate, delivery waits 10 ticks
        for tick in 0..12 {
            let out = d.step(Vec2::new(-1.0, -0.5), &intent, &SteeringColumn::default());
            assert!(out.theta_d != 0.0);
            if tick < 10 {
                assert_eq!(out.theta_d_delayed, 0.0);
            } else {
                assert!(out.theta_d_delayed != 0.0);
            }
        }
    }

    fn metrics(rms_e: f64) -> TrialMetrics {
        TrialMetrics {
            rms_e,
            ..TrialMetrics::default()
        }
    }

    #[test]
    fn skill_update_rule() {
        assert_eq!(skill_update(0.3, &metrics(0.1), 0.0, 0.5), 0.3);
        assert_eq!(skill_update(0.3, &metrics(0.5), 0.2, 0.5), 0.3);
        assert_eq!(skill_update(0.3, &metrics(0.9), 0.2, 0.5), 0.3);
        assert_eq!(skill_update(0.9, &metrics(0.0), 0.5, 0.5), 1.0);
        let a = skill_update(0.2, &metrics(0.1), 0.1, 0.5);
        let b = skill_update(0.2, &metrics(0.3), 0.1, 0.5);
        assert!(a > b);
    }

    #[test]
    fn interpolation_stays_between_anchors() {
        let n = DriverParams::novice();
        let e = DriverParams::expert();
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            let p = DriverParams::interpolate(&n, &e, s);
            let between = |x: f64, a: f64, b: f64| x >= a.min(b) - 1e-15 && x <= a.max(b) + 1e-15;
            assert!(between(p.neuromuscular_gain, n.neuromuscular_gain, e.neuromuscular_gain));
            assert!(between(p.neuromuscular_damping, n.neuromuscular_damping, e.neuromuscular_damping));
            assert!(between(p.reaction_delay, n.reaction_delay, e.reaction_delay));
            assert!(between(p.torque_noise_std, n.torque_noise_std, e.torque_noise_std));
            assert!(between(p.preview.error_gain, n.preview.error_gain, e.preview.error_gain));
            assert!(between(p.preview.preview_time, n.preview.preview_time, e.preview.preview_time));
            assert!(p.validate().is_ok());
        }
        assert_eq!(DriverParams::interpolate(&n, &e, 0.0), n);
        assert_eq!(DriverParams::interpolate(&n, &e, 1.0), e);
    }
}
