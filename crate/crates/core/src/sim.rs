//! Fixed-step closed loop: planned path, driver, assist, column and vehicle.
//!
//! Physics runs at `dt`; driver, assist and the pseudo-work meter run every
//! `control_dt`, an integer multiple of `dt`. Per control tick, in order:
//! project onto both target paths, driver torque, assist torque, classify,
//! log, then integrate column and vehicle over the tick with both torques
//! held. Everything random comes from the scenario seed, so a trial is a pure
//! function of its inputs.

use std::fmt::Write as _;

use crate::assist::{assist_torque, AssistConfig};
use crate::coop::{state_occupancy, CoopState, Occupancy, PseudoWorkConfig, PseudoWorkMeter};
use crate::driver::{Driver, DriverIntent, DriverParams, PreviewSteering, SteeringGeometry};
use crate::fmt::sig9;
use crate::planner::{normalize_angle, plan_parking_path, BezierPath, PlannerConfig, Pose2D, Vec2};
use crate::rng::derive_seed;
use crate::vehicle::{step_steering, step_vehicle, SteeringColumn, VehicleParams, VehicleState};
use crate::{Error, Result};

/// Which signal the pseudo-works integrate torque against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocitySignal {
    /// Rate of the signed lateral error to the planned path, expressed in the
    /// steering sense (positive column torque produces a positive rate).
    #[default]
    LateralErrorRate,
    /// Column angular rate θ̇.
    ColumnRate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureTolerance {
    /// meters
    pub position: f64,
    /// radians
    pub heading: f64,
}

impl Default for CaptureTolerance {
    fn default() -> Self {
        Self {
            position: 0.15,
            heading: 5f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub start: Pose2D,
    pub goal: Pose2D,
    pub planner: PlannerConfig,
    pub vehicle: VehicleParams,
    /// Initial column state and its physical parameters.
    pub column: SteeringColumn,
    /// Physics step, seconds.
    pub dt: f64,
    /// Controller step, seconds.
    pub control_dt: f64,
    pub timeout: f64,
    pub capture: CaptureTolerance,
    pub seed: u64,
    pub pseudo_work: PseudoWorkConfig,
    pub velocity_signal: VelocitySignal,
    /// Linear ramp from rest to cruise speed, seconds.
    pub speed_ramp: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ScenarioConfig {
    /// Perpendicular reverse parking: back along −x, then swing into a slot
    /// whose axis points along +y.
    pub fn canonical() -> Self {
        let vehicle = VehicleParams::default();
        let column = SteeringColumn {
            max_angle: vehicle.max_column_angle,
            ..SteeringColumn::default()
        };
        Self {
            start: Pose2D::new(0.0, 0.0, 0.0),
            goal: Pose2D::new(-15.0, -12.0, std::f64::consts::FRAC_PI_2),
            planner: PlannerConfig::default(),
            vehicle,
            column,
            dt: 1e-3,
            control_dt: 1e-2,
            timeout: 60.0,
            capture: CaptureTolerance::default(),
            seed: 1,
            pseudo_work: PseudoWorkConfig::default(),
            velocity_signal: VelocitySignal::default(),
            speed_ramp: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(Error::invalid("dt must lie in (0, 0.01]"));
        }
        self.control_ticks()?;
        if !(self.timeout > 0.0) {
            return Err(Error::invalid("timeout must be > 0"));
        }
        if !(self.capture.position > 0.0 && self.capture.heading > 0.0) {
            return Err(Error::invalid("capture tolerances must be > 0"));
        }
        if !(self.speed_ramp >= 0.0) {
            return Err(Error::invalid("speed_ramp must be >= 0"));
        }
        self.planner.validate()?;
        self.vehicle.validate()?;
        self.column.validate()?;
        self.pseudo_work.validate()?;
        if (self.vehicle.reverse_speed < 0.0) != (self.planner.travel.sign() < 0.0) {
            return Err(Error::invalid("vehicle speed sign disagrees with the planner's travel direction"));
        }
        Ok(())
    }

    /// Physics substeps per control tick.
    pub fn control_ticks(&self) -> Result<usize> {
        let ratio = self.control_dt / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(Error::invalid("control_dt must be a positive integer multiple of dt"));
        }
        Ok(n as usize)
    }

    pub fn plan(&self) -> Result<BezierPath> {
        plan_parking_path(self.start, self.goal, &self.planner).map_err(|e| Error::PlanInfeasible(Box::new(e)))
    }

    pub fn geometry(&self) -> SteeringGeometry {
        SteeringGeometry::new(&self.vehicle, self.planner.travel)
    }

    fn speed_at(&self, t: f64) -> f64 {
        if self.speed_ramp <= 0.0 {
            self.vehicle.reverse_speed
        } else {
            self.vehicle.reverse_speed * (t / self.speed_ramp).min(1.0)
        }
    }
}

/// Driver parameters plus, optionally, a target path of its own. Without an
/// intent the driver follows the planned path.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverSetup {
    pub params: DriverParams,
    pub intent: Option<DriverIntent>,
}

impl DriverSetup {
    pub fn following(params: DriverParams) -> Self {
        Self { params, intent: None }
    }
}

/// Intent for a driver aiming at a slot shifted sideways from the planned
/// one: `offset` meters to the left of the motion into the slot. For the
/// canonical left-hand swing a positive offset moves the slot toward the
/// inside of the turn.
pub fn shifted_goal_intent(scenario: &ScenarioConfig, offset: f64) -> Result<DriverIntent> {
    let left = scenario.planner.travel.motion_direction(scenario.goal.heading).perp();
    let g = scenario.goal.position() + offset * left;
    let goal = Pose2D::new(g.x, g.y, scenario.goal.heading);
    let target_path = plan_parking_path(scenario.start, goal, &scenario.planner)?;
    Ok(DriverIntent { target_path })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub theta: f64,
    pub theta_d_driver: f64,
    pub theta_d_assist: f64,
    pub tau_msl: f64,
    pub tau_c: f64,
    pub tau_das: f64,
    /// Signed lateral error to the planned path.
    pub e: f64,
    pub w_c: Option<f64>,
    pub w_das: Option<f64>,
    pub state: Option<CoopState>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub captured: bool,
    pub final_pose: Pose2D,
    pub final_position_error: f64,
    pub final_heading_error: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub path: BezierPath,
    pub initial_pose: Pose2D,
    pub initial_column: SteeringColumn,
    pub records: Vec<StepRecord>,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialMetrics {
    pub rms_e: f64,
    pub mean_abs_tau_c: f64,
    pub mean_w_c: f64,
    pub mean_w_das: f64,
    /// Largest assist torque magnitude in the trial.
    pub max_abs_tau_das: f64,
    pub final_position_error: f64,
    pub final_heading_error: f64,
    pub duration: f64,
    /// Over classified records; `None` when the trial ended inside the first
    /// pseudo-work window.
    pub occupancy: Option<Occupancy>,
    pub captured: bool,
}

/// Plans the scenario's path and runs the trial from the scenario start.
pub fn run_trial(scenario: &ScenarioConfig, driver: &DriverSetup, assist: &AssistConfig) -> Result<TrialLog> {
    scenario.validate()?;
    let path = scenario.plan()?;
    run_trial_on_path(scenario, &path, scenario.start, driver, assist)
}

/// Runs one trial along an already planned path, starting the vehicle at
/// `initial_pose` (which may be off the path).
pub fn run_trial_on_path(
    scenario: &ScenarioConfig,
    path: &BezierPath,
    initial_pose: Pose2D,
    driver: &DriverSetup,
    assist: &AssistConfig,
) -> Result<TrialLog> {
    scenario.validate()?;
    driver.params.validate()?;
    assist.validate()?;
    let substeps = scenario.control_ticks()?;
    let geometry = scenario.geometry();
    let travel_sign = scenario.planner.travel.sign();
    let goal = scenario.goal;
    let goal_motion = scenario.planner.travel.motion_direction(goal.heading);

    let intent = driver.intent.clone().unwrap_or(DriverIntent { target_path: *path });
    let mut human = Driver::new(
        driver.params.clone(),
        geometry,
        scenario.control_dt,
        scenario.column.theta,
        derive_seed(scenario.seed, &[0xD1]),
    );
    let mut guidance = PreviewSteering::new(assist.preview.clone(), geometry, scenario.control_dt);
    let mut meter = PseudoWorkMeter::new(scenario.pseudo_work.clone(), scenario.control_dt)?;

    let mut vehicle = VehicleState::at_rest(initial_pose);
    let mut column = scenario.column;
    let max_ticks = (scenario.timeout / scenario.control_dt).round() as usize;
    let mut records = Vec::with_capacity(max_ticks.min(1 << 16));
    let mut captured = false;
    let mut tick = 0usize;

    loop {
        let t = tick as f64 * scenario.control_dt;
        let pos = Vec2::new(vehicle.x, vehicle.y);

        let position_error = (pos - goal.position()).norm();
        let heading_error = normalize_angle(vehicle.heading - goal.heading).abs();
        if position_error <= scenario.capture.position && heading_error <= scenario.capture.heading {
            captured = true;
            break;
        }
        if tick >= max_ticks {
            break;
        }
        // Past the slot along its axis: the attempt is over.
        if (pos - goal.position()).dot(goal_motion) > scenario.capture.position && tick > 0 {
            let along = path.project(pos, 1.0);
            if along.u_star >= 1.0 {
                break;
            }
        }

        let assist_view = guidance.update(pos, path);
        let e = assist_view.projection.lateral_error;
        let v_signal = match scenario.velocity_signal {
            VelocitySignal::LateralErrorRate => {
                let velocity = vehicle.speed * Vec2::from_angle(vehicle.heading);
                travel_sign * velocity.dot(assist_view.projection.tangent.perp())
            }
            VelocitySignal::ColumnRate => column.theta_dot,
        };
        vehicle.lateral_velocity_signal = v_signal;

        let human_out = human.step(pos, &intent, &column);
        let tau_c = human_out.torque.tau_c;
        let tau_das = assist_torque(e, column.theta, assist_view.theta_d, assist);

        let classified = meter.push(t, tau_c, tau_das, v_signal);
        records.push(StepRecord {
            t,
            x: vehicle.x,
            y: vehicle.y,
            heading: vehicle.heading,
            theta: column.theta,
            theta_d_driver: human_out.theta_d,
            theta_d_assist: assist_view.theta_d,
            tau_msl: human_out.torque.tau_msl,
            tau_c,
            tau_das,
            e,
            w_c: classified.map(|c| c.0.w_c),
            w_das: classified.map(|c| c.0.w_das),
            state: classified.map(|c| c.1),
        });

        for sub in 0..substeps {
            let ts = t + sub as f64 * scenario.dt;
            column = step_steering(&column, tau_c, tau_das, scenario.dt);
            vehicle.speed = scenario.speed_at(ts);
            vehicle = step_vehicle(&vehicle, &column, &scenario.vehicle, scenario.dt);
        }
        if !vehicle.is_finite() || !column.theta.is_finite() || !column.theta_dot.is_finite() {
            return Err(Error::NumericalDivergence {
                t: (tick + 1) as f64 * scenario.control_dt,
                what: "vehicle or column state",
            });
        }
        if !(tau_c.is_finite() && tau_das.is_finite()) {
            return Err(Error::NumericalDivergence { t, what: "torque" });
        }
        tick += 1;
    }

    let final_pose = vehicle.pose();
    Ok(TrialLog {
        path: *path,
        initial_pose,
        initial_column: scenario.column,
        records,
        outcome: TrialOutcome {
            captured,
            final_pose,
            final_position_error: (final_pose.position() - goal.position()).norm(),
            final_heading_error: normalize_angle(final_pose.heading - goal.heading).abs(),
            duration: tick as f64 * scenario.control_dt,
        },
    })
}

pub fn compute_metrics(log: &TrialLog) -> Result<TrialMetrics> {
    let records = &log.records;
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    let n = records.len() as f64;
    let rms_e = (records.iter().map(|r| r.e * r.e).sum::<f64>() / n).sqrt();
    let mean_abs_tau_c = records.iter().map(|r| r.tau_c.abs()).sum::<f64>() / n;

    let classified: Vec<&StepRecord> = records.iter().filter(|r| r.state.is_some()).collect();
    let mean_of = |f: fn(&StepRecord) -> Option<f64>| {
        let vals: Vec<f64> = records.iter().filter_map(f).collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    let timeline: Vec<CoopState> = classified.iter().filter_map(|r| r.state).collect();
    Ok(TrialMetrics {
        rms_e,
        mean_abs_tau_c,
        mean_w_c: mean_of(|r| r.w_c),
        mean_w_das: mean_of(|r| r.w_das),
        max_abs_tau_das: records.iter().fold(0.0, |m, r| m.max(r.tau_das.abs())),
        final_position_error: log.outcome.final_position_error,
        final_heading_error: log.outcome.final_heading_error,
        duration: log.outcome.duration,
        occupancy: state_occupancy(&timeline).ok(),
        captured: log.outcome.captured,
    })
}

pub const TRIAL_LOG_HEADER: &str = "t,x,y,heading,theta,theta_d_driver,theta_d_assist,tau_msl,tau_c,tau_das,e,w_c,w_das,state";

impl TrialLog {
    /// CSV text of the records with nine significant digits; undefined
    /// pseudo-work fields are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 160);
        out.push_str(TRIAL_LOG_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(sig9).unwrap_or_default();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                sig9(r.t),
                sig9(r.x),
                sig9(r.y),
                sig9(r.heading),
                sig9(r.theta),
                sig9(r.theta_d_driver),
                sig9(r.theta_d_assist),
                sig9(r.tau_msl),
                sig9(r.tau_c),
                sig9(r.tau_das),
                sig9(r.e),
                opt(r.w_c),
                opt(r.w_das),
                r.state.map(|s| s.label()).unwrap_or_default(),
            );
        }
        out
    }
}

/// Reads records back from the trial-log CSV format.
pub fn parse_trial_log_csv(text: &str) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != TRIAL_LOG_HEADER {
        return Err(Error::Csv("unexpected trial log header".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Csv(e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            row[j]
                .parse::<f64>()
                .map_err(|_| Error::Csv(format!("row {}: bad number in column {}", i + 2, j + 1)))
        };
        let opt = |j: usize| -> Result<Option<f64>> {
            if row[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let state = if row[13].is_empty() {
            None
        } else {
            Some(row[13].parse::<CoopState>()?)
        };
        out.push(StepRecord {
            t: num(0)?,
            x: num(1)?,
            y: num(2)?,
            heading: num(3)?,
            theta: num(4)?,
            theta_d_driver: num(5)?,
            theta_d_assist: num(6)?,
            tau_msl: num(7)?,
            tau_c: num(8)?,
            tau_das: num(9)?,
            e: num(10)?,
            w_c: opt(11)?,
            w_das: opt(12)?,
            state,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assist::GainCondition;

    fn record(e: f64, tau_c: f64) -> StepRecord {
        StepRecord {
            t: 0.0,
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            theta: 0.0,
            theta_d_driver: 0.0,
            theta_d_assist: 0.0,
            tau_msl: 0.0,
            tau_c,
            tau_das: 0.0,
            e,
            w_c: None,
            w_das: None,
            state: None,
        }
    }

    fn log_of(records: Vec<StepRecord>) -> TrialLog {
        TrialLog {
            path: BezierPath::new([Vec2::default(); 4]),
            initial_pose: Pose2D::new(0.0, 0.0, 0.0),
            initial_column: SteeringColumn::default(),
            records,
            outcome: TrialOutcome {
                captured: true,
                final_pose: Pose2D::new(0.0, 0.0, 0.0),
                final_position_error: 0.01,
                final_heading_error: 0.02,
                duration: 3.0,
            },
        }
    }

    #[test]
    fn metrics_of_zero_error() {
        let m = compute_metrics(&log_of(vec![record(0.0, 1.0); 10])).unwrap();
        assert_eq!(m.rms_e, 0.0);
        assert_eq!(m.mean_abs_tau_c, 1.0);
        assert!(m.captured);
        assert!(m.occupancy.is_none());
    }

    #[test]
    fn metrics_of_alternating_error() {
        let recs = (0..20).map(|i| record(if i % 2 == 0 { 0.1 } else { -0.1 }, -2.0)).collect();
        let m = compute_metrics(&log_of(recs)).unwrap();
        assert!((m.rms_e - 0.1).abs() < 1e-15);
        assert_eq!(m.mean_abs_tau_c, 2.0);
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(compute_metrics(&log_of(vec![])), Err(Error::EmptyLog));
    }

    #[test]
    fn scenario_validation() {
        assert!(ScenarioConfig::canonical().validate().is_ok());
        let bad = ScenarioConfig {
            control_dt: 0.0105,
            ..ScenarioConfig::canonical()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig {
            dt: 0.02,
            control_dt: 0.02,
            ..ScenarioConfig::canonical()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn infeasible_plan_is_reported() {
        let s = ScenarioConfig {
            goal: Pose2D::new(0.0, -1.0, std::f64::consts::PI),
            ..ScenarioConfig::canonical()
        };
        let assist = AssistConfig::for_condition(GainCondition::A, DriverParams::expert().preview);
        let r = run_trial(&s, &DriverSetup::following(DriverParams::expert()), &assist);
        assert!(matches!(r, Err(Error::PlanInfeasible(_))));
    }

    #[test]
    fn csv_round_trip_keeps_sentinels() {
        let mut a = record(0.25, 1.5);
        a.t = 0.01;
        let mut b = record(-0.5, 2.0);
        b.t = 0.02;
        b.w_c = Some(0.125);
        b.w_das = Some(-0.5);
        b.state = Some(CoopState::DriverLedUncooperative);
        let text = log_of(vec![a, b]).to_csv();
        let back = parse_trial_log_csv(&text).unwrap();
        assert_eq!(back, vec![a, b]);
    }
}
