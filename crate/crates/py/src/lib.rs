//! Python bindings: path planning, cooperative-state classification, single
//! trials and the phase protocol, driven by the same configuration text as
//! the command line.

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hsc_core::assist::{AssistConfig, GainCondition};
use hsc_core::config::RunConfig;
use hsc_core::coop::{self, CoopState, PseudoWorkConfig};
use hsc_core::experiment::{run_experiment, summary_table, trial_rows_csv, Correlation};
use hsc_core::planner::{self, PlannerConfig, Pose2D, TravelDirection, Vec2};
use hsc_core::sim::{compute_metrics, run_trial, shifted_goal_intent, DriverSetup, TrialLog, TrialMetrics};
use hsc_core::Error;

create_exception!(hsc_park, PlanningError, PyValueError, "No admissible path for the requested poses.");
create_exception!(hsc_park, DivergenceError, PyArithmeticError, "The simulation produced a non-finite state.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Infeasible { .. } | Error::PlanInfeasible(_) => PlanningError::new_err(e.to_string()),
        Error::NumericalDivergence { .. } => DivergenceError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pose((x, y, heading): (f64, f64, f64)) -> Pose2D {
    Pose2D::new(x, y, heading)
}

fn travel(name: &str) -> PyResult<TravelDirection> {
    match name {
        "reverse" => Ok(TravelDirection::Reverse),
        "forward" => Ok(TravelDirection::Forward),
        other => Err(PyValueError::new_err(format!("travel must be 'reverse' or 'forward', got {other:?}"))),
    }
}

fn condition(label: &str) -> PyResult<GainCondition> {
    label.parse().map_err(to_py)
}

/// Cubic Bezier parking path.
#[pyclass(name = "BezierPath", module = "hsc_park", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBezierPath {
    inner: planner::BezierPath,
}

#[pymethods]
impl PyBezierPath {
    #[new]
    fn new(control_points: [(f64, f64); 4]) -> Self {
        Self {
            inner: planner::BezierPath::new(control_points.map(|(x, y)| Vec2::new(x, y))),
        }
    }

    #[getter]
    fn control_points(&self) -> Vec<(f64, f64)> {
        self.inner.control_points.iter().map(|p| (p.x, p.y)).collect()
    }

    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[pyo3(signature = (samples = 256))]
    fn max_curvature(&self, samples: usize) -> f64 {
        self.inner.max_curvature(samples)
    }

    fn point(&self, u: f64) -> (f64, f64) {
        let p = self.inner.point(u);
        (p.x, p.y)
    }

    fn curvature(&self, u: f64) -> f64 {
        self.inner.curvature(u)
    }

    /// Closest point to `(x, y)`: dict with `u`, `lateral_error`,
    /// `arc_position` and `foot`.
    #[pyo3(signature = (x, y, u_hint = 0.0))]
    fn project<'py>(&self, py: Python<'py>, x: f64, y: f64, u_hint: f64) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.project(Vec2::new(x, y), u_hint);
        let d = PyDict::new(py);
        d.set_item("u", p.u_star)?;
        d.set_item("lateral_error", p.lateral_error)?;
        d.set_item("arc_position", p.arc_position)?;
        d.set_item("foot", (p.foot.x, p.foot.y))?;
        Ok(d)
    }

    fn to_csv(&self) -> String {
        format!("{}\n{}\n", planner::BezierPath::CSV_HEADER, self.inner.to_csv_row())
    }

    fn __repr__(&self) -> String {
        format!("BezierPath({:?})", self.control_points())
    }
}

/// Shortest admissible path from `start` to `goal`, poses as
/// `(x, y, heading)`.
#[pyfunction]
#[pyo3(signature = (start, goal, min_turn_radius = 8.0, travel = "reverse"))]
fn plan_path(start: (f64, f64, f64), goal: (f64, f64, f64), min_turn_radius: f64, travel: &str) -> PyResult<PyBezierPath> {
    let cfg = PlannerConfig {
        min_turn_radius,
        travel: self::travel(travel)?,
        ..PlannerConfig::default()
    };
    let inner = planner::plan_parking_path(pose(start), pose(goal), &cfg).map_err(to_py)?;
    Ok(PyBezierPath { inner })
}

/// Cooperative state label ("I" to "V") of one pseudo-work pair.
#[pyfunction]
#[pyo3(signature = (w_c, w_das, gamma1_sq = 0.01, gamma2_sq = 0.01))]
fn classify(w_c: f64, w_das: f64, gamma1_sq: f64, gamma2_sq: f64) -> PyResult<&'static str> {
    let cfg = PseudoWorkConfig {
        gamma1_sq,
        gamma2_sq,
        ..PseudoWorkConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    Ok(coop::classify(w_c, w_das, &cfg).label())
}

/// Window-averaged power of `tau` against `v` ending at time `t`.
#[pyfunction]
#[pyo3(signature = (tau, v, dt, t, window, t0 = 0.0))]
fn pseudo_work(tau: Vec<f64>, v: Vec<f64>, dt: f64, t: f64, window: f64, t0: f64) -> PyResult<f64> {
    coop::pseudo_work(&tau, &v, t0, dt, t, window).map_err(to_py)
}

type Labelled = Option<(f64, f64, &'static str)>;

/// Labels a uniformly sampled series. Entries before a full window are
/// `None`, the rest `(w_c, w_das, state)`.
#[pyfunction]
#[pyo3(signature = (t, tau_c, tau_das, v, window = 0.5, gamma1_sq = 0.01, gamma2_sq = 0.01))]
fn classify_series(
    t: Vec<f64>,
    tau_c: Vec<f64>,
    tau_das: Vec<f64>,
    v: Vec<f64>,
    window: f64,
    gamma1_sq: f64,
    gamma2_sq: f64,
) -> PyResult<Vec<Labelled>> {
    let cfg = PseudoWorkConfig {
        window,
        gamma1_sq,
        gamma2_sq,
    };
    let out = coop::classify_series(&t, &tau_c, &tau_das, &v, &cfg).map_err(to_py)?;
    Ok(out
        .into_iter()
        .map(|o| o.map(|(p, s)| (p.w_c, p.w_das, s.label())))
        .collect())
}

fn metrics_dict<'py>(py: Python<'py>, m: &TrialMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("captured", m.captured)?;
    d.set_item("duration", m.duration)?;
    d.set_item("rms_e", m.rms_e)?;
    d.set_item("mean_abs_tau_c", m.mean_abs_tau_c)?;
    d.set_item("mean_w_c", m.mean_w_c)?;
    d.set_item("mean_w_das", m.mean_w_das)?;
    d.set_item("max_abs_tau_das", m.max_abs_tau_das)?;
    d.set_item("final_position_error", m.final_position_error)?;
    d.set_item("final_heading_error", m.final_heading_error)?;
    if let Some(occ) = &m.occupancy {
        let o = PyDict::new(py);
        for s in CoopState::ALL {
            o.set_item(s.label(), occ.get(s))?;
        }
        d.set_item("occupancy", o)?;
    } else {
        d.set_item("occupancy", py.None())?;
    }
    Ok(d)
}

fn log_columns<'py>(py: Python<'py>, log: &TrialLog) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let r = &log.records;
    let col = |f: fn(&hsc_core::sim::StepRecord) -> f64| r.iter().map(f).collect::<Vec<f64>>();
    d.set_item("t", col(|x| x.t))?;
    d.set_item("x", col(|x| x.x))?;
    d.set_item("y", col(|x| x.y))?;
    d.set_item("heading", col(|x| x.heading))?;
    d.set_item("theta", col(|x| x.theta))?;
    d.set_item("tau_c", col(|x| x.tau_c))?;
    d.set_item("tau_das", col(|x| x.tau_das))?;
    d.set_item("e", col(|x| x.e))?;
    d.set_item("state", r.iter().map(|x| x.state.map(|s| s.label())).collect::<Vec<_>>())?;
    Ok(d)
}

/// Full run configuration. `text` uses the same TOML sections as the
/// command line's `--config` file.
#[pyclass(name = "RunConfig", module = "hsc_park")]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => RunConfig::parse(t).map_err(to_py)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    /// Applies more configuration text on top of the current values.
    fn update(&mut self, text: &str) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.apply_text(text).map_err(to_py)?;
        self.inner = next;
        Ok(())
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Runs one trial. Returns `{"metrics": {...}, "log": {column: [...]},
    /// "log_csv": str}`.
    #[pyo3(signature = (condition = None, skill = None, seed = None, intent_offset = None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        condition: Option<&str>,
        skill: Option<f64>,
        seed: Option<u64>,
        intent_offset: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = self.inner.clone();
        if let Some(c) = condition {
            cfg.simulate.condition = self::condition(c)?;
        }
        if let Some(s) = skill {
            cfg.simulate.driver_skill = s;
        }
        if let Some(s) = seed {
            cfg.scenario.seed = s;
        }
        if let Some(o) = intent_offset {
            cfg.simulate.intent_offset = o;
        }
        cfg.validate().map_err(to_py)?;
        let (log, metrics) = py
            .detach(|| -> Result<_, Error> {
                let intent = if cfg.simulate.intent_offset != 0.0 {
                    Some(
                        shifted_goal_intent(&cfg.scenario, cfg.simulate.intent_offset)
                            .map_err(|e| Error::PlanInfeasible(Box::new(e)))?,
                    )
                } else {
                    None
                };
                let driver = DriverSetup {
                    params: cfg.simulate_driver(),
                    intent,
                };
                let assist = AssistConfig::for_condition(cfg.simulate.condition, cfg.experiment.assist_preview.clone());
                let log = run_trial(&cfg.scenario, &driver, &assist)?;
                let metrics = compute_metrics(&log)?;
                Ok((log, metrics))
            })
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("metrics", metrics_dict(py, &metrics)?)?;
        d.set_item("log", log_columns(py, &log)?)?;
        d.set_item("log_csv", log.to_csv())?;
        Ok(d)
    }

    /// Runs the phase protocol. Returns `{"summary": str, "trials_csv": str,
    /// "correlation": float | None, "failures": [str]}`.
    #[pyo3(signature = (seed = None))]
    fn experiment<'py>(&self, py: Python<'py>, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = self.inner.clone();
        if let Some(s) = seed {
            cfg.experiment.base_seed = s;
        }
        cfg.validate().map_err(to_py)?;
        let report = py
            .detach(|| run_experiment(&cfg.experiment, &cfg.scenario))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("summary", summary_table(&report, &cfg.experiment.trials))?;
        d.set_item("trials_csv", trial_rows_csv(report.rows()))?;
        let r = match report.delta_correlation {
            Correlation::Value(r) => Some(r),
            _ => None,
        };
        d.set_item("correlation", r)?;
        d.set_item("failures", report.failures.iter().map(|f| f.to_string()).collect::<Vec<_>>())?;
        Ok(d)
    }
}

#[pymodule]
fn hsc_park(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBezierPath>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_function(wrap_pyfunction!(plan_path, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_work, m)?)?;
    m.add_function(wrap_pyfunction!(classify_series, m)?)?;
    m.add("PlanningError", m.py().get_type::<PlanningError>())?;
    m.add("DivergenceError", m.py().get_type::<DivergenceError>())?;
    Ok(())
}
