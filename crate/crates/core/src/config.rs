//! Run configuration: flat TOML sections of `key = value` lines.
//!
//! Every key carries its unit in the name (`_m`, `_s`, `_rad`, ...). Unknown
//! sections and keys are rejected. Values are applied in file order and the
//! whole configuration is re-validated after each one, so an invariant
//! violation is reported on the line that caused it.
//!
//! Environment variables named `HSC_<SECTION>__<KEY>` (upper case) override
//! file values, e.g. `HSC_VEHICLE__WHEELBASE_M=2.9`.

use std::collections::BTreeMap;

use toml::{Spanned, Value};

use crate::assist::GainCondition;
use crate::driver::DriverParams;
use crate::experiment::ExperimentPlan;
use crate::planner::{Pose2D, TravelDirection};
use crate::sim::{ScenarioConfig, VelocitySignal};
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "HSC_";

/// Settings of a single `simulate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub condition: GainCondition,
    /// Blend between the novice (0) and expert (1) anchors.
    pub driver_skill: f64,
    /// Lateral shift of the driver's own slot, meters; zero follows the
    /// planned path.
    pub intent_offset: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            condition: GainCondition::A,
            driver_skill: 1.0,
            intent_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    /// Also holds the driver anchors and the assist preview.
    pub experiment: ExperimentPlan,
    pub simulate: SimulateConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.experiment.validate()?;
        if !(0.0..=1.0).contains(&self.simulate.driver_skill) {
            return Err(Error::invalid("driver_skill must lie in [0, 1]"));
        }
        if !self.simulate.intent_offset.is_finite() {
            return Err(Error::invalid("intent_offset_m must be finite"));
        }
        Ok(())
    }

    pub fn simulate_driver(&self) -> DriverParams {
        DriverParams::interpolate(&self.experiment.novice, &self.experiment.expert, self.simulate.driver_skill)
    }

    /// Parses a configuration file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let doc: BTreeMap<String, Spanned<BTreeMap<String, Spanned<Value>>>> = toml::from_str(text).map_err(|e| {
            Error::Config {
                line: e.span().map_or(0, |s| line_of(text, s.start)),
                message: e.message().trim().to_string(),
            }
        })?;
        let mut entries = Vec::new();
        for (section, table) in &doc {
            let section_line = line_of(text, table.span().start);
            if !FIELDS.iter().any(|f| f.section == section) {
                return Err(Error::Config {
                    line: section_line,
                    message: format!("unknown section [{section}]"),
                });
            }
            for (key, value) in table.get_ref() {
                let line = line_of(text, value.span().start);
                let field = find(section, key).ok_or_else(|| Error::Config {
                    line,
                    message: format!("unknown key {key:?} in [{section}]"),
                })?;
                entries.push((value.span().start, line, field, value.get_ref().clone()));
            }
        }
        entries.sort_by_key(|e| e.0);
        for (_, line, field, value) in entries {
            self.assign(field, &value)
                .map_err(|message| Error::Config { line, message })?;
        }
        Ok(())
    }

    /// Applies `HSC_<SECTION>__<KEY>` overrides from the given variables.
    /// Variables without the prefix are ignored; unknown ones with it are
    /// errors.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut vars: Vec<(String, String)> = vars
            .into_iter()
            .filter(|(k, _)| k.as_ref().starts_with(ENV_PREFIX))
            .map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string()))
            .collect();
        vars.sort();
        for (var, raw) in vars {
            let env_err = |message: String| Error::Env {
                var: var.clone(),
                message,
            };
            let rest = &var[ENV_PREFIX.len()..];
            let (section, key) = rest
                .split_once("__")
                .ok_or_else(|| env_err("expected HSC_<SECTION>__<KEY>".into()))?;
            let field = find(&section.to_ascii_lowercase(), &key.to_ascii_lowercase())
                .ok_or_else(|| env_err("no such configuration key".into()))?;
            self.assign(field, &env_value(&raw)).map_err(env_err)?;
        }
        Ok(())
    }

    fn assign(&mut self, field: &Field, value: &Value) -> std::result::Result<(), String> {
        (field.set)(self, value)?;
        self.validate().map_err(|e| format!("{}.{}: {e}", field.section, field.key))
    }

    /// Configuration file text holding every key at its current value, with
    /// the unit notes as comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for f in FIELDS.iter() {
            if f.section != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = f.section;
                out.push_str(&format!("[{section}]\n"));
            }
            if !f.doc.is_empty() {
                out.push_str(&format!("# {}\n", f.doc));
            }
            out.push_str(&format!("{} = {}\n", f.key, (f.get)(self)));
        }
        out
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Environment values are TOML literals when they parse as one, bare
/// strings otherwise.
fn env_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    toml::from_str::<BTreeMap<String, Value>>(&doc)
        .ok()
        .and_then(|mut m| m.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

struct Field {
    section: &'static str,
    key: &'static str,
    doc: &'static str,
    get: fn(&RunConfig) -> Value,
    set: fn(&mut RunConfig, &Value) -> std::result::Result<(), String>,
}

fn find(section: &str, key: &str) -> Option<&'static Field> {
    FIELDS.iter().find(|f| f.section == section && f.key == key)
}

fn num(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, found {}", other.type_str())),
    }
}

fn count(v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(_) => Err("expected a non-negative integer".into()),
        other => Err(format!("expected an integer, found {}", other.type_str())),
    }
}

fn seed(v: &Value) -> std::result::Result<u64, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::String(s) => s.parse().map_err(|_| format!("bad seed {s:?}")),
        _ => Err("expected a non-negative integer seed".into()),
    }
}

fn flag(v: &Value) -> std::result::Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("expected true or false, found {}", v.type_str()))
}

fn text(v: &Value) -> std::result::Result<&str, String> {
    v.as_str().ok_or_else(|| format!("expected a string, found {}", v.type_str()))
}

fn conditions(v: &Value) -> std::result::Result<Vec<GainCondition>, String> {
    let items: Vec<String> = match v {
        Value::Array(a) => a.iter().map(|x| text(x).map(str::to_string)).collect::<std::result::Result<_, _>>()?,
        Value::String(s) => s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect(),
        other => return Err(format!("expected a list of conditions, found {}", other.type_str())),
    };
    items.iter().map(|s| s.parse().map_err(|e: Error| e.to_string())).collect()
}

fn set_pose(p: &mut Pose2D, x: Option<f64>, y: Option<f64>, h: Option<f64>) -> std::result::Result<(), String> {
    *p = Pose2D::new(x.unwrap_or(p.x), y.unwrap_or(p.y), h.unwrap_or(p.heading));
    Ok(())
}

fn signal_name(s: VelocitySignal) -> &'static str {
    match s {
        VelocitySignal::LateralErrorRate => "lateral_error_rate",
        VelocitySignal::ColumnRate => "column_rate",
    }
}

macro_rules! f64_field {
    ($section:literal, $key:literal, $doc:literal, |$c:ident| $place:expr) => {
        Field {
            section: $section,
            key: $key,
            doc: $doc,
            get: |$c: &RunConfig| Value::Float($place),
            set: |$c: &mut RunConfig, v: &Value| {
                $place = num(v)?;
                Ok(())
            },
        }
    };
}

macro_rules! count_field {
    ($section:literal, $key:literal, $doc:literal, |$c:ident| $place:expr) => {
        Field {
            section: $section,
            key: $key,
            doc: $doc,
            get: |$c: &RunConfig| Value::Integer($place as i64),
            set: |$c: &mut RunConfig, v: &Value| {
                $place = count(v)?;
                Ok(())
            },
        }
    };
}

macro_rules! bool_field {
    ($section:literal, $key:literal, $doc:literal, |$c:ident| $place:expr) => {
        Field {
            section: $section,
            key: $key,
            doc: $doc,
            get: |$c: &RunConfig| Value::Boolean($place),
            set: |$c: &mut RunConfig, v: &Value| {
                $place = flag(v)?;
                Ok(())
            },
        }
    };
}

macro_rules! driver_fields {
    ($section:literal, $who:ident) => {
        [
            f64_field!($section, "neuromuscular_gain_nm_per_rad", "limb stiffness, N·m/rad", |c| c.experiment.$who.neuromuscular_gain),
            f64_field!($section, "neuromuscular_damping_nms_per_rad", "limb damping, N·m·s/rad", |c| c.experiment.$who.neuromuscular_damping),
            f64_field!($section, "reaction_delay_s", "pure delay on the desired angle, s", |c| c.experiment.$who.reaction_delay),
            f64_field!($section, "torque_noise_std_nm", "additive torque noise, N·m (standard deviation)", |c| c.experiment.$who.torque_noise_std),
            f64_field!($section, "preview_time_s", "preview horizon, s", |c| c.experiment.$who.preview.preview_time),
            f64_field!($section, "error_gain_rad_per_m", "column angle per meter of predicted error, rad/m", |c| c.experiment.$who.preview.error_gain),
            bool_field!($section, "feedforward_on", "curvature feedforward", |c| c.experiment.$who.preview.feedforward_on),
        ]
    };
}

static FIELDS: std::sync::LazyLock<Vec<Field>> = std::sync::LazyLock::new(|| {
    let mut v = vec![
        Field {
            section: "scenario",
            key: "start_x_m",
            doc: "start pose, m",
            get: |c| Value::Float(c.scenario.start.x),
            set: |c, v| set_pose(&mut c.scenario.start, Some(num(v)?), None, None),
        },
        Field {
            section: "scenario",
            key: "start_y_m",
            doc: "m",
            get: |c| Value::Float(c.scenario.start.y),
            set: |c, v| set_pose(&mut c.scenario.start, None, Some(num(v)?), None),
        },
        Field {
            section: "scenario",
            key: "start_heading_rad",
            doc: "vehicle nose heading, rad counterclockwise from +x",
            get: |c| Value::Float(c.scenario.start.heading),
            set: |c, v| set_pose(&mut c.scenario.start, None, None, Some(num(v)?)),
        },
        Field {
            section: "scenario",
            key: "goal_x_m",
            doc: "parking slot pose, m",
            get: |c| Value::Float(c.scenario.goal.x),
            set: |c, v| set_pose(&mut c.scenario.goal, Some(num(v)?), None, None),
        },
        Field {
            section: "scenario",
            key: "goal_y_m",
            doc: "m",
            get: |c| Value::Float(c.scenario.goal.y),
            set: |c, v| set_pose(&mut c.scenario.goal, None, Some(num(v)?), None),
        },
        Field {
            section: "scenario",
            key: "goal_heading_rad",
            doc: "rad",
            get: |c| Value::Float(c.scenario.goal.heading),
            set: |c, v| set_pose(&mut c.scenario.goal, None, None, Some(num(v)?)),
        },
        f64_field!("scenario", "dt_s", "physics step, s", |c| c.scenario.dt),
        f64_field!("scenario", "control_dt_s", "driver/assist step, s (integer multiple of dt_s)", |c| c.scenario.control_dt),
        f64_field!("scenario", "timeout_s", "s", |c| c.scenario.timeout),
        f64_field!("scenario", "capture_position_m", "goal capture tolerance, m", |c| c.scenario.capture.position),
        f64_field!("scenario", "capture_heading_rad", "rad", |c| c.scenario.capture.heading),
        f64_field!("scenario", "speed_ramp_s", "ramp from rest to cruise speed, s", |c| c.scenario.speed_ramp),
        Field {
            section: "scenario",
            key: "seed",
            doc: "trial seed",
            get: |c| Value::Integer(c.scenario.seed as i64),
            set: |c, v| {
                c.scenario.seed = seed(v)?;
                Ok(())
            },
        },
        Field {
            section: "scenario",
            key: "velocity_signal",
            doc: "pseudo-work velocity: \"lateral_error_rate\" or \"column_rate\"",
            get: |c| Value::String(signal_name(c.scenario.velocity_signal).into()),
            set: |c, v| {
                c.scenario.velocity_signal = match text(v)? {
                    "lateral_error_rate" => VelocitySignal::LateralErrorRate,
                    "column_rate" => VelocitySignal::ColumnRate,
                    other => return Err(format!("unknown velocity signal {other:?}")),
                };
                Ok(())
            },
        },
        f64_field!("planner", "min_turn_radius_m", "m", |c| c.scenario.planner.min_turn_radius),
        count_field!("planner", "curvature_samples", "points used to bound curvature (>= 64)", |c| c.scenario.planner.curvature_samples),
        f64_field!("planner", "length_tolerance", "relative", |c| c.scenario.planner.length_tolerance),
        Field {
            section: "planner",
            key: "travel",
            doc: "\"reverse\" or \"forward\"",
            get: |c| {
                Value::String(
                    match c.scenario.planner.travel {
                        TravelDirection::Reverse => "reverse",
                        TravelDirection::Forward => "forward",
                    }
                    .into(),
                )
            },
            set: |c, v| {
                c.scenario.planner.travel = match text(v)? {
                    "reverse" => TravelDirection::Reverse,
                    "forward" => TravelDirection::Forward,
                    other => return Err(format!("unknown travel direction {other:?}")),
                };
                Ok(())
            },
        },
        f64_field!("vehicle", "wheelbase_m", "m", |c| c.scenario.vehicle.wheelbase),
        f64_field!("vehicle", "steering_ratio", "column angle per road-wheel angle", |c| c.scenario.vehicle.steering_ratio),
        Field {
            section: "vehicle",
            key: "max_column_angle_rad",
            doc: "column stop, rad",
            get: |c| Value::Float(c.scenario.vehicle.max_column_angle),
            set: |c, v| {
                let a = num(v)?;
                c.scenario.vehicle.max_column_angle = a;
                c.scenario.column.max_angle = a;
                Ok(())
            },
        },
        f64_field!("vehicle", "reverse_speed_mps", "cruise speed, m/s (negative when backing)", |c| c.scenario.vehicle.reverse_speed),
        f64_field!("column", "initial_angle_rad", "rad", |c| c.scenario.column.theta),
        f64_field!("column", "initial_rate_radps", "rad/s", |c| c.scenario.column.theta_dot),
        f64_field!("column", "inertia_kgm2", "kg·m²", |c| c.scenario.column.inertia),
        f64_field!("column", "damping_nms_per_rad", "N·m·s/rad", |c| c.scenario.column.damping),
        f64_field!("column", "aligning_stiffness_nm_per_rad", "self-aligning stiffness, N·m/rad", |c| c.scenario.column.aligning_stiffness),
    ];
    v.extend(driver_fields!("novice", novice));
    v.extend(driver_fields!("expert", expert));
    v.extend([
        f64_field!("assist", "preview_time_s", "preview horizon of the assist's desired angle, s", |c| c.experiment.assist_preview.preview_time),
        f64_field!("assist", "error_gain_rad_per_m", "rad/m", |c| c.experiment.assist_preview.error_gain),
        bool_field!("assist", "feedforward_on", "curvature feedforward", |c| c.experiment.assist_preview.feedforward_on),
        f64_field!("pseudo_work", "window_s", "averaging window, s", |c| c.scenario.pseudo_work.window),
        f64_field!("pseudo_work", "gamma1_sq", "driver dead-band threshold, N·m·m/s", |c| c.scenario.pseudo_work.gamma1_sq),
        f64_field!("pseudo_work", "gamma2_sq", "assist dead-band threshold, N·m·m/s", |c| c.scenario.pseudo_work.gamma2_sq),
        Field {
            section: "experiment",
            key: "conditions",
            doc: "gain conditions: A (C_s = 0), B (0.5), C (1.0)",
            get: |c| Value::Array(c.experiment.conditions.iter().map(|k| Value::String(k.to_string())).collect()),
            set: |c, v| {
                c.experiment.conditions = conditions(v)?;
                Ok(())
            },
        },
        count_field!("experiment", "trials_before", "", |c| c.experiment.trials.before),
        count_field!("experiment", "trials_during", "", |c| c.experiment.trials.during),
        count_field!("experiment", "trials_after_fixed", "", |c| c.experiment.trials.after_fixed),
        count_field!("experiment", "trials_after_self", "", |c| c.experiment.trials.after_self),
        count_field!("experiment", "drivers_per_condition", "", |c| c.experiment.drivers_per_condition),
        Field {
            section: "experiment",
            key: "base_seed",
            doc: "",
            get: |c| Value::Integer(c.experiment.base_seed as i64),
            set: |c, v| {
                c.experiment.base_seed = seed(v)?;
                Ok(())
            },
        },
        bool_field!("experiment", "learning_enabled", "apply the skill update after every trial", |c| c.experiment.learning.enabled),
        f64_field!("experiment", "learning_rate", "skill gained per perfect trial", |c| c.experiment.learning.rate),
        f64_field!("experiment", "learning_e_ref_m", "rms error that earns no skill, m", |c| c.experiment.learning.e_ref),
        f64_field!("experiment", "jitter_position_std_m", "self-selected start scatter, m", |c| c.experiment.self_select_jitter.position_std),
        f64_field!("experiment", "jitter_heading_std_rad", "rad", |c| c.experiment.self_select_jitter.heading_std),
        f64_field!("experiment", "initial_skill_min", "population skill range", |c| c.experiment.initial_skill.0),
        f64_field!("experiment", "initial_skill_max", "", |c| c.experiment.initial_skill.1),
        Field {
            section: "simulate",
            key: "condition",
            doc: "A, B or C",
            get: |c| Value::String(c.simulate.condition.to_string()),
            set: |c, v| {
                c.simulate.condition = text(v)?.parse().map_err(|e: Error| e.to_string())?;
                Ok(())
            },
        },
        f64_field!("simulate", "driver_skill", "0 = novice anchor, 1 = expert anchor", |c| c.simulate.driver_skill),
        f64_field!("simulate", "intent_offset_m", "driver's own slot, shifted left of the approach, m", |c| c.simulate.intent_offset),
    ]);
    v
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn template_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.scenario.seed = 77;
        cfg.experiment.conditions = vec![GainCondition::C];
        cfg.simulate.intent_offset = 1.0;
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&RunConfig::default().to_text()).unwrap(), RunConfig::default());
    }

    #[test]
    fn values_apply() {
        let cfg = RunConfig::parse(
            "[vehicle]\nwheelbase_m = 3\n[experiment]\nconditions = \"A, C\"\n[simulate]\ncondition = \"B\"\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.vehicle.wheelbase, 3.0);
        assert_eq!(cfg.experiment.conditions, vec![GainCondition::A, GainCondition::C]);
        assert_eq!(cfg.simulate.condition, GainCondition::B);
    }

    #[test]
    fn unknown_key_is_reported_with_its_line() {
        let err = RunConfig::parse("[vehicle]\nwheelbase_m = 3\n\nwheel_base = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 4, .. }), "{err}");
    }

    #[test]
    fn unknown_section_is_rejected() {
        let err = RunConfig::parse("# c\n[vehicles]\nwheelbase_m = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn invariant_violation_points_at_the_line() {
        let err = RunConfig::parse("[scenario]\ndt_s = 0.001\ncontrol_dt_s = 0.0015\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = RunConfig::parse("[planner]\nmin_turn_radius_m = -1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn type_errors_and_syntax_errors_have_lines() {
        let err = RunConfig::parse("[vehicle]\nwheelbase_m = \"long\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = RunConfig::parse("[vehicle]\nwheelbase_m = = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn environment_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_env([
            ("HSC_VEHICLE__WHEELBASE_M", "2.9"),
            ("HSC_EXPERIMENT__CONDITIONS", "B,C"),
            ("PATH", "/bin"),
        ])
        .unwrap();
        assert_eq!(cfg.scenario.vehicle.wheelbase, 2.9);
        assert_eq!(cfg.experiment.conditions, vec![GainCondition::B, GainCondition::C]);
        let err = cfg.apply_env([("HSC_VEHICLE__WHEELS", "4")]).unwrap_err();
        assert!(matches!(err, Error::Env { .. }));
    }
}
