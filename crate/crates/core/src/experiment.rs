//! Four-phase training protocol across assist gain conditions.
//!
//! Each driver in a condition runs, in order: `before` (self-selected start,
//! no assist), `during` (fixed start, the condition's assist), `after_fixed`
//! (fixed start, no assist) and `after_self` (self-selected start, no
//! assist). A self-selected start is the fixed start plus seeded jitter; the
//! planned path never changes.
//!
//! Trials of one (condition, driver) pair are sequential because the skill
//! update carries over; pairs run in parallel.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::assist::{AssistConfig, GainCondition};
use crate::driver::{skill_update, DriverParams, PreviewParams};
use crate::fmt::sig;
use crate::planner::{BezierPath, Pose2D};
use crate::rng::{derive_seed, stream};
use crate::sim::{compute_metrics, run_trial_on_path, DriverSetup, ScenarioConfig, TrialMetrics};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Before,
    During,
    AfterFixed,
    AfterSelf,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Before, Phase::During, Phase::AfterFixed, Phase::AfterSelf];

    pub fn label(self) -> &'static str {
        match self {
            Phase::Before => "before",
            Phase::During => "during",
            Phase::AfterFixed => "after_fixed",
            Phase::AfterSelf => "after_self",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn assisted(self) -> bool {
        self == Phase::During
    }

    pub fn self_selected_start(self) -> bool {
        matches!(self, Phase::Before | Phase::AfterSelf)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown phase {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseTrials {
    pub before: usize,
    pub during: usize,
    pub after_fixed: usize,
    pub after_self: usize,
}

impl Default for PhaseTrials {
    fn default() -> Self {
        Self {
            before: 10,
            during: 10,
            after_fixed: 3,
            after_self: 3,
        }
    }
}

impl PhaseTrials {
    pub fn get(&self, phase: Phase) -> usize {
        match phase {
            Phase::Before => self.before,
            Phase::During => self.during,
            Phase::AfterFixed => self.after_fixed,
            Phase::AfterSelf => self.after_self,
        }
    }

    pub fn total(&self) -> usize {
        Phase::ALL.iter().map(|p| self.get(*p)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningConfig {
    pub enabled: bool,
    pub rate: f64,
    /// Reference error of the skill update, meters.
    pub e_ref: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rate: 0.05,
            e_ref: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartJitter {
    /// Per-axis standard deviation, meters.
    pub position_std: f64,
    /// radians
    pub heading_std: f64,
}

impl Default for StartJitter {
    fn default() -> Self {
        Self {
            position_std: 0.3,
            heading_std: 3f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub conditions: Vec<GainCondition>,
    pub trials: PhaseTrials,
    pub drivers_per_condition: usize,
    pub base_seed: u64,
    pub learning: LearningConfig,
    pub self_select_jitter: StartJitter,
    /// Initial skills are drawn uniformly from this range, once per driver
    /// index, so every condition sees the same population.
    pub initial_skill: (f64, f64),
    pub novice: DriverParams,
    pub expert: DriverParams,
    /// Preview law behind the assist's desired angle.
    pub assist_preview: PreviewParams,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let expert = DriverParams::expert();
        Self {
            conditions: GainCondition::ALL.to_vec(),
            trials: PhaseTrials::default(),
            drivers_per_condition: 6,
            base_seed: 2024,
            learning: LearningConfig::default(),
            self_select_jitter: StartJitter::default(),
            initial_skill: (0.0, 0.4),
            novice: DriverParams::novice(),
            assist_preview: expert.preview.clone(),
            expert,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::invalid("at least one condition is required"));
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if self.conditions[..i].contains(c) {
                return Err(Error::invalid(format!("condition {c} listed twice")));
            }
        }
        if Phase::ALL.iter().any(|p| self.trials.get(*p) == 0) {
            return Err(Error::invalid("every phase needs at least one trial"));
        }
        if self.drivers_per_condition == 0 {
            return Err(Error::invalid("drivers_per_condition must be >= 1"));
        }
        if self.learning.enabled && !(self.learning.rate >= 0.0 && self.learning.e_ref > 0.0) {
            return Err(Error::invalid("learning rate must be >= 0 and e_ref > 0"));
        }
        let j = &self.self_select_jitter;
        if !(j.position_std >= 0.0 && j.heading_std >= 0.0) {
            return Err(Error::invalid("jitter deviations must be >= 0"));
        }
        let (lo, hi) = self.initial_skill;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::invalid("initial skill range must lie in [0, 1] with lo <= hi"));
        }
        self.novice.validate()?;
        self.expert.validate()?;
        self.assist_preview.validate()
    }

    /// Seed of the `k`-th trial (from 1) within a phase. Counting within the
    /// phase keeps one phase's draws fixed when another phase's trial count
    /// changes.
    pub fn trial_seed(&self, condition: GainCondition, driver: usize, phase: Phase, k: usize) -> u64 {
        derive_seed(
            self.base_seed,
            &[condition.index(), driver as u64, phase.index() as u64, k as u64],
        )
    }

    pub fn initial_skill_of(&self, driver: usize) -> f64 {
        let (lo, hi) = self.initial_skill;
        if lo == hi {
            return lo;
        }
        let mut rng = stream(derive_seed(self.base_seed, &[0x5C11, driver as u64]));
        rng.random_range(lo..=hi)
    }
}

/// One trial's outcome as reported. `trial` numbers run 1..=total across the
/// four phases, in protocol order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub condition: GainCondition,
    pub driver: usize,
    pub phase: Phase,
    pub trial: usize,
    /// Skill in effect during the trial.
    pub skill: f64,
    pub metrics: TrialMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseAggregate {
    pub rms_e: MeanStd,
    pub mean_abs_tau_c: MeanStd,
    pub mean_w_c: MeanStd,
    pub mean_w_das: MeanStd,
    pub captured_fraction: f64,
}

impl PhaseAggregate {
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a TrialRow>) -> Self {
        let rows: Vec<&TrialRow> = rows.into_iter().collect();
        let col = |f: fn(&TrialMetrics) -> f64| MeanStd::of(&rows.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
        let captured = rows.iter().filter(|r| r.metrics.captured).count();
        Self {
            rms_e: col(|m| m.rms_e),
            mean_abs_tau_c: col(|m| m.mean_abs_tau_c),
            mean_w_c: col(|m| m.mean_w_c),
            mean_w_das: col(|m| m.mean_w_das),
            captured_fraction: if rows.is_empty() {
                0.0
            } else {
                captured as f64 / rows.len() as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub phase: Phase,
    pub rows: Vec<TrialRow>,
    pub aggregate: PhaseAggregate,
}

/// Error decrease of one driver: before-phase mean minus during-phase mean,
/// and before-phase mean minus the mean over both after phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverDelta {
    pub condition: GainCondition,
    pub driver: usize,
    pub during: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Value(f64),
    /// Fewer than three rows, or no spread in one coordinate.
    Undefined,
    /// No assisted condition in the plan.
    NotApplicable,
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correlation::Value(r) => f.write_str(&sig(*r, 6)),
            Correlation::Undefined => f.write_str("undefined"),
            Correlation::NotApplicable => f.write_str("not applicable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: GainCondition,
    pub phases: Vec<PhaseResult>,
    pub deltas: Vec<DriverDelta>,
    pub correlation: Correlation,
}

impl ConditionReport {
    pub fn phase(&self, phase: Phase) -> &PhaseResult {
        &self.phases[phase.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub conditions: Vec<ConditionReport>,
    /// Pooled over drivers of all assisted conditions.
    pub delta_correlation: Correlation,
    /// Failed trials, each an [`Error::Trial`].
    pub failures: Vec<Error>,
}

impl ExperimentReport {
    pub fn rows(&self) -> impl Iterator<Item = &TrialRow> {
        self.conditions.iter().flat_map(|c| c.phases.iter().flat_map(|p| p.rows.iter()))
    }
}

/// Sample correlation of `(x, y)` rows.
pub fn correlate_deltas(rows: &[(f64, f64)]) -> Correlation {
    if rows.len() < 3 {
        return Correlation::Undefined;
    }
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in rows {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Correlation::Undefined;
    }
    Correlation::Value((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

struct PairOutcome {
    rows: Vec<TrialRow>,
    failures: Vec<Error>,
}

fn jittered_start(start: Pose2D, jitter: &StartJitter, seed: u64) -> Pose2D {
    let mut rng = stream(derive_seed(seed, &[0x57A7]));
    let mut draw = |std: f64| {
        if std > 0.0 {
            Normal::new(0.0, std).expect("finite std").sample(&mut rng)
        } else {
            0.0
        }
    };
    let dx = draw(jitter.position_std);
    let dy = draw(jitter.position_std);
    let dh = draw(jitter.heading_std);
    Pose2D::new(start.x + dx, start.y + dy, start.heading + dh)
}

fn run_pair(
    plan: &ExperimentPlan,
    scenario: &ScenarioConfig,
    path: &BezierPath,
    condition: GainCondition,
    driver: usize,
) -> PairOutcome {
    let mut skill = plan.initial_skill_of(driver);
    let mut rows = Vec::with_capacity(plan.trials.total());
    let mut failures = Vec::new();
    let mut trial = 0usize;
    for phase in Phase::ALL {
        let assist = if phase.assisted() {
            AssistConfig::for_condition(condition, plan.assist_preview.clone())
        } else {
            AssistConfig {
                gain_cs: 0.0,
                preview: plan.assist_preview.clone(),
                enabled: false,
            }
        };
        for k in 1..=plan.trials.get(phase) {
            trial += 1;
            let seed = plan.trial_seed(condition, driver, phase, k);
            let start = if phase.self_selected_start() {
                jittered_start(scenario.start, &plan.self_select_jitter, seed)
            } else {
                scenario.start
            };
            let params = DriverParams::interpolate(&plan.novice, &plan.expert, skill);
            let sc = ScenarioConfig {
                seed,
                ..scenario.clone()
            };
            let result = run_trial_on_path(&sc, path, start, &DriverSetup::following(params), &assist)
                .and_then(|log| compute_metrics(&log));
            match result {
                Ok(metrics) => {
                    let used = skill;
                    if plan.learning.enabled {
                        skill = skill_update(skill, &metrics, plan.learning.rate, plan.learning.e_ref);
                    }
                    rows.push(TrialRow {
                        condition,
                        driver,
                        phase,
                        trial,
                        skill: used,
                        metrics,
                    });
                }
                Err(source) => failures.push(Error::Trial {
                    condition: condition.label(),
                    driver,
                    phase: phase.label(),
                    trial,
                    source: Box::new(source),
                }),
            }
        }
    }
    PairOutcome { rows, failures }
}

fn mean_rms<'a>(rows: impl Iterator<Item = &'a TrialRow>) -> Option<f64> {
    let v: Vec<f64> = rows.map(|r| r.metrics.rms_e).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn driver_deltas(condition: GainCondition, drivers: usize, rows: &[TrialRow]) -> Vec<DriverDelta> {
    (0..drivers)
        .filter_map(|d| {
            let of = |f: &dyn Fn(Phase) -> bool| mean_rms(rows.iter().filter(|r| r.driver == d && f(r.phase)));
            let before = of(&|p| p == Phase::Before)?;
            let during = of(&|p| p == Phase::During)?;
            let after = of(&|p| matches!(p, Phase::AfterFixed | Phase::AfterSelf))?;
            Some(DriverDelta {
                condition,
                driver: d,
                during: before - during,
                after: before - after,
            })
        })
        .collect()
}

/// Builds the report from trial rows. Used both after a run and when
/// recomputing from a per-trial CSV.
pub fn assemble_report(
    conditions: &[GainCondition],
    drivers_per_condition: usize,
    rows: Vec<TrialRow>,
    failures: Vec<Error>,
) -> ExperimentReport {
    let mut reports = Vec::with_capacity(conditions.len());
    let mut pooled = Vec::new();
    for &condition in conditions {
        let mine: Vec<TrialRow> = rows.iter().filter(|r| r.condition == condition).cloned().collect();
        let phases = Phase::ALL
            .iter()
            .map(|&phase| {
                let rows: Vec<TrialRow> = mine.iter().filter(|r| r.phase == phase).cloned().collect();
                PhaseResult {
                    phase,
                    aggregate: PhaseAggregate::of(&rows),
                    rows,
                }
            })
            .collect();
        let deltas = driver_deltas(condition, drivers_per_condition, &mine);
        let pairs: Vec<(f64, f64)> = deltas.iter().map(|d| (d.during, d.after)).collect();
        if condition.gain() > 0.0 {
            pooled.extend_from_slice(&pairs);
        }
        reports.push(ConditionReport {
            condition,
            phases,
            correlation: if condition.gain() > 0.0 {
                correlate_deltas(&pairs)
            } else {
                Correlation::NotApplicable
            },
            deltas,
        });
    }
    let delta_correlation = if conditions.iter().any(|c| c.gain() > 0.0) {
        correlate_deltas(&pooled)
    } else {
        Correlation::NotApplicable
    };
    ExperimentReport {
        conditions: reports,
        delta_correlation,
        failures,
    }
}

/// Runs the protocol for every condition and driver. Trial failures are
/// collected in the report rather than aborting the run; only an invalid
/// plan or an unplannable scenario is an error.
pub fn run_experiment(plan: &ExperimentPlan, scenario: &ScenarioConfig) -> Result<ExperimentReport> {
    plan.validate()?;
    scenario.validate()?;
    let path = scenario.plan()?;
    let pairs: Vec<(GainCondition, usize)> = plan
        .conditions
        .iter()
        .flat_map(|&c| (0..plan.drivers_per_condition).map(move |d| (c, d)))
        .collect();
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|&(c, d)| run_pair(plan, scenario, &path, c, d))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        failures.extend(o.failures);
    }
    Ok(assemble_report(&plan.conditions, plan.drivers_per_condition, rows, failures))
}

pub const TRIAL_CSV_HEADER: &str = "condition,driver,phase,trial,rms_e,mean_abs_tau_c,mean_w_c,mean_w_das,captured,duration";

/// Per-trial rows. Numbers use the shortest text that reads back to the same
/// value, so aggregates recomputed from the file match exactly.
pub fn trial_rows_csv<'a>(rows: impl IntoIterator<Item = &'a TrialRow>) -> String {
    let mut out = String::from(TRIAL_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{:?},{:?},{:?},{:?},{},{:?}",
            r.condition,
            r.driver,
            r.phase,
            r.trial,
            m.rms_e,
            m.mean_abs_tau_c,
            m.mean_w_c,
            m.mean_w_das,
            m.captured,
            m.duration
        );
    }
    out
}

/// Reads per-trial rows back. Fields absent from the CSV take defaults.
pub fn parse_trial_rows_csv(text: &str) -> Result<Vec<TrialRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != TRIAL_CSV_HEADER {
        return Err(Error::Csv("unexpected per-trial header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let bad = |what: &str| Error::Csv(format!("row {}: bad {what}", i + 2));
        let num = |j: usize, what: &str| rec[j].parse::<f64>().map_err(|_| bad(what));
        out.push(TrialRow {
            condition: rec[0].parse().map_err(|_| bad("condition"))?,
            driver: rec[1].parse().map_err(|_| bad("driver"))?,
            phase: rec[2].parse().map_err(|_| bad("phase"))?,
            trial: rec[3].parse().map_err(|_| bad("trial"))?,
            skill: 0.0,
            metrics: TrialMetrics {
                rms_e: num(4, "rms_e")?,
                mean_abs_tau_c: num(5, "mean_abs_tau_c")?,
                mean_w_c: num(6, "mean_w_c")?,
                mean_w_das: num(7, "mean_w_das")?,
                captured: rec[8].parse().map_err(|_| bad("captured"))?,
                duration: num(9, "duration")?,
                ..TrialMetrics::default()
            },
        });
    }
    Ok(out)
}

/// Plain-text summary: one table per condition with a row per phase, then
/// the error decreases and their correlation.
pub fn summary_table(report: &ExperimentReport, trials: &PhaseTrials) -> String {
    let g = |x: f64| sig(x, 6);
    let mut out = String::new();
    for c in &report.conditions {
        let _ = writeln!(out, "condition {} (C_s = {})", c.condition, g(c.condition.gain()));
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:<6} {:<8} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>9}",
            "phase", "trials", "start", "assist", "n", "rms_e", "rms_e_std", "abs_tau_c", "w_c", "w_das", "captured"
        );
        let mut first = 1;
        for p in &c.phases {
            let count = trials.get(p.phase);
            let range = format!("{}-{}", first, first + count - 1);
            first += count;
            let a = &p.aggregate;
            let _ = writeln!(
                out,
                "{:<12} {:>7} {:<6} {:<8} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>9}",
                p.phase.label(),
                range,
                if p.phase.self_selected_start() { "self" } else { "fixed" },
                if p.phase.assisted() && c.condition.gain() > 0.0 { "on" } else { "off" },
                p.rows.len(),
                g(a.rms_e.mean),
                g(a.rms_e.std),
                g(a.mean_abs_tau_c.mean),
                g(a.mean_w_c.mean),
                g(a.mean_w_das.mean),
                g(a.captured_fraction),
            );
        }
        let _ = writeln!(out, "error decrease per driver (before - during, before - after):");
        for d in &c.deltas {
            let _ = writeln!(out, "  driver {:>3}: {:>12} {:>12}", d.driver, g(d.during), g(d.after));
        }
        let _ = writeln!(out, "correlation: {}", c.correlation);
        out.push('\n');
    }
    let _ = writeln!(out, "pooled correlation over assisted conditions: {}", report.delta_correlation);
    let _ = writeln!(
        out,
        "note: skill growth comes from a configured update rule; after-assist gains check the harness, not human learning."
    );
    if !report.failures.is_empty() {
        let _ = writeln!(out, "failed trials: {}", report.failures.len());
    }
    out
}
