//! Cooperative status of driver and assist.
//!
//! Each agent's pseudo-work is the window average of its column torque times
//! a vehicle velocity signal:
//!
//! ```text
//! w(t) = (1/ΔT) ∫_{t−ΔT}^{t} τ(s)·v(s) ds
//! ```
//!
//! A positive value means the agent's torque goes along with the current
//! motion. Thresholds `γ1²` (driver) and `γ2²` (assist) carve the
//! `(w_c, w_das)` plane into four labelled quadrants and a dead zone.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoWorkConfig {
    /// Averaging window ΔT, seconds.
    pub window: f64,
    /// Driver threshold γ1².
    pub gamma1_sq: f64,
    /// Assist threshold γ2².
    pub gamma2_sq: f64,
}

impl Default for PseudoWorkConfig {
    fn default() -> Self {
        Self {
            window: 0.5,
            gamma1_sq: 0.01,
            gamma2_sq: 0.01,
        }
    }
}

impl PseudoWorkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::invalid("pseudo-work window must be > 0"));
        }
        if !(self.gamma1_sq > 0.0 && self.gamma2_sq > 0.0) {
            return Err(Error::invalid("judgment thresholds must be strictly positive"));
        }
        if !(self.gamma1_sq.is_finite() && self.gamma2_sq.is_finite()) {
            return Err(Error::invalid("judgment thresholds must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoWorkPair {
    pub w_c: f64,
    pub w_das: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoopState {
    /// Driver leads, assist pushes the same way.
    DriverLedCooperative,
    /// Driver leads against the assist.
    DriverLedUncooperative,
    /// Assist leads (with or against the driver; not separable).
    SystemLed,
    /// Neither agent drives the motion.
    Passive,
    DeadZone,
}

impl CoopState {
    pub const ALL: [CoopState; 5] = [
        CoopState::DriverLedCooperative,
        CoopState::DriverLedUncooperative,
        CoopState::SystemLed,
        CoopState::Passive,
        CoopState::DeadZone,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CoopState::DriverLedCooperative => "I",
            CoopState::DriverLedUncooperative => "II",
            CoopState::SystemLed => "III",
            CoopState::Passive => "IV",
            CoopState::DeadZone => "V",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CoopState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CoopState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CoopState::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown cooperative state `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentConsistency {
    Consistent,
    Inconsistent,
    Indeterminate,
}

/// Driver holds the initiative when `w_c ≥ γ1²`.
pub fn driver_has_initiative(w_c: f64, cfg: &PseudoWorkConfig) -> bool {
    w_c >= cfg.gamma1_sq
}

pub fn intent_consistency(w_c: f64, w_das: f64, cfg: &PseudoWorkConfig) -> IntentConsistency {
    let (g1, g2) = (cfg.gamma1_sq, cfg.gamma2_sq);
    if w_c >= g1 && w_das >= g2 {
        IntentConsistency::Consistent
    } else if (w_c >= g1 && w_das <= -g2) || (w_c <= -g1 && w_das >= g2) {
        IntentConsistency::Inconsistent
    } else {
        IntentConsistency::Indeterminate
    }
}

/// Five-state label. Anything inside either threshold band is dead zone,
/// including the band cells with the other axis at an extreme.
pub fn classify(w_c: f64, w_das: f64, cfg: &PseudoWorkConfig) -> CoopState {
    let (g1, g2) = (cfg.gamma1_sq, cfg.gamma2_sq);
    if w_c.abs() < g1 || w_das.abs() < g2 || w_c.is_nan() || w_das.is_nan() {
        return CoopState::DeadZone;
    }
    match (w_c >= g1, w_das >= g2) {
        (true, true) => CoopState::DriverLedCooperative,
        (true, false) => CoopState::DriverLedUncooperative,
        (false, true) => CoopState::SystemLed,
        (false, false) => CoopState::Passive,
    }
}

/// Per-state fractions of a timeline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Occupancy {
    pub fractions: [f64; 5],
}

impl Occupancy {
    pub fn get(&self, s: CoopState) -> f64 {
        self.fractions[s.index()]
    }

    pub fn total(&self) -> f64 {
        self.fractions.iter().sum()
    }
}

pub fn state_occupancy(timeline: &[CoopState]) -> Result<Occupancy> {
    if timeline.is_empty() {
        return Err(Error::EmptyTimeline);
    }
    let mut counts = [0usize; 5];
    for s in timeline {
        counts[s.index()] += 1;
    }
    let n = timeline.len() as f64;
    Ok(Occupancy {
        fractions: counts.map(|c| c as f64 / n),
    })
}

/// Number of sample intervals spanning `window` at step `dt`.
fn window_intervals(window: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::invalid("sample step must be > 0"));
    }
    let ratio = window / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
        return Err(Error::invalid(format!(
            "window {window} s is not an integer multiple of the sample step {dt} s"
        )));
    }
    Ok(n as usize)
}

/// Trapezoidal mean of `n + 1` equally spaced samples (Neumaier summation).
fn trapezoid_mean<I: Iterator<Item = f64>>(mut samples: I, n: usize) -> f64 {
    // Summed as deviations from the first sample: a constant window then
    // averages to that constant with no rounding at all.
    let Some(first) = samples.next() else { return 0.0 };
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (i, p) in samples.enumerate().map(|(i, p)| (i + 1, p - first)) {
        let term = if i == n { 0.5 * p } else { p };
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    first + (sum + comp) / n as f64
}

/// Window-averaged power of `tau` against `v` ending at time `t`, by the
/// trapezoidal rule. Samples start at `t0` with uniform spacing `dt`; the
/// window must be an integer number of steps.
pub fn pseudo_work(tau: &[f64], v: &[f64], t0: f64, dt: f64, t: f64, window: f64) -> Result<f64> {
    if tau.len() != v.len() {
        return Err(Error::invalid("torque and velocity series differ in length"));
    }
    let n = window_intervals(window, dt)?;
    let k = ((t - t0) / dt).round();
    if k < n as f64 {
        return Err(Error::InsufficientHistory {
            window,
            needed: t - window,
            first: t0,
        });
    }
    let k = k as usize;
    if k >= tau.len() {
        return Err(Error::invalid(format!("time {t} beyond the last sample")));
    }
    let range = k - n..=k;
    Ok(trapezoid_mean(range.map(|i| tau[i] * v[i]), n))
}

/// Streaming pseudo-works for the closed loop: one push per control tick.
#[derive(Debug, Clone)]
pub struct PseudoWorkMeter {
    cfg: PseudoWorkConfig,
    intervals: usize,
    buf: VecDeque<(f64, f64)>,
}

impl PseudoWorkMeter {
    pub fn new(cfg: PseudoWorkConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let intervals = window_intervals(cfg.window, dt)?;
        Ok(Self {
            cfg,
            intervals,
            buf: VecDeque::with_capacity(intervals + 1),
        })
    }

    pub fn config(&self) -> &PseudoWorkConfig {
        &self.cfg
    }

    /// Adds the sample at time `t`; returns the pair and its label once a
    /// full window of history exists.
    pub fn push(&mut self, t: f64, tau_c: f64, tau_das: f64, v: f64) -> Option<(PseudoWorkPair, CoopState)> {
        if self.buf.len() == self.intervals + 1 {
            self.buf.pop_front();
        }
        self.buf.push_back((tau_c * v, tau_das * v));
        if self.buf.len() < self.intervals + 1 {
            return None;
        }
        let w_c = trapezoid_mean(self.buf.iter().map(|p| p.0), self.intervals);
        let w_das = trapezoid_mean(self.buf.iter().map(|p| p.1), self.intervals);
        let pair = PseudoWorkPair { w_c, w_das, t };
        Some((pair, classify(w_c, w_das, &self.cfg)))
    }
}

/// Classifies a uniformly sampled torque log. Rows before a full window of
/// history yield `None`. The time step must be uniform within `1e-6` s.
pub fn classify_series(
    t: &[f64],
    tau_c: &[f64],
    tau_das: &[f64],
    v: &[f64],
    cfg: &PseudoWorkConfig,
) -> Result<Vec<Option<(PseudoWorkPair, CoopState)>>> {
    cfg.validate()?;
    let len = t.len();
    if tau_c.len() != len || tau_das.len() != len || v.len() != len {
        return Err(Error::invalid("series lengths differ"));
    }
    if len < 2 {
        return Ok(vec![None; len]);
    }
    let dt = (t[len - 1] - t[0]) / (len - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::invalid("time must increase"));
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "non-uniform time step between rows {} and {}",
                i + 1,
                i + 2
            )));
        }
    }
    let mut meter = PseudoWorkMeter::new(cfg.clone(), dt)?;
    Ok((0..len).map(|i| meter.push(t[i], tau_c[i], tau_das[i], v[i])).collect())
}
