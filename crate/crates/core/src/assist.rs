//! Haptic guidance torque: `τ_das = −C_s·|e|·(θ − θ_d)`.
//!
//! The pull toward the desired column angle grows with the distance to the
//! planned path and vanishes on it.

use std::fmt;
use std::str::FromStr;

use crate::driver::PreviewParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AssistConfig {
    /// Guidance gain C_s, N·m per (m·rad).
    pub gain_cs: f64,
    /// Preview law producing the assist's desired column angle.
    pub preview: PreviewParams,
    pub enabled: bool,
}

impl AssistConfig {
    pub fn for_condition(condition: GainCondition, preview: PreviewParams) -> Self {
        Self {
            gain_cs: condition.gain(),
            preview,
            enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_cs >= 0.0 && self.gain_cs.is_finite()) {
            return Err(Error::invalid("gain_cs must be finite and >= 0"));
        }
        self.preview.validate()
    }

    /// True when the assist can produce nonzero torque.
    pub fn is_active(&self) -> bool {
        self.enabled && self.gain_cs > 0.0
    }
}

pub fn assist_torque(e: f64, theta: f64, theta_d: f64, cfg: &AssistConfig) -> f64 {
    if !cfg.enabled {
        return 0.0;
    }
    -cfg.gain_cs * e.abs() * (theta - theta_d)
}

/// The three gain levels of the training experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GainCondition {
    /// No assistance, C_s = 0.
    A,
    /// C_s = 0.5
    B,
    /// C_s = 1.0
    C,
}

impl GainCondition {
    pub const ALL: [GainCondition; 3] = [GainCondition::A, GainCondition::B, GainCondition::C];

    pub fn gain(self) -> f64 {
        match self {
            GainCondition::A => 0.0,
            GainCondition::B => 0.5,
            GainCondition::C => 1.0,
        }
    }

    pub fn label(self) -> char {
        match self {
            GainCondition::A => 'A',
            GainCondition::B => 'B',
            GainCondition::C => 'C',
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for GainCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for GainCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(GainCondition::A),
            "B" | "b" => Ok(GainCondition::B),
            "C" | "c" => Ok(GainCondition::C),
            other => Err(Error::invalid(format!("unknown gain condition `{other}` (expected A, B or C)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::DriverParams;
    use proptest::prelude::*;

    fn cfg(cs: f64) -> AssistConfig {
        AssistConfig {
            gain_cs: cs,
            preview: DriverParams::expert().preview,
            enabled: true,
        }
    }

    #[test]
    fn condition_a_is_silent() {
        assert_eq!(GainCondition::A.gain(), 0.0);
        assert_eq!(assist_torque(0.7, 1.0, -2.0, &cfg(GainCondition::A.gain())).abs(), 0.0);
        assert_eq!(GainCondition::B.gain(), 0.5);
        assert_eq!(GainCondition::C.gain(), 1.0);
    }

    #[test]
    fn direct_substitution() {
        let t = assist_torque(0.2, 0.3, 0.1, &cfg(1.0));
        assert!((t + 0.04).abs() < 1e-15);
    }

    #[test]
    fn vanishing_factors() {
        assert_eq!(assist_torque(0.4, 0.25, 0.25, &cfg(1.0)), 0.0);
        assert_eq!(assist_torque(0.0, 1.0, -1.0, &cfg(1.0)).abs(), 0.0);
        let off = AssistConfig {
            enabled: false,
            ..cfg(1.0)
        };
        assert_eq!(assist_torque(0.4, 1.0, 0.0, &off), 0.0);
    }

    #[test]
    fn condition_parsing() {
        assert_eq!("B".parse::<GainCondition>().unwrap(), GainCondition::B);
        assert!("D".parse::<GainCondition>().is_err());
    }

    proptest! {
        #[test]
        fn never_pushes_away(e in -5.0f64..5.0, th in -8.0f64..8.0, thd in -8.0f64..8.0, cs in 0.0f64..2.0) {
            prop_assert!(assist_torque(e, th, thd, &cfg(cs)) * (th - thd) <= 0.0);
        }

        #[test]
        fn homogeneous_in_gain_and_error(e in -5.0f64..5.0, th in -8.0f64..8.0, thd in -8.0f64..8.0, cs in 0.0f64..2.0) {
            let base = assist_torque(e, th, thd, &cfg(cs));
            prop_assert_eq!(assist_torque(e, th, thd, &cfg(2.0 * cs)), 2.0 * base);
            prop_assert_eq!(assist_torque(2.0 * e, th, thd, &cfg(cs)), 2.0 * base);
        }
    }
}
