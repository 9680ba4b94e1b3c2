//! Simulation toolkit for haptic shared control of reverse parking.
//!
//! A driver model and an assist controller act on one steering column at the
//! same time. The crate plans the desired parking path, simulates the shared
//! loop at a fixed step, labels the cooperative status of both agents from
//! windowed pseudo-works, and replays a four-phase training protocol across
//! assist gain conditions.
//!
//! Module map:
//! - [`planner`]: cubic Bezier parking paths under a minimum turning radius.
//! - [`vehicle`]: kinematic bicycle model and steering column dynamics.
//! - [`driver`]: preview steering, neuromuscular torque and skill anchors.
//! - [`assist`]: error-scaled guidance torque.
//! - [`coop`]: pseudo-work and five-state cooperative classification.
//! - [`sim`]: closed-loop trial runner, logs and metrics.
//! - [`experiment`]: phase protocol across gain conditions.
//! - [`config`]: sectioned `key = value` run configuration.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assist;
pub mod config;
pub mod coop;
pub mod driver;
mod error;
pub mod experiment;
pub mod fmt;
pub mod planner;
pub mod plot;
pub mod rng;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
