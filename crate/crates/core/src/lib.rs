//! Greenhouse climate simulation, hierarchical economic control, and policy
//! distillation.
//!
//! The crate is organized around the control pipeline:
//!
//! - [`model`] — continuous-time climate/crop dynamics with smoothed
//!   discontinuities, differentiable end to end;
//! - [`integrate`] — Euler/RK4/collocation stepping for plant truth and
//!   controller predictions;
//! - [`weather`] — synthetic disturbance generation, forecast perturbation,
//!   trace persistence;
//! - [`nlp`] — direct transcription of finite-horizon optimal control
//!   problems into box-constrained NLPs and an augmented-Lagrangian solver;
//! - [`control`] — the day-ahead economic planner, the tracking NMPC, and
//!   the closed-loop executive;
//! - [`policy`] — the feed-forward network that imitates the NMPC, its
//!   trainer, and dataset generation;
//! - [`harness`] — experiment orchestration, cost/timing comparison, and
//!   report files.

pub mod ad;
pub mod control;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod model;
pub mod nlp;
pub mod params;
pub mod policy;
pub mod weather;

#[cfg(test)]
pub(crate) mod testfields;

pub use error::{Error, Result};
pub use model::{ClimateState, ControlInput, Disturbance};
pub use params::GreenhouseParams;
