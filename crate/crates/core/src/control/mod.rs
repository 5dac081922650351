//! Two-level greenhouse control.
//!
//! The upper level ([`plan_day`]) solves a day-ahead economic OCP over the
//! weather forecast and emits a [`ReferencePlan`]; the lower level
//! ([`NmpcController`]) tracks that plan with a short-horizon NMPC; and
//! [`run_closed_loop`] drives a full day of plant-in-the-loop operation with
//! either the NMPC or a drop-in replacement controller, accounting costs and
//! timing along the way.

mod closed_loop;
mod cost;
mod nmpc;
mod planner;

pub use closed_loop::{
    run_closed_loop, timer_overhead_ms, tracking_rmse, ClosedLoopConfig, ClosedLoopResult,
    ControlContext, ControlDecision, CostLedger, DayController, LedgerStep, NmpcDayController,
    TimingStats,
};
pub use cost::{
    operating_cost, penalty_cost, piecewise_penalty, smoothed_penalty, stage_cost,
    terminal_value, CostConfig, EconomicCostSpec, EconomicObjective, TrackingWeights,
};
pub use nmpc::{NmpcConfig, NmpcController, NmpcStep, TrackingObjective};
pub use planner::{evaluate_day_cost, plan_day, DayCostSummary, PlannerConfig};

use crate::error::{Error, Result};
use crate::model::{ClimateState, ControlInput, Disturbance};
use crate::nlp::SolveReport;

/// Day-ahead reference trajectories produced by the planner.
#[derive(Clone, Debug)]
pub struct ReferencePlan {
    /// Planner sample interval Δt_o (s).
    pub dt: f64,
    /// Epoch of the first sample (s).
    pub start: f64,
    /// Reference states, one more than inputs.
    pub x_ref: Vec<ClimateState>,
    /// Reference inputs, zero-order hold per interval.
    pub u_ref: Vec<ControlInput>,
    /// Planner solve diagnostics.
    pub report: SolveReport,
}

impl ReferencePlan {
    pub fn n_intervals(&self) -> usize {
        self.u_ref.len()
    }

    pub fn end_time(&self) -> f64 {
        self.start + self.dt * self.n_intervals() as f64
    }

    fn index_for(&self, t: f64, max: usize) -> usize {
        let idx = ((t - self.start) / self.dt).floor();
        (idx.max(0.0) as usize).min(max)
    }

    /// Reference state sample covering wall-clock time `t` (zero-order hold;
    /// the terminal sample covers everything at or beyond the day end).
    pub fn state_at(&self, t: f64) -> ClimateState {
        self.x_ref[self.index_for(t, self.x_ref.len() - 1)]
    }

    /// Reference input sample covering wall-clock time `t`.
    pub fn input_at(&self, t: f64) -> ControlInput {
        self.u_ref[self.index_for(t, self.u_ref.len() - 1)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_ref.len() != self.u_ref.len() + 1 {
            return Err(Error::Structural(format!(
                "plan has {} states for {} inputs",
                self.x_ref.len(),
                self.u_ref.len()
            )));
        }
        if self.dt <= 0.0 {
            return Err(Error::Structural("plan dt must be positive".into()));
        }
        for (k, u) in self.u_ref.iter().enumerate() {
            for (i, v) in u.to_array().iter().enumerate() {
                if !(-1e-9..=1.0 + 1e-9).contains(v) {
                    return Err(Error::Structural(format!(
                        "plan input {k} component {i} outside [0,1]: {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Input vector of the tracking policy, `w = [x, x_ref, u_ref, d] ∈ ℝ¹⁶`.
#[derive(Clone, Copy, Debug)]
pub struct PolicyInput {
    pub x: ClimateState,
    pub x_ref: ClimateState,
    pub u_ref: ControlInput,
    pub d: Disturbance,
}

impl PolicyInput {
    pub const DIM: usize = 16;

    pub fn to_array(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        out[0..4].copy_from_slice(&self.x.to_array());
        out[4..8].copy_from_slice(&self.x_ref.to_array());
        out[8..12].copy_from_slice(&self.u_ref.to_array());
        out[12..16].copy_from_slice(&self.d.to_array());
        out
    }

    pub fn from_array(w: [f64; 16]) -> Self {
        PolicyInput {
            x: ClimateState::from_array([w[0], w[1], w[2], w[3]]),
            x_ref: ClimateState::from_array([w[4], w[5], w[6], w[7]]),
            u_ref: ControlInput::from_array([w[8], w[9], w[10], w[11]]),
            d: Disturbance::new(w[12], w[13], w[14], w[15]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}
