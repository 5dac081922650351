//! Closed-loop executive: one day of plant-in-the-loop control with cost and
//! timing accounting.

use super::cost::{operating_cost, penalty_cost, terminal_value, EconomicCostSpec};
use super::nmpc::NmpcController;
use super::{PolicyInput, ReferencePlan};
use crate::error::{Error, Result};
use crate::integrate::{step, StepScheme, Trajectory};
use crate::model::{ClimateState, ControlInput, Disturbance, GreenhouseModel};
use crate::nlp::SolveReport;
use crate::params::GreenhouseParams;
use crate::weather::DisturbanceTrace;
use std::time::Instant;

/// Everything a controller may consult at one decision instant.
pub struct ControlContext<'a> {
    pub t: f64,
    pub x: ClimateState,
    pub x_ref: ClimateState,
    pub u_ref: ControlInput,
    /// Currently measured disturbance (the true weather at `t`).
    pub measured: Disturbance,
    pub plan: &'a ReferencePlan,
    /// Short-term forecast available to predictive controllers.
    pub forecast: &'a DisturbanceTrace,
    pub params: &'a GreenhouseParams,
}

impl ControlContext<'_> {
    /// The policy feature vector `w = [x, x_ref, u_ref, d]`.
    pub fn policy_input(&self) -> PolicyInput {
        PolicyInput {
            x: self.x,
            x_ref: self.x_ref,
            u_ref: self.u_ref,
            d: self.measured,
        }
    }
}

/// Controller output for one interval.
pub struct ControlDecision {
    pub input: ControlInput,
    pub fallback: bool,
    pub solve: Option<SolveReport>,
}

/// A tracking controller driving the plant at the control cadence.
pub trait DayController {
    fn name(&self) -> &'static str;
    fn control(&mut self, ctx: &ControlContext<'_>) -> Result<ControlDecision>;
}

/// The NMPC wrapped as a day controller.
pub struct NmpcDayController {
    pub inner: NmpcController,
}

impl NmpcDayController {
    pub fn new(inner: NmpcController) -> Self {
        NmpcDayController { inner }
    }
}

impl DayController for NmpcDayController {
    fn name(&self) -> &'static str {
        "nmpc"
    }

    fn control(&mut self, ctx: &ControlContext<'_>) -> Result<ControlDecision> {
        let step = self
            .inner
            .step(ctx.t, &ctx.x, ctx.plan, ctx.forecast, ctx.params)?;
        Ok(ControlDecision {
            input: step.input,
            fallback: step.fallback,
            solve: Some(step.report),
        })
    }
}

/// One accounted control interval.
#[derive(Clone, Copy, Debug)]
pub struct LedgerStep {
    pub t: f64,
    /// Actuation cost over the interval (€).
    pub operating: f64,
    /// Smoothed soft-constraint penalty at the interval start (€).
    pub penalty: f64,
}

/// Cost bookkeeping of one closed-loop day.
#[derive(Clone, Debug, Default)]
pub struct CostLedger {
    pub steps: Vec<LedgerStep>,
    /// Terminal crop value V (€).
    pub terminal: f64,
}

impl CostLedger {
    pub fn total_operating(&self) -> f64 {
        self.steps.iter().map(|s| s.operating).sum()
    }

    pub fn total_penalty(&self) -> f64 {
        self.steps.iter().map(|s| s.penalty).sum()
    }

    /// Total stage cost Σ L (operating + penalties).
    pub fn total_stage(&self) -> f64 {
        self.steps.iter().map(|s| s.operating + s.penalty).sum()
    }

    /// Closed-loop net cost `S = V − Σ L`.
    pub fn net_cost(&self) -> f64 {
        self.terminal - self.total_stage()
    }
}

/// Wall-time statistics of the controller calls, overhead-corrected.
#[derive(Clone, Copy, Debug, Default)]
pub struct TimingStats {
    pub calls: usize,
    pub mean_ms: f64,
    pub sd_ms: f64,
    /// Per-call timer overhead that was subtracted (ms).
    pub overhead_ms: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[f64], overhead_ms: f64) -> TimingStats {
        let calls = samples.len();
        if calls == 0 {
            return TimingStats::default();
        }
        let corrected: Vec<f64> = samples.iter().map(|s| (s - overhead_ms).max(0.0)).collect();
        let mean = corrected.iter().sum::<f64>() / calls as f64;
        let var = corrected.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / calls.max(1) as f64;
        TimingStats {
            calls,
            mean_ms: mean,
            sd_ms: var.sqrt(),
            overhead_ms,
        }
    }
}

/// Median cost of one `Instant::now()/elapsed` pair (ms).
pub fn timer_overhead_ms() -> f64 {
    let mut samples: Vec<f64> = (0..512)
        .map(|_| {
            let t = Instant::now();
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

/// Result of one closed-loop day.
pub struct ClosedLoopResult {
    /// Plant trajectory at the control cadence.
    pub trajectory: Trajectory,
    pub ledger: CostLedger,
    pub timing: TimingStats,
    /// `(w, u)` pairs recorded at every controller call.
    pub records: Vec<(PolicyInput, ControlInput)>,
    /// Steps on which the controller fell back to the reference input.
    pub fallback_steps: Vec<usize>,
}

/// Closed-loop cadence and plant-truth integration settings.
#[derive(Clone, Debug)]
pub struct ClosedLoopConfig {
    /// Controller call interval (s).
    pub control_dt: f64,
    /// Plant-truth integrator over one control interval.
    pub plant: StepScheme,
    /// Run one untimed warm-up call before the loop.
    pub warm_up: bool,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        ClosedLoopConfig {
            control_dt: 300.0,
            plant: StepScheme::plant_truth(300.0),
            warm_up: true,
        }
    }
}

/// Drive one day: every `control_dt` seconds assemble the context, ask the
/// controller for an input, hold it, and integrate the plant under the true
/// weather. Costs are accumulated at the control cadence; wall time is
/// measured around the controller call only.
pub fn run_closed_loop(
    x0: ClimateState,
    plan: &ReferencePlan,
    truth: &DisturbanceTrace,
    forecast: &DisturbanceTrace,
    controller: &mut dyn DayController,
    spec: &EconomicCostSpec,
    params: &GreenhouseParams,
    config: &ClosedLoopConfig,
) -> Result<ClosedLoopResult> {
    let n = plan.n_intervals();
    if n == 0 {
        return Err(Error::Config("plan covers no intervals".into()));
    }
    if (config.control_dt - plan.dt).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "control interval {} does not match plan interval {}",
            config.control_dt, plan.dt
        )));
    }
    // Span checks up front.
    let last_t = plan.start + (n - 1) as f64 * config.control_dt;
    truth.sample(plan.start)?;
    truth.sample(last_t)?;
    forecast.sample(last_t)?;

    let model = GreenhouseModel::new(params);
    let overhead_ms = timer_overhead_ms();
    let mut x = x0;
    let mut trajectory = Trajectory {
        times: vec![plan.start],
        states: vec![x0],
        inputs: Vec::with_capacity(n),
        disturbances: Vec::with_capacity(n),
        violations: vec![!x0.in_hard_box(1e-9)],
    };
    let mut ledger = CostLedger::default();
    let mut records = Vec::with_capacity(n);
    let mut fallback_steps = Vec::new();
    let mut samples = Vec::with_capacity(n);

    if config.warm_up {
        let ctx = ControlContext {
            t: plan.start,
            x,
            x_ref: plan.state_at(plan.start),
            u_ref: plan.input_at(plan.start),
            measured: truth.sample(plan.start)?,
            plan,
            forecast,
            params,
        };
        let _ = controller.control(&ctx)?;
    }

    for k in 0..n {
        let t = plan.start + k as f64 * config.control_dt;
        let measured = truth.sample(t)?;
        let ctx = ControlContext {
            t,
            x,
            x_ref: plan.state_at(t),
            u_ref: plan.input_at(t),
            measured,
            plan,
            forecast,
            params,
        };

        let clock = Instant::now();
        let decision = controller.control(&ctx)?;
        samples.push(clock.elapsed().as_secs_f64() * 1e3);

        let u = decision.input.clamped();
        if decision.fallback {
            fallback_steps.push(k);
        }
        records.push((ctx.policy_input(), u));
        ledger.steps.push(LedgerStep {
            t,
            operating: operating_cost(&u, spec, config.control_dt),
            penalty: penalty_cost(&x, spec),
        });

        x = step(&model, &x, &u, &measured, &config.plant)?;
        trajectory.times.push(t + config.control_dt);
        trajectory.states.push(x);
        trajectory.inputs.push(u);
        trajectory.disturbances.push(measured);
        trajectory.violations.push(!x.in_hard_box(1e-9));
    }

    ledger.terminal = terminal_value(&x, spec, params);
    Ok(ClosedLoopResult {
        trajectory,
        ledger,
        timing: TimingStats::from_samples(&samples, overhead_ms),
        records,
        fallback_steps,
    })
}

/// Per-state RMSE between a closed-loop trajectory and the plan's reference
/// states at the shared grid points.
pub fn tracking_rmse(trajectory: &Trajectory, plan: &ReferencePlan) -> [f64; 4] {
    let mut acc = [0.0; 4];
    let mut count = 0usize;
    for (t, x) in trajectory.times.iter().zip(trajectory.states.iter()) {
        let r = plan.state_at(*t).to_array();
        let xv = x.to_array();
        for i in 0..4 {
            acc[i] += (xv[i] - r[i]) * (xv[i] - r[i]);
        }
        count += 1;
    }
    std::array::from_fn(|i| (acc[i] / count.max(1) as f64).sqrt())
}
