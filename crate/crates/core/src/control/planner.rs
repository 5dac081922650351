//! Day-ahead economic planner (upper control level).

use super::cost::{
    operating_cost, penalty_cost, terminal_value, EconomicCostSpec, EconomicObjective,
};
use super::ReferencePlan;
use crate::error::{Error, Result};
use crate::integrate::SchemeKind;
use crate::model::{ClimateState, ControlInput, GreenhouseModel, HARD_LOWER, HARD_UPPER};
use crate::nlp::{solve, transcribe, OcpStructure, SolveOptions, SolverStatus};
use crate::params::GreenhouseParams;
use crate::weather::DisturbanceTrace;

/// Planner discretization and solver settings.
#[derive(Clone, Debug)]
pub struct PlannerConfig {
    /// Sample interval Δt_o (s).
    pub dt: f64,
    pub scheme: SchemeKind,
    /// Span of the plan (s); one day by default.
    pub span: f64,
    pub solver: SolveOptions,
    /// Acceptance threshold on the plan's physical defects.
    pub feasibility_tol: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            dt: 300.0,
            scheme: SchemeKind::Collocation4,
            span: 86_400.0,
            solver: SolveOptions {
                // Scaled defect tolerance chosen so the largest state range
                // (CO2, 700 ppm) still meets the 1e-6 physical defect bound.
                feas_tol: 1.4e-9,
                opt_tol: 1e-6,
                max_outer: 60,
                max_inner: 600,
                ..SolveOptions::default()
            },
            feasibility_tol: 1e-6,
        }
    }
}

impl PlannerConfig {
    pub fn n_intervals(&self) -> usize {
        (self.span / self.dt).round() as usize
    }
}

/// Solve the day-ahead economic OCP and return the reference plan.
///
/// The initial guess holds inputs at midpoint with states forward-simulated;
/// a previous day's plan can be supplied as a warm start for chained runs.
pub fn plan_day(
    x0: ClimateState,
    forecast: &DisturbanceTrace,
    spec: &EconomicCostSpec,
    params: &GreenhouseParams,
    config: &PlannerConfig,
    warm: Option<&ReferencePlan>,
) -> Result<ReferencePlan> {
    spec.validate()?;
    let n = config.n_intervals();
    if n == 0 {
        return Err(Error::Config("planner span shorter than one interval".into()));
    }
    if (forecast.dt - config.dt).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "forecast sampled at {} s but the planner needs {} s",
            forecast.dt, config.dt
        )));
    }
    if forecast.rows.len() < n {
        return Err(Error::Span {
            context: "day-ahead forecast".into(),
            needed: n,
            available: forecast.rows.len(),
        });
    }

    let model = GreenhouseModel::new(params);
    let objective = EconomicObjective {
        spec,
        params,
        dt: config.dt,
    };
    let structure = OcpStructure {
        n_intervals: n,
        dt: config.dt,
        scheme: config.scheme,
        x0: x0.to_array(),
        x_scale: OcpStructure::DEFAULT_SCALE,
    };
    let mut problem = transcribe(
        &model,
        structure,
        objective,
        (HARD_LOWER, HARD_UPPER),
        &forecast.rows[..n],
    )?;

    problem.initial = match warm {
        Some(plan) if plan.u_ref.len() == n => {
            let states: Vec<[f64; 4]> = plan.x_ref.iter().map(|x| x.to_array()).collect();
            let mut states = states;
            states[0] = x0.to_array();
            let inputs: Vec<[f64; 4]> = plan.u_ref.iter().map(|u| u.to_array()).collect();
            problem.functions.pack(&states, &inputs)?
        }
        _ => problem
            .functions
            .simulation_guess(&vec![[0.5, 0.5, 0.5, 0.5]; n])?,
    };

    let (z, report) = solve(&problem, &config.solver);
    let defect = problem.functions.max_physical_defect(&z)?;
    if !matches!(report.status, SolverStatus::Optimal | SolverStatus::MaxIter)
        || defect > config.feasibility_tol
    {
        return Err(Error::Planning(Box::new(report)));
    }

    let x_ref = problem
        .functions
        .states(&z)
        .into_iter()
        .map(ClimateState::from_array)
        .collect();
    let u_ref = problem
        .functions
        .inputs(&z)
        .into_iter()
        .map(|u| ControlInput::from_array(u).clamped())
        .collect();
    let plan = ReferencePlan {
        dt: config.dt,
        start: forecast.start,
        x_ref,
        u_ref,
        report,
    };
    plan.validate()?;
    Ok(plan)
}

/// Cost decomposition of a day rollout evaluated at the planner cadence.
#[derive(Clone, Copy, Debug)]
pub struct DayCostSummary {
    pub operating: f64,
    pub penalty: f64,
    pub terminal: f64,
}

impl DayCostSummary {
    /// Day-ahead objective `J_o = Σ L − V`.
    pub fn objective(&self) -> f64 {
        self.operating + self.penalty - self.terminal
    }

    /// Closed-loop net cost `S = V − Σ L`.
    pub fn net_cost(&self) -> f64 {
        self.terminal - self.operating - self.penalty
    }
}

/// Evaluate the economic terms along a state/input sequence (states one
/// longer than inputs).
pub fn evaluate_day_cost(
    states: &[ClimateState],
    inputs: &[ControlInput],
    spec: &EconomicCostSpec,
    params: &GreenhouseParams,
    dt: f64,
) -> Result<DayCostSummary> {
    if states.len() != inputs.len() + 1 {
        return Err(Error::Structural(format!(
            "need one more state than inputs, got {} and {}",
            states.len(),
            inputs.len()
        )));
    }
    let mut operating = 0.0;
    let mut penalty = 0.0;
    for (x, u) in states.iter().zip(inputs.iter()) {
        operating += operating_cost(u, spec, dt);
        penalty += penalty_cost(x, spec);
    }
    Ok(DayCostSummary {
        operating,
        penalty,
        terminal: terminal_value(states.last().unwrap(), spec, params),
    })
}
