//! Reference-tracking NMPC (lower control level).

use super::cost::TrackingWeights;
use super::ReferencePlan;
use crate::ad::{Dual, Real};
use crate::error::{Error, Result};
use crate::integrate::SchemeKind;
use crate::model::{
    ClimateState, ControlInput, Disturbance, GreenhouseModel, HARD_LOWER, HARD_UPPER,
};
use crate::nlp::{solve, transcribe, OcpCost, OcpStructure, SolveOptions, SolveReport, SolverStatus};
use crate::params::GreenhouseParams;
use crate::weather::DisturbanceTrace;
use nalgebra::DVector;

type Dual8 = Dual<8>;
type Dual4 = Dual<4>;

/// Quadratic tracking objective with per-prediction-step references
/// (zero-order hold of the plan).
pub struct TrackingObjective {
    pub weights: TrackingWeights,
    pub x_refs: Vec<[f64; 4]>,
    pub u_refs: Vec<[f64; 4]>,
    pub x_terminal: [f64; 4],
}

impl TrackingObjective {
    fn stage_generic<S: Real>(&self, k: usize, x: &[S; 4], u: &[S; 4]) -> S {
        let mut acc = S::constant(0.0);
        for i in 0..4 {
            let dx = x[i] - self.x_refs[k][i];
            acc = acc + dx * dx * self.weights.q[i];
            let du = u[i] - self.u_refs[k][i];
            acc = acc + du * du * self.weights.r[i];
        }
        acc
    }

    fn terminal_generic<S: Real>(&self, x: &[S; 4]) -> S {
        let mut acc = S::constant(0.0);
        for i in 0..4 {
            let dx = x[i] - self.x_terminal[i];
            acc = acc + dx * dx * self.weights.p[i];
        }
        acc
    }
}

impl OcpCost for TrackingObjective {
    fn stage(&self, k: usize, x: &[f64; 4], u: &[f64; 4]) -> f64 {
        self.stage_generic(k, x, u)
    }
    fn stage_dual(&self, k: usize, x: &[Dual8; 4], u: &[Dual8; 4]) -> Dual8 {
        self.stage_generic(k, x, u)
    }
    fn terminal(&self, x: &[f64; 4]) -> f64 {
        self.terminal_generic(x)
    }
    fn terminal_dual(&self, x: &[Dual4; 4]) -> Dual4 {
        self.terminal_generic(x)
    }
}

/// NMPC horizon, discretization, weights, and solver settings.
#[derive(Clone, Debug)]
pub struct NmpcConfig {
    /// Prediction horizon N (steps).
    pub horizon: usize,
    /// Prediction interval Δt_c (s).
    pub dt: f64,
    pub scheme: SchemeKind,
    pub weights: TrackingWeights,
    pub solver: SolveOptions,
}

impl Default for NmpcConfig {
    fn default() -> Self {
        NmpcConfig {
            horizon: 5,
            dt: 60.0,
            scheme: SchemeKind::Collocation4,
            weights: TrackingWeights::default(),
            solver: SolveOptions {
                feas_tol: 1e-8,
                opt_tol: 1e-6,
                max_outer: 25,
                max_inner: 200,
                ..SolveOptions::default()
            },
        }
    }
}

/// One NMPC solve outcome.
#[derive(Clone, Debug)]
pub struct NmpcStep {
    /// First optimal input, to be held until the next solve.
    pub input: ControlInput,
    /// Full predicted input trajectory.
    pub input_trajectory: Vec<ControlInput>,
    pub report: SolveReport,
    /// True when the solver failed hard and the reference input was
    /// substituted.
    pub fallback: bool,
}

/// Receding-horizon tracker; keeps the previous solution for warm starting.
pub struct NmpcController {
    pub config: NmpcConfig,
    warm_duals: Option<DVector<f64>>,
}

impl NmpcController {
    pub fn new(config: NmpcConfig) -> Self {
        NmpcController {
            config,
            warm_duals: None,
        }
    }

    pub fn reset(&mut self) {
        self.warm_duals = None;
    }

    /// Solve the tracking problem from state `x` at wall-clock `t`.
    ///
    /// References for prediction step `j` are the plan samples covering
    /// `t + j·Δt_c`; the disturbance preview is read from the forecast trace
    /// the same way. On hard solver failure the reference input is returned
    /// with the `fallback` flag set.
    pub fn step(
        &mut self,
        t: f64,
        x: &ClimateState,
        plan: &ReferencePlan,
        forecast: &DisturbanceTrace,
        params: &GreenhouseParams,
    ) -> Result<NmpcStep> {
        let n = self.config.horizon;
        if n == 0 {
            return Err(Error::Config("NMPC horizon must be at least 1".into()));
        }
        let mut x_refs = Vec::with_capacity(n);
        let mut u_refs = Vec::with_capacity(n);
        let mut preview = Vec::with_capacity(n);
        for j in 0..n {
            let tj = t + j as f64 * self.config.dt;
            x_refs.push(plan.state_at(tj).to_array());
            u_refs.push(plan.input_at(tj).to_array());
            preview.push(forecast.sample(tj)?);
        }
        let x_terminal = plan.state_at(t + n as f64 * self.config.dt).to_array();
        let fallback_input = plan.input_at(t);

        let objective = TrackingObjective {
            weights: self.config.weights,
            x_refs,
            u_refs: u_refs.clone(),
            x_terminal,
        };
        let model = GreenhouseModel::new(params);
        let structure = OcpStructure {
            n_intervals: n,
            dt: self.config.dt,
            scheme: self.config.scheme,
            x0: x.to_array(),
            x_scale: OcpStructure::DEFAULT_SCALE,
        };
        let mut problem = match transcribe(
            &model,
            structure,
            objective,
            (HARD_LOWER, HARD_UPPER),
            &preview,
        ) {
            Ok(p) => p,
            Err(e) => return Err(e),
        };
        // Warm start: the reference inputs for the new window with
        // forward-simulated states, plus the previous multipliers.
        if let Ok(guess) = problem.functions.simulation_guess(&u_refs) {
            problem.initial = guess;
        }
        let mut opts = self.config.solver.clone();
        opts.initial_duals = self.warm_duals.clone();

        let (z, report) = solve(&problem, &opts);
        let hard_failure = matches!(
            report.status,
            SolverStatus::Infeasible | SolverStatus::NumericalFailure
        );
        if hard_failure {
            self.warm_duals = None;
            return Ok(NmpcStep {
                input: fallback_input,
                input_trajectory: vec![fallback_input; n],
                report,
                fallback: true,
            });
        }
        self.warm_duals = Some(report.duals.clone());
        let inputs: Vec<ControlInput> = problem
            .functions
            .inputs(&z)
            .into_iter()
            .map(|u| ControlInput::from_array(u).clamped())
            .collect();
        Ok(NmpcStep {
            input: inputs[0],
            input_trajectory: inputs,
            report,
            fallback: false,
        })
    }
}
