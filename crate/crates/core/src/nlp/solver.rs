//! Augmented-Lagrangian solver for box-constrained NLPs with equality
//! constraints.
//!
//! Outer loop: classic method of multipliers with safeguarded penalty growth
//! (×10, capped) and first-order dual updates. Inner loop: projected L-BFGS
//! with an active-set-masked two-loop recursion and a projected backtracking
//! line search. The objective is normalized by its magnitude at the initial
//! guess, which makes the returned argmin invariant under positive rescaling
//! of the cost.

use super::{NlpFunctions, NlpProblem};
use crate::error::Result;
use nalgebra::DVector;
use std::collections::VecDeque;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

/// Outcome of one [`solve`] call.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolverStatus,
    /// Objective value at the returned point (unscaled).
    pub objective: f64,
    /// Infinity norm of the equality constraints at the returned point.
    pub max_defect: f64,
    /// Infinity norm of the box violation (zero up to roundoff: iterates are
    /// projected).
    pub max_bound_violation: f64,
    /// First-order stationarity: projected-gradient infinity norm of the
    /// normalized Lagrangian at the returned multipliers.
    pub stationarity: f64,
    /// Total inner iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub wall_time_ms: f64,
    /// Final Lagrange multiplier estimate (for warm starts).
    pub duals: DVector<f64>,
    /// Iteration log lines; populated when `SolveOptions::collect_log`.
    pub log: Vec<String>,
}

/// Solver tolerances and iteration caps.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Feasibility tolerance on the constraint infinity norm.
    pub feas_tol: f64,
    /// Stationarity tolerance on the projected gradient.
    pub opt_tol: f64,
    pub max_outer: usize,
    /// Inner iteration cap per outer iteration.
    pub max_inner: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    pub lbfgs_memory: usize,
    pub collect_log: bool,
    /// Warm-started multipliers from a previous, structurally identical solve.
    pub initial_duals: Option<DVector<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-6,
            opt_tol: 1e-6,
            max_outer: 40,
            max_inner: 400,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
            lbfgs_memory: 30,
            collect_log: false,
            initial_duals: None,
        }
    }
}

fn project_into(lower: &DVector<f64>, upper: &DVector<f64>, z: &mut DVector<f64>) {
    for i in 0..z.len() {
        z[i] = z[i].clamp(lower[i], upper[i]);
    }
}

fn projected_gradient_norm(
    z: &DVector<f64>,
    g: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> f64 {
    let mut norm = 0.0f64;
    for i in 0..z.len() {
        let step = (z[i] - g[i]).clamp(lower[i], upper[i]) - z[i];
        norm = norm.max(step.abs());
    }
    norm
}

/// Augmented-Lagrangian evaluation workspace.
struct AlEval<'a, F: NlpFunctions> {
    problem: &'a NlpProblem<F>,
    obj_scale: f64,
    c: DVector<f64>,
    w: DVector<f64>,
    jtw: DVector<f64>,
    grad_f: DVector<f64>,
    pub n_evals: usize,
}

impl<'a, F: NlpFunctions> AlEval<'a, F> {
    fn new(problem: &'a NlpProblem<F>, obj_scale: f64) -> Self {
        let n = problem.functions.dim();
        let m = problem.functions.n_constraints();
        AlEval {
            problem,
            obj_scale,
            c: DVector::zeros(m),
            w: DVector::zeros(m),
            jtw: DVector::zeros(n),
            grad_f: DVector::zeros(n),
            n_evals: 0,
        }
    }

    /// Value only.
    fn value(&mut self, z: &DVector<f64>, lambda: &DVector<f64>, mu: f64) -> Result<f64> {
        self.n_evals += 1;
        let f = self.problem.functions.objective(z)?;
        self.problem.functions.constraints(z, &mut self.c)?;
        let mut val = self.obj_scale * f;
        for i in 0..self.c.len() {
            val += lambda[i] * self.c[i] + 0.5 * mu * self.c[i] * self.c[i];
        }
        Ok(val)
    }

    /// Value, gradient, and constraint norm in one pass.
    fn value_grad(
        &mut self,
        z: &DVector<f64>,
        lambda: &DVector<f64>,
        mu: f64,
        grad: &mut DVector<f64>,
    ) -> Result<(f64, f64)> {
        self.n_evals += 1;
        let f = self.problem.functions.objective(z)?;
        self.problem.functions.constraints(z, &mut self.c)?;
        self.problem.functions.gradient(z, &mut self.grad_f)?;
        let mut val = self.obj_scale * f;
        let mut c_norm = 0.0f64;
        for i in 0..self.c.len() {
            val += lambda[i] * self.c[i] + 0.5 * mu * self.c[i] * self.c[i];
            self.w[i] = lambda[i] + mu * self.c[i];
            c_norm = c_norm.max(self.c[i].abs());
        }
        self.problem
            .functions
            .jacobian_transpose_mul(z, &self.w, &mut self.jtw)?;
        for i in 0..grad.len() {
            grad[i] = self.obj_scale * self.grad_f[i] + self.jtw[i];
        }
        Ok((val, c_norm))
    }
}

struct LbfgsHistory {
    pairs: VecDeque<(DVector<f64>, DVector<f64>, f64)>,
    memory: usize,
}

impl LbfgsHistory {
    fn new(memory: usize) -> Self {
        LbfgsHistory {
            pairs: VecDeque::new(),
            memory,
        }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: DVector<f64>, y: DVector<f64>) {
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    /// Two-loop recursion on the masked gradient; returns the descent
    /// direction `-H g`.
    fn direction(&self, g_masked: &DVector<f64>) -> DVector<f64> {
        let mut q = g_masked.clone();
        let k = self.pairs.len();
        let mut alphas = vec![0.0; k];
        for (idx, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            let a = rho * s.dot(&q);
            alphas[idx] = a;
            q.axpy(-a, y, 1.0);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let scale = s.dot(y) / y.dot(y);
            q *= scale;
        }
        for (idx, (s, y, rho)) in self.pairs.iter().enumerate() {
            let b = rho * y.dot(&q);
            q.axpy(alphas[idx] - b, s, 1.0);
        }
        -q
    }
}

enum InnerOutcome {
    Converged,
    IterCap,
    Stalled,
    Failure,
}

/// Minimize the augmented Lagrangian over the box to projected-gradient
/// tolerance `tol`.
#[allow(clippy::too_many_arguments)]
fn inner_minimize<F: NlpFunctions>(
    eval: &mut AlEval<'_, F>,
    z: &mut DVector<f64>,
    lambda: &DVector<f64>,
    mu: f64,
    tol: f64,
    max_iter: usize,
    history: &mut LbfgsHistory,
) -> (InnerOutcome, usize) {
    let lower = &eval.problem.lower;
    let upper = &eval.problem.upper;
    let n = z.len();
    let mut grad = DVector::zeros(n);
    let (mut f_cur, _) = match eval.value_grad(z, lambda, mu, &mut grad) {
        Ok(v) if v.0.is_finite() => v,
        _ => return (InnerOutcome::Failure, 0),
    };
    history.clear();

    let active_eps = 1e-11;
    let mut masked = DVector::zeros(n);
    let mut stagnant = 0usize;
    for iter in 0..max_iter {
        if projected_gradient_norm(z, &grad, lower, upper) <= tol {
            return (InnerOutcome::Converged, iter);
        }
        // Give the outer loop a chance to update multipliers when the value
        // has stopped moving.
        if stagnant >= 12 {
            return (InnerOutcome::Stalled, iter);
        }

        // Mask gradient components pushing into active bounds.
        for i in 0..n {
            let at_lower = z[i] - lower[i] <= active_eps && grad[i] > 0.0;
            let at_upper = upper[i] - z[i] <= active_eps && grad[i] < 0.0;
            masked[i] = if at_lower || at_upper { 0.0 } else { grad[i] };
        }

        let mut dir = history.direction(&masked);
        for i in 0..n {
            let at_lower = z[i] - lower[i] <= active_eps && grad[i] > 0.0;
            let at_upper = upper[i] - z[i] <= active_eps && grad[i] < 0.0;
            if at_lower || at_upper {
                dir[i] = 0.0;
            }
        }
        // Fall back to steepest descent when the quasi-Newton direction has
        // lost descent.
        if dir.dot(&grad) > -1e-14 * dir.norm() * grad.norm() {
            dir.copy_from(&masked);
            dir.neg_mut();
            history.clear();
        }
        if dir.norm() == 0.0 {
            return (InnerOutcome::Converged, iter);
        }

        // Projected backtracking Armijo search.
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut z_new = DVector::zeros(n);
        let mut f_new = f_cur;
        for _ in 0..40 {
            z_new.copy_from(z);
            z_new.axpy(alpha, &dir, 1.0);
            project_into(lower, upper, &mut z_new);
            let step = &z_new - &*z;
            if step.norm() == 0.0 {
                break;
            }
            let predicted = grad.dot(&step);
            match eval.value(&z_new, lambda, mu) {
                Ok(v) if v.is_finite() => {
                    f_new = v;
                    if f_new <= f_cur + 1e-4 * predicted.min(0.0) {
                        accepted = true;
                        break;
                    }
                }
                _ => {}
            }
            alpha *= 0.5;
        }
        if !accepted {
            return (InnerOutcome::Stalled, iter);
        }

        let mut grad_new = DVector::zeros(n);
        let step = &z_new - &*z;
        match eval.value_grad(&z_new, lambda, mu, &mut grad_new) {
            Ok((v, _)) if v.is_finite() => {
                history.push(step, &grad_new - &grad);
                z.copy_from(&z_new);
                grad.copy_from(&grad_new);
                let drop = f_cur - f_new;
                if drop <= 1e-14 * f_cur.abs().max(1.0) {
                    stagnant += 1;
                } else {
                    stagnant = 0;
                }
                f_cur = f_new;
            }
            _ => return (InnerOutcome::Failure, iter),
        }
    }
    (InnerOutcome::IterCap, max_iter)
}

/// Solve the NLP. Returns the best iterate with a diagnostic report; this
/// function does not abort on numerical trouble, it reports it.
pub fn solve<F: NlpFunctions>(
    problem: &NlpProblem<F>,
    opts: &SolveOptions,
) -> (DVector<f64>, SolveReport) {
    let start = Instant::now();
    let m = problem.functions.n_constraints();
    let mut z = problem.project(&problem.initial);

    // Normalize the objective so tolerances are scale-free; the argmin is
    // unchanged under positive cost rescaling.
    let obj_scale = match problem.functions.objective(&z) {
        Ok(f0) if f0.is_finite() => 1.0 / f0.abs().max(1.0),
        _ => 1.0,
    };
    let mut eval = AlEval::new(problem, obj_scale);

    let mut lambda = opts
        .initial_duals
        .clone()
        .filter(|l| l.len() == m)
        .unwrap_or_else(|| DVector::zeros(m));
    let mut mu = opts.initial_penalty;
    let mut omega = (opts.opt_tol * 100.0).min(1e-3);
    let mut eta = 1e-2f64;

    let mut status = SolverStatus::MaxIter;
    let mut total_inner = 0;
    let mut outer_done = 0;
    let mut log = Vec::new();
    let mut stagnant = 0usize;
    let mut theta_prev = f64::INFINITY;
    let mut grad = DVector::zeros(problem.functions.dim());

    for outer in 0..opts.max_outer {
        outer_done = outer + 1;
        let inner_tol = omega.max(opts.opt_tol * 0.1);
        let mut history = LbfgsHistory::new(opts.lbfgs_memory);
        let (outcome, iters) = inner_minimize(
            &mut eval,
            &mut z,
            &lambda,
            mu,
            inner_tol,
            opts.max_inner,
            &mut history,
        );
        total_inner += iters;

        if matches!(outcome, InnerOutcome::Failure) {
            status = SolverStatus::NumericalFailure;
            break;
        }

        // Current feasibility and stationarity.
        let (_, theta) = match eval.value_grad(&z, &lambda, mu, &mut grad) {
            Ok(v) => v,
            Err(_) => {
                status = SolverStatus::NumericalFailure;
                break;
            }
        };
        let pg = projected_gradient_norm(&z, &grad, &problem.lower, &problem.upper);

        if opts.collect_log {
            log.push(format!(
                "outer {outer:>3}  inner {iters:>4}  mu {mu:.1e}  defect {theta:.3e}  pg {pg:.3e}"
            ));
        }

        if theta <= opts.feas_tol && pg <= opts.opt_tol {
            // The inner gradient at (lambda, mu) is the Lagrangian gradient
            // at the first-order multiplier update.
            lambda.axpy(mu, &eval.c, 1.0);
            status = SolverStatus::Optimal;
            break;
        }

        if theta <= eta.max(opts.feas_tol) {
            lambda.axpy(mu, &eval.c, 1.0);
            eta = (eta / 10.0).max(opts.feas_tol * 0.1);
            omega = (omega / 10.0).max(opts.opt_tol * 0.1);
        } else {
            mu = (mu * opts.penalty_growth).min(opts.max_penalty);
            if mu >= opts.max_penalty {
                if theta >= theta_prev * 0.99 {
                    stagnant += 1;
                } else {
                    stagnant = 0;
                }
                if stagnant >= 3 {
                    status = SolverStatus::Infeasible;
                    break;
                }
            }
        }
        theta_prev = theta;
    }

    // Final diagnostics at the returned point.
    let objective = problem.functions.objective(&z).unwrap_or(f64::NAN);
    let mut c = DVector::zeros(m);
    let max_defect = match problem.functions.constraints(&z, &mut c) {
        Ok(()) => c.amax(),
        Err(_) => f64::NAN,
    };
    let stationarity = match eval.value_grad(&z, &lambda, mu, &mut grad) {
        Ok(_) => projected_gradient_norm(&z, &grad, &problem.lower, &problem.upper),
        Err(_) => f64::NAN,
    };
    let mut bound_violation = 0.0f64;
    for i in 0..z.len() {
        bound_violation = bound_violation
            .max(problem.lower[i] - z[i])
            .max(z[i] - problem.upper[i]);
    }
    // A run that hit the iteration cap but satisfies both tolerances is a
    // solution.
    if status == SolverStatus::MaxIter
        && max_defect <= opts.feas_tol
        && stationarity <= opts.opt_tol
    {
        status = SolverStatus::Optimal;
    }

    let report = SolveReport {
        status,
        objective,
        max_defect,
        max_bound_violation: bound_violation.max(0.0),
        stationarity,
        iterations: total_inner,
        outer_iterations: outer_done,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        duals: lambda,
        log,
    };
    (z, report)
}
