//! Direct transcription of a finite-horizon OCP into a box-constrained NLP.
//!
//! Decision vector: `[u(t_0..t_{N-1}) | x(t_1..t_N) | stage states]`, the
//! stage block present only for degree-4 collocation (three interior stages
//! per interval; the fourth Radau stage is the interval end state itself).
//! State variables are scaled by the hard-box ranges so every decision
//! component lives on a unit scale; defects are scaled the same way, which
//! makes the identity part of the constraint Jacobian exactly 1.
//!
//! Derivatives are exact: dual numbers are pushed through the integrator map
//! (explicit schemes) or the stage equations (collocation), one interval
//! block at a time.

use super::{NlpFunctions, NlpProblem};
use crate::ad::{Dual, Real};
use crate::error::{Error, Result};
use crate::integrate::{
    collocation, collocation_step, euler_step, rk4_step, step, SchemeKind, StepScheme,
};
use crate::model::{Disturbance, VectorField};
use nalgebra::DVector;

type Dual8 = Dual<8>;
type Dual4 = Dual<4>;

/// Stage and terminal cost terms of a transcribed OCP.
///
/// Implementations provide plain and dual-number evaluation of the same
/// expression (typically one generic function with two thin wrappers).
pub trait OcpCost {
    fn stage(&self, k: usize, x: &[f64; 4], u: &[f64; 4]) -> f64;
    /// Stage term with derivative seeds: directions 0..4 are the state,
    /// 4..8 the input.
    fn stage_dual(&self, k: usize, x: &[Dual8; 4], u: &[Dual8; 4]) -> Dual8;
    fn terminal(&self, x: &[f64; 4]) -> f64;
    fn terminal_dual(&self, x: &[Dual4; 4]) -> Dual4;
}

/// Shape of the transcription.
#[derive(Clone, Copy, Debug)]
pub struct OcpStructure {
    pub n_intervals: usize,
    /// Interval length (s).
    pub dt: f64,
    pub scheme: SchemeKind,
    /// Fixed initial state (physical units).
    pub x0: [f64; 4],
    /// Per-state variable/defect scale (physical units per scaled unit).
    /// Chosen near the typical daily excursion of each state, which keeps
    /// gradient components commensurate; box bounds are enforced exactly
    /// regardless of the scale.
    pub x_scale: [f64; 4],
}

impl OcpStructure {
    /// Typical daily excursions of the greenhouse states.
    pub const DEFAULT_SCALE: [f64; 4] = [16.0, 700.0, 90.0, 2.0];
}

/// The assembled OCP functions behind the generic NLP interface.
pub struct TranscribedOcp<'a, F: VectorField, C: OcpCost> {
    pub structure: OcpStructure,
    field: &'a F,
    pub cost: C,
    disturbances: Vec<Disturbance>,
    x_lo: [f64; 4],
    /// Scaled upper bound of each state variable, `(hi - lo) / scale`.
    x_hi_scaled: [f64; 4],
    x_scale: [f64; 4],
}

/// Build the NLP for a finite-horizon OCP.
///
/// `state_bounds` become box constraints on every state (and collocation
/// stage) variable; inputs are boxed to `[0, 1]`. The initial guess holds
/// inputs at midpoint with all state variables at `x0`; callers refine it
/// via [`TranscribedOcp::pack`] or [`TranscribedOcp::simulation_guess`].
pub fn transcribe<'a, F: VectorField, C: OcpCost>(
    field: &'a F,
    structure: OcpStructure,
    cost: C,
    state_bounds: ([f64; 4], [f64; 4]),
    preview: &[Disturbance],
) -> Result<NlpProblem<TranscribedOcp<'a, F, C>>> {
    let n = structure.n_intervals;
    if n == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    StepScheme::new(structure.scheme, structure.dt).validate()?;
    if preview.len() < n {
        return Err(Error::Span {
            context: "disturbance preview for transcription".into(),
            needed: n,
            available: preview.len(),
        });
    }
    let (x_lo, x_hi) = state_bounds;
    let mut x_hi_scaled = [0.0; 4];
    for i in 0..4 {
        if !(x_hi[i] > x_lo[i]) {
            return Err(Error::Config(format!(
                "state bound {i} inverted: [{}, {}]",
                x_lo[i], x_hi[i]
            )));
        }
        if !(structure.x_scale[i] > 0.0) {
            return Err(Error::Config(format!(
                "state scale {i} must be positive, got {}",
                structure.x_scale[i]
            )));
        }
        x_hi_scaled[i] = (x_hi[i] - x_lo[i]) / structure.x_scale[i];
    }

    let ocp = TranscribedOcp {
        structure,
        field,
        cost,
        disturbances: preview[..n].to_vec(),
        x_lo,
        x_hi_scaled,
        x_scale: structure.x_scale,
    };

    let dim = ocp.dim();
    let mut lower = DVector::zeros(dim);
    let mut upper = DVector::zeros(dim);
    for i in 0..4 * n {
        lower[i] = 0.0;
        upper[i] = 1.0;
    }
    for i in 4 * n..dim {
        lower[i] = 0.0;
        upper[i] = x_hi_scaled[(i - 4 * n) % 4];
    }

    let mut initial = DVector::zeros(dim);
    for i in 0..4 * n {
        initial[i] = 0.5;
    }
    let x0_scaled = ocp.scale_state(&structure.x0);
    for k in 0..ocp.n_state_vars() / 4 {
        for s in 0..4 {
            initial[4 * n + 4 * k + s] = x0_scaled[s].clamp(0.0, x_hi_scaled[s]);
        }
    }

    NlpProblem::new(ocp, lower, upper, initial)
}

impl<F: VectorField, C: OcpCost> TranscribedOcp<'_, F, C> {
    fn n(&self) -> usize {
        self.structure.n_intervals
    }

    fn stages_per_interval(&self) -> usize {
        match self.structure.scheme {
            SchemeKind::Collocation4 => 3,
            _ => 0,
        }
    }

    fn n_state_vars(&self) -> usize {
        4 * self.n() * (1 + self.stages_per_interval())
    }

    fn u_off(&self, k: usize) -> usize {
        4 * k
    }

    fn x_off(&self, k: usize) -> usize {
        debug_assert!(k >= 1);
        4 * self.n() + 4 * (k - 1)
    }

    fn s_off(&self, k: usize, stage: usize) -> usize {
        8 * self.n() + 12 * k + 4 * stage
    }

    fn scale_state(&self, x: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|i| (x[i] - self.x_lo[i]) / self.x_scale[i])
    }

    fn unscale_at(&self, z: &DVector<f64>, off: usize) -> [f64; 4] {
        std::array::from_fn(|i| self.x_lo[i] + z[off + i] * self.x_scale[i])
    }

    fn input_at(&self, z: &DVector<f64>, k: usize) -> [f64; 4] {
        let off = self.u_off(k);
        std::array::from_fn(|i| z[off + i])
    }

    /// State at grid point `k` (0 = fixed initial state).
    pub fn state_at(&self, z: &DVector<f64>, k: usize) -> [f64; 4] {
        if k == 0 {
            self.structure.x0
        } else {
            self.unscale_at(z, self.x_off(k))
        }
    }

    /// Radau stage `i ∈ 1..=4` of interval `k` (stage 4 is the end state).
    fn stage_state(&self, z: &DVector<f64>, k: usize, i: usize) -> [f64; 4] {
        if i == 4 {
            self.state_at(z, k + 1)
        } else {
            self.unscale_at(z, self.s_off(k, i - 1))
        }
    }

    /// All grid states including the fixed initial one.
    pub fn states(&self, z: &DVector<f64>) -> Vec<[f64; 4]> {
        (0..=self.n()).map(|k| self.state_at(z, k)).collect()
    }

    pub fn inputs(&self, z: &DVector<f64>) -> Vec<[f64; 4]> {
        (0..self.n()).map(|k| self.input_at(z, k)).collect()
    }

    /// Largest defect in physical units at `z`.
    pub fn max_physical_defect(&self, z: &DVector<f64>) -> Result<f64> {
        let mut c = DVector::zeros(self.n_constraints());
        self.constraints(z, &mut c)?;
        let mut worst = 0.0f64;
        for (row, v) in c.iter().enumerate() {
            worst = worst.max((v * self.x_scale[row % 4]).abs());
        }
        Ok(worst)
    }

    /// Pack a full guess from physical states (length N+1 including `x0`)
    /// and inputs (length N); collocation stages are interpolated linearly.
    pub fn pack(&self, states: &[[f64; 4]], inputs: &[[f64; 4]]) -> Result<DVector<f64>> {
        self.pack_impl(states, inputs, None)
    }

    fn pack_impl(
        &self,
        states: &[[f64; 4]],
        inputs: &[[f64; 4]],
        stages: Option<&[[[f64; 4]; 4]]>,
    ) -> Result<DVector<f64>> {
        let n = self.n();
        if states.len() != n + 1 || inputs.len() != n {
            return Err(Error::Structural(format!(
                "pack expects {} states and {} inputs, got {} and {}",
                n + 1,
                n,
                states.len(),
                inputs.len()
            )));
        }
        let mut z = DVector::zeros(self.dim());
        for k in 0..n {
            for s in 0..4 {
                z[self.u_off(k) + s] = inputs[k][s].clamp(0.0, 1.0);
            }
        }
        for k in 1..=n {
            let scaled = self.scale_state(&states[k]);
            for s in 0..4 {
                z[self.x_off(k) + s] = scaled[s].clamp(0.0, self.x_hi_scaled[s]);
            }
        }
        if self.stages_per_interval() > 0 {
            let tab = collocation::tableau();
            for k in 0..n {
                for stage in 0..3 {
                    let scaled = match stages {
                        Some(all) => self.scale_state(&all[k][stage]),
                        None => {
                            // Linear interpolation at the collocation point.
                            let a = self.scale_state(&states[k]);
                            let b = self.scale_state(&states[k + 1]);
                            let c = tab.points[stage];
                            std::array::from_fn(|s| a[s] + c * (b[s] - a[s]))
                        }
                    };
                    for s in 0..4 {
                        z[self.s_off(k, stage) + s] = scaled[s].clamp(0.0, self.x_hi_scaled[s]);
                    }
                }
            }
        }
        Ok(z)
    }

    /// Guess built by forward simulation under the given inputs; the packed
    /// point has (near-)zero defects under the transcription scheme. If the
    /// rollout leaves the evaluable domain the last valid state is held.
    pub fn simulation_guess(&self, inputs: &[[f64; 4]]) -> Result<DVector<f64>> {
        let n = self.n();
        if inputs.len() != n {
            return Err(Error::Structural(format!(
                "simulation guess expects {} inputs, got {}",
                n,
                inputs.len()
            )));
        }
        let scheme = StepScheme::new(self.structure.scheme, self.structure.dt);
        let is_collocation = self.structure.scheme == SchemeKind::Collocation4;
        let mut states = Vec::with_capacity(n + 1);
        let mut stages: Vec<[[f64; 4]; 4]> = Vec::with_capacity(n);
        states.push(self.structure.x0);
        let mut x = self.structure.x0;
        let mut alive = true;
        for k in 0..n {
            let mut interval_stages = [x; 4];
            if alive {
                let result = if is_collocation {
                    collocation_step(self.field, &x, &inputs[k], &self.disturbances[k], scheme.dt)
                        .map(|(end, st)| (end, st))
                } else {
                    let xs = crate::model::ClimateState::from_array(x);
                    let u = crate::model::ControlInput::from_array(inputs[k]);
                    step(self.field, &xs, &u, &self.disturbances[k], &scheme)
                        .map(|next| (next.to_array(), [x; 4]))
                };
                match result {
                    Ok((next, st)) => {
                        x = next;
                        interval_stages = st;
                    }
                    Err(_) => alive = false,
                }
            }
            states.push(x);
            stages.push(interval_stages);
        }
        self.pack_impl(&states, &inputs.to_vec(), is_collocation.then_some(&stages[..]))
    }

    /// Constraint rows of one interval written into `out[row..]`.
    fn interval_constraints(&self, z: &DVector<f64>, k: usize, out: &mut DVector<f64>) -> Result<()> {
        let dt = self.structure.dt;
        let x_k = self.state_at(z, k);
        let u_k = self.input_at(z, k);
        let d = &self.disturbances[k];
        match self.structure.scheme {
            SchemeKind::ExplicitEuler | SchemeKind::Rk4 => {
                let phi = if self.structure.scheme == SchemeKind::ExplicitEuler {
                    euler_step(self.field, &x_k, &u_k, d, dt)?
                } else {
                    rk4_step(self.field, &x_k, &u_k, d, dt)?
                };
                let x_next = self.state_at(z, k + 1);
                for s in 0..4 {
                    out[4 * k + s] = (x_next[s] - phi[s]) / self.x_scale[s];
                }
            }
            SchemeKind::Collocation4 => {
                let tab = collocation::tableau();
                for i in 1..=4 {
                    let xi = self.stage_state(z, k, i);
                    let f = self.field.eval(&xi, &u_k, d)?;
                    for s in 0..4 {
                        let mut acc = 0.0;
                        for j in 1..=4 {
                            acc += tab.diff[i - 1][j] * (self.stage_state(z, k, j)[s] - x_k[s]);
                        }
                        out[16 * k + 4 * (i - 1) + s] = (acc - dt * f[s]) / self.x_scale[s];
                    }
                }
            }
        }
        Ok(())
    }

    /// Accumulate `J_k^T w_k` for one interval into `out`.
    fn interval_jtw(
        &self,
        z: &DVector<f64>,
        k: usize,
        w: &DVector<f64>,
        out: &mut DVector<f64>,
    ) -> Result<()> {
        let dt = self.structure.dt;
        let u_k = self.input_at(z, k);
        let d = &self.disturbances[k];
        match self.structure.scheme {
            SchemeKind::ExplicitEuler | SchemeKind::Rk4 => {
                let x_k = self.state_at(z, k);
                let (xd, ud) = seed_pair(&x_k, &u_k, k > 0);
                let phi = if self.structure.scheme == SchemeKind::ExplicitEuler {
                    euler_step(self.field, &xd, &ud, d, dt)?
                } else {
                    rk4_step(self.field, &xd, &ud, d, dt)?
                };
                for s in 0..4 {
                    let ws = w[4 * k + s];
                    if ws == 0.0 {
                        continue;
                    }
                    // d c_{k,s} / d x_{k+1,s} (scaled) = 1.
                    out[self.x_off(k + 1) + s] += ws;
                    let scale = ws / self.x_scale[s];
                    for r in 0..4 {
                        if k > 0 {
                            out[self.x_off(k) + r] -= scale * phi[s].dx[r] * self.x_scale[r];
                        }
                        out[self.u_off(k) + r] -= scale * phi[s].dx[4 + r];
                    }
                }
            }
            SchemeKind::Collocation4 => {
                let tab = collocation::tableau();
                let row_sum: [f64; 4] =
                    std::array::from_fn(|i| (1..=4).map(|j| tab.diff[i][j]).sum());
                for i in 1..=4 {
                    let xi = self.stage_state(z, k, i);
                    let (xd, ud) = seed_pair(&xi, &u_k, true);
                    let f = self.field.eval(&xd, &ud, d)?;
                    for s in 0..4 {
                        let ws = w[16 * k + 4 * (i - 1) + s];
                        if ws == 0.0 {
                            continue;
                        }
                        let scale = ws / self.x_scale[s];
                        // Linear collocation part: same component s of each
                        // stage variable.
                        for j in 1..=4 {
                            let coeff = ws * tab.diff[i - 1][j];
                            let idx = if j == 4 {
                                self.x_off(k + 1) + s
                            } else {
                                self.s_off(k, j - 1) + s
                            };
                            out[idx] += coeff;
                        }
                        if k > 0 {
                            out[self.x_off(k) + s] -= ws * row_sum[i - 1];
                        }
                        // Nonlinear part: -dt f(X_i, u_k).
                        let xi_idx = |r: usize| {
                            if i == 4 {
                                self.x_off(k + 1) + r
                            } else {
                                self.s_off(k, i - 1) + r
                            }
                        };
                        for r in 0..4 {
                            out[xi_idx(r)] -= scale * dt * f[s].dx[r] * self.x_scale[r];
                            out[self.u_off(k) + r] -= scale * dt * f[s].dx[4 + r];
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Dual seeds for one `(x, u)` block; state directions are suppressed when
/// the state is the fixed initial condition.
fn seed_pair(x: &[f64; 4], u: &[f64; 4], seed_x: bool) -> ([Dual8; 4], [Dual8; 4]) {
    let xd: [Dual8; 4] = std::array::from_fn(|i| {
        if seed_x {
            Dual8::variable(x[i], i)
        } else {
            Dual8::constant(x[i])
        }
    });
    let ud: [Dual8; 4] = std::array::from_fn(|i| Dual8::variable(u[i], 4 + i));
    (xd, ud)
}

impl<F: VectorField, C: OcpCost> NlpFunctions for TranscribedOcp<'_, F, C> {
    fn dim(&self) -> usize {
        4 * self.n() + self.n_state_vars()
    }

    fn n_constraints(&self) -> usize {
        match self.structure.scheme {
            SchemeKind::Collocation4 => 16 * self.n(),
            _ => 4 * self.n(),
        }
    }

    fn objective(&self, z: &DVector<f64>) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..self.n() {
            total += self.cost.stage(k, &self.state_at(z, k), &self.input_at(z, k));
        }
        total += self.cost.terminal(&self.state_at(z, self.n()));
        Ok(total)
    }

    fn gradient(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        out.fill(0.0);
        for k in 0..self.n() {
            let x_k = self.state_at(z, k);
            let u_k = self.input_at(z, k);
            let (xd, ud) = seed_pair(&x_k, &u_k, k > 0);
            let val = self.cost.stage_dual(k, &xd, &ud);
            for r in 0..4 {
                if k > 0 {
                    out[self.x_off(k) + r] += val.dx[r] * self.x_scale[r];
                }
                out[self.u_off(k) + r] += val.dx[4 + r];
            }
        }
        let x_n = self.state_at(z, self.n());
        let xd: [Dual4; 4] = std::array::from_fn(|i| Dual4::variable(x_n[i], i));
        let val = self.cost.terminal_dual(&xd);
        for r in 0..4 {
            out[self.x_off(self.n()) + r] += val.dx[r] * self.x_scale[r];
        }
        Ok(())
    }

    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        for k in 0..self.n() {
            self.interval_constraints(z, k, out)?;
        }
        Ok(())
    }

    fn jacobian_transpose_mul(
        &self,
        z: &DVector<f64>,
        w: &DVector<f64>,
        out: &mut DVector<f64>,
    ) -> Result<()> {
        out.fill(0.0);
        for k in 0..self.n() {
            self.interval_jtw(z, k, w, out)?;
        }
        Ok(())
    }
}
