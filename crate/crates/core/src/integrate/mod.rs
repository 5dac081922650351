//! Time discretization of the dynamics: explicit Euler, classical RK4, and
//! degree-4 orthogonal collocation on Radau points.
//!
//! Plant truth and controller predictions share these kernels; the explicit
//! steps are generic over the scalar type so transcriptions can push dual
//! numbers through them for exact step Jacobians.

pub mod collocation;

use crate::ad::Real;
use crate::error::{Error, Result};
use crate::model::{ClimateState, ControlInput, Disturbance, VectorField};
use crate::weather::DisturbanceTrace;
use nalgebra::{DMatrix, DVector};

/// Discretization scheme family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    ExplicitEuler,
    Rk4,
    Collocation4,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::ExplicitEuler => "euler",
            SchemeKind::Rk4 => "rk4",
            SchemeKind::Collocation4 => "collocation-4",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "euler" | "explicit-euler" => Ok(SchemeKind::ExplicitEuler),
            "rk4" => Ok(SchemeKind::Rk4),
            "collocation" | "collocation-4" => Ok(SchemeKind::Collocation4),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A discretization step: scheme kind, sample interval, and the number of
/// internal substeps (plant truth runs RK4 with substeps so the effective
/// step stays small).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepScheme {
    pub kind: SchemeKind,
    /// Sample interval Δt (s).
    pub dt: f64,
    pub substeps: usize,
}

impl StepScheme {
    pub fn new(kind: SchemeKind, dt: f64) -> Self {
        StepScheme {
            kind,
            dt,
            substeps: 1,
        }
    }

    pub fn euler(dt: f64) -> Self {
        Self::new(SchemeKind::ExplicitEuler, dt)
    }

    pub fn rk4(dt: f64) -> Self {
        Self::new(SchemeKind::Rk4, dt)
    }

    pub fn collocation(dt: f64) -> Self {
        Self::new(SchemeKind::Collocation4, dt)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    /// Plant-truth default: RK4 with substeps capping the effective step at
    /// 10 s.
    pub fn plant_truth(dt: f64) -> Self {
        let substeps = (dt / 10.0).ceil().max(1.0) as usize;
        Self::rk4(dt).with_substeps(substeps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One explicit Euler update `x + h f(x, u, d)`.
pub fn euler_step<S: Real, F: VectorField>(
    field: &F,
    x: &[S; 4],
    u: &[S; 4],
    d: &Disturbance,
    h: f64,
) -> Result<[S; 4]> {
    let f = field.eval(x, u, d)?;
    Ok(std::array::from_fn(|i| x[i] + f[i] * h))
}

/// One classical four-stage Runge-Kutta update.
pub fn rk4_step<S: Real, F: VectorField>(
    field: &F,
    x: &[S; 4],
    u: &[S; 4],
    d: &Disturbance,
    h: f64,
) -> Result<[S; 4]> {
    let k1 = field.eval(x, u, d)?;
    let x2: [S; 4] = std::array::from_fn(|i| x[i] + k1[i] * (0.5 * h));
    let k2 = field.eval(&x2, u, d)?;
    let x3: [S; 4] = std::array::from_fn(|i| x[i] + k2[i] * (0.5 * h));
    let k3 = field.eval(&x3, u, d)?;
    let x4: [S; 4] = std::array::from_fn(|i| x[i] + k3[i] * h);
    let k4 = field.eval(&x4, u, d)?;
    Ok(std::array::from_fn(|i| {
        x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)
    }))
}

/// Newton residual tolerance of the implicit collocation stage system.
pub const COLLOCATION_TOL: f64 = 1e-10;
const COLLOCATION_MAX_ITER: usize = 50;

/// Solve the degree-4 collocation stage system over one interval and return
/// `(end state, stage values)`.
///
/// Stage equations: `Σ_j D_ij (X_j − x) = h f(X_i, u, d)` with `X_0 = x`;
/// the end state is the last stage since the Radau set contains the right
/// endpoint.
pub fn collocation_step<F: VectorField>(
    field: &F,
    x: &[f64; 4],
    u: &[f64; 4],
    d: &Disturbance,
    h: f64,
) -> Result<([f64; 4], [[f64; 4]; 4])> {
    let tab = collocation::tableau();
    let mut stages = [*x; 4];
    let mut residual = DVector::zeros(16);
    let mut jac = DMatrix::zeros(16, 16);
    let ud: [crate::ad::Dual<4>; 4] = std::array::from_fn(|i| crate::ad::Dual::constant(u[i]));

    let mut res_norm = f64::INFINITY;
    for iter in 0..COLLOCATION_MAX_ITER {
        // Residual and Jacobian blocks.
        for i in 0..4 {
            let xd: [crate::ad::Dual<4>; 4] =
                std::array::from_fn(|s| crate::ad::Dual::variable(stages[i][s], s));
            let f = field.eval(&xd, &ud, d)?;
            for s in 0..4 {
                let mut acc = 0.0;
                for j in 1..=4 {
                    acc += tab.diff[i][j] * (stages[j - 1][s] - x[s]);
                }
                residual[4 * i + s] = acc - h * f[s].re;
                for j in 0..4 {
                    for r in 0..4 {
                        let mut v = if s == r { tab.diff[i][j + 1] } else { 0.0 };
                        if i == j {
                            v -= h * f[s].dx[r];
                        }
                        jac[(4 * i + s, 4 * j + r)] = v;
                    }
                }
            }
        }
        res_norm = residual.amax();
        if !res_norm.is_finite() {
            return Err(Error::Integration {
                iterations: iter,
                residual: res_norm,
            });
        }
        if res_norm <= COLLOCATION_TOL {
            return Ok((stages[3], stages));
        }
        let lu = jac.clone().lu();
        let delta = lu.solve(&(-&residual)).ok_or(Error::Integration {
            iterations: iter,
            residual: res_norm,
        })?;
        for i in 0..4 {
            for s in 0..4 {
                stages[i][s] += delta[4 * i + s];
            }
        }
    }
    Err(Error::Integration {
        iterations: COLLOCATION_MAX_ITER,
        residual: res_norm,
    })
}

/// Advance one sample interval under zero-order-hold input.
pub fn step<F: VectorField>(
    field: &F,
    x: &ClimateState,
    u: &ControlInput,
    d: &Disturbance,
    scheme: &StepScheme,
) -> Result<ClimateState> {
    scheme.validate()?;
    let mut xa = x.to_array();
    let ua = u.to_array();
    let h = scheme.dt / scheme.substeps as f64;
    for _ in 0..scheme.substeps {
        xa = match scheme.kind {
            SchemeKind::ExplicitEuler => euler_step(field, &xa, &ua, d, h)?,
            SchemeKind::Rk4 => rk4_step(field, &xa, &ua, d, h)?,
            SchemeKind::Collocation4 => collocation_step(field, &xa, &ua, d, h)?.0,
        };
    }
    Ok(ClimateState::from_array(xa))
}

/// A simulated rollout on a uniform grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Sample instants (s), strictly increasing, uniform spacing.
    pub times: Vec<f64>,
    pub states: Vec<ClimateState>,
    /// Zero-order-hold input over each interval; one fewer than states.
    pub inputs: Vec<ControlInput>,
    /// Disturbance held over each interval.
    pub disturbances: Vec<Disturbance>,
    /// Per-sample flag: state outside the hard box. States are never
    /// clamped; violations are only reported.
    pub violations: Vec<bool>,
}

impl Trajectory {
    pub fn hard_violation_count(&self) -> usize {
        self.violations.iter().filter(|v| **v).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.times.len() || self.violations.len() != self.times.len() {
            return Err(Error::Structural(
                "trajectory states/times/violations length mismatch".into(),
            ));
        }
        if self.inputs.len() + 1 != self.states.len()
            || self.disturbances.len() != self.inputs.len()
        {
            return Err(Error::Structural(
                "trajectory inputs/disturbances length mismatch".into(),
            ));
        }
        Ok(())
    }
}

/// Roll the dynamics forward under a zero-order-hold input sequence and
/// piecewise-constant disturbances sampled from `trace`.
pub fn simulate<F: VectorField>(
    field: &F,
    x0: ClimateState,
    inputs: &[ControlInput],
    trace: &DisturbanceTrace,
    scheme: &StepScheme,
    start_time: f64,
) -> Result<Trajectory> {
    scheme.validate()?;
    // Span check up front: every interval start must be covered.
    if !inputs.is_empty() {
        trace.sample(start_time)?;
        trace
            .sample(start_time + (inputs.len() - 1) as f64 * scheme.dt)
            .map_err(|_| Error::Span {
                context: "simulate disturbance trace".into(),
                needed: inputs.len(),
                available: trace.rows.len(),
            })?;
    }

    let mut traj = Trajectory {
        times: vec![start_time],
        states: vec![x0],
        inputs: Vec::with_capacity(inputs.len()),
        disturbances: Vec::with_capacity(inputs.len()),
        violations: vec![!x0.in_hard_box(0.0)],
    };
    let mut x = x0;
    for (k, u) in inputs.iter().enumerate() {
        let t = start_time + k as f64 * scheme.dt;
        let d = trace.sample(t)?;
        x = step(field, &x, u, &d, scheme)?;
        traj.times.push(t + scheme.dt);
        traj.states.push(x);
        traj.inputs.push(*u);
        traj.disturbances.push(d);
        traj.violations.push(!x.in_hard_box(0.0));
    }
    Ok(traj)
}
