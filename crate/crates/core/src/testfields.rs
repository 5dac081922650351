//! Synthetic vector fields shared by the integrator and NLP unit tests.

use crate::ad::Real;
use crate::error::Result;
use crate::model::{Disturbance, VectorField};
use crate::weather::DisturbanceTrace;

/// `f = const` componentwise.
pub struct ConstantField(pub [f64; 4]);

impl VectorField for ConstantField {
    fn eval<S: Real>(&self, _x: &[S; 4], _u: &[S; 4], _d: &Disturbance) -> Result<[S; 4]> {
        Ok(std::array::from_fn(|i| S::constant(self.0[i])))
    }
}

/// `f_0 = -rate * x_0`, other components frozen.
pub struct DecayField {
    pub rate: f64,
}

impl VectorField for DecayField {
    fn eval<S: Real>(&self, x: &[S; 4], _u: &[S; 4], _d: &Disturbance) -> Result<[S; 4]> {
        Ok([
            -x[0] * self.rate,
            S::constant(0.0),
            S::constant(0.0),
            S::constant(0.0),
        ])
    }
}

/// `x_1` integrates a clock, `x_0` integrates `clock^power`; the end value of
/// `x_0` over `[0, 1]` is `1/(power+1)` exactly, which exposes the quadrature
/// order of each scheme.
pub struct ClockPolyField {
    pub power: i32,
}

impl VectorField for ClockPolyField {
    fn eval<S: Real>(&self, x: &[S; 4], _u: &[S; 4], _d: &Disturbance) -> Result<[S; 4]> {
        Ok([
            x[1].powi(self.power),
            S::constant(1.0),
            S::constant(0.0),
            S::constant(0.0),
        ])
    }
}

/// `f_0 = x_0^2`: finite-time blow-up, used to drive the implicit stage
/// solver into non-convergence.
pub struct SquareField;

impl VectorField for SquareField {
    fn eval<S: Real>(&self, x: &[S; 4], _u: &[S; 4], _d: &Disturbance) -> Result<[S; 4]> {
        Ok([x[0] * x[0], S::constant(0.0), S::constant(0.0), S::constant(0.0)])
    }
}

/// Affine dynamics `f = A x + B u`.
pub struct LinearField {
    pub a: [[f64; 4]; 4],
    pub b: [[f64; 4]; 4],
}

impl VectorField for LinearField {
    fn eval<S: Real>(&self, x: &[S; 4], u: &[S; 4], _d: &Disturbance) -> Result<[S; 4]> {
        Ok(std::array::from_fn(|i| {
            let mut acc = S::constant(0.0);
            for j in 0..4 {
                acc = acc + x[j] * self.a[i][j] + u[j] * self.b[i][j];
            }
            acc
        }))
    }
}

/// Constant disturbance trace covering `n` intervals of width `dt`.
pub fn constant_trace(d: Disturbance, dt: f64, n: usize) -> DisturbanceTrace {
    DisturbanceTrace {
        start: 0.0,
        dt,
        rows: vec![d; n + 1],
    }
}

pub fn still_air() -> Disturbance {
    Disturbance::new(15.0, 400.0, 8.0, 0.0)
}
