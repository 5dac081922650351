//! Finite-horizon OCP transcription and a box-constrained NLP solver.
//!
//! Both control levels reduce to the same computational problem: minimize a
//! differentiable objective over a decision vector subject to per-interval
//! integration defects (equality constraints) and simple bounds. The solver
//! is an augmented-Lagrangian outer loop around a projected L-BFGS inner
//! loop; derivatives come from forward-mode duals pushed block-wise through
//! the dynamics, never from finite differences.

mod solver;
mod transcribe;

pub use solver::{solve, SolveOptions, SolveReport, SolverStatus};
pub use transcribe::{transcribe, OcpCost, OcpStructure, TranscribedOcp};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Differentiable functions of a box-constrained equality-constrained NLP:
///
/// minimize `f(z)` subject to `c(z) = 0`, `lo <= z <= hi`.
pub trait NlpFunctions {
    /// Decision dimension.
    fn dim(&self) -> usize;
    /// Number of equality constraints.
    fn n_constraints(&self) -> usize;
    /// Objective value.
    fn objective(&self, z: &DVector<f64>) -> Result<f64>;
    /// Objective gradient into `out`.
    fn gradient(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> Result<()>;
    /// Equality constraint values into `out`.
    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> Result<()>;
    /// `out = J(z)^T w` where `J` is the constraint Jacobian.
    fn jacobian_transpose_mul(
        &self,
        z: &DVector<f64>,
        w: &DVector<f64>,
        out: &mut DVector<f64>,
    ) -> Result<()>;

    /// Dense constraint Jacobian, assembled row-by-row from
    /// [`Self::jacobian_transpose_mul`] with unit seeds.
    fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.n_constraints();
        let n = self.dim();
        let mut jac = DMatrix::zeros(m, n);
        let mut seed = DVector::zeros(m);
        let mut row = DVector::zeros(n);
        for i in 0..m {
            seed[i] = 1.0;
            self.jacobian_transpose_mul(z, &seed, &mut row)?;
            seed[i] = 0.0;
            jac.row_mut(i).copy_from(&row.transpose());
        }
        Ok(jac)
    }
}

/// A fully assembled NLP instance: functions, bounds, and the initial guess.
pub struct NlpProblem<F: NlpFunctions> {
    pub functions: F,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub initial: DVector<f64>,
}

impl<F: NlpFunctions> NlpProblem<F> {
    pub fn new(
        functions: F,
        lower: DVector<f64>,
        upper: DVector<f64>,
        initial: DVector<f64>,
    ) -> Result<Self> {
        let n = functions.dim();
        if lower.len() != n || upper.len() != n || initial.len() != n {
            return Err(Error::Structural(format!(
                "NLP dimension mismatch: dim {n}, bounds {}/{}, guess {}",
                lower.len(),
                upper.len(),
                initial.len()
            )));
        }
        for i in 0..n {
            if lower[i] > upper[i] {
                return Err(Error::Structural(format!(
                    "bound {i} inverted: [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        let problem = NlpProblem {
            functions,
            lower,
            upper,
            initial,
        };
        // The objective and constraints must be evaluable at the (projected)
        // guess.
        let z0 = problem.project(&problem.initial);
        problem.functions.objective(&z0)?;
        let mut c = DVector::zeros(problem.functions.n_constraints());
        problem.functions.constraints(&z0, &mut c)?;
        Ok(problem)
    }

    /// Componentwise projection onto the box.
    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(z.len(), |i, _| z[i].clamp(self.lower[i], self.upper[i]))
    }
}

#[cfg(test)]
mod tests;
