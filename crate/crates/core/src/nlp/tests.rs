use super::*;
use crate::ad::{Dual, Real};
use crate::integrate::SchemeKind;
use crate::model::{Disturbance, GreenhouseModel};
use crate::params::GreenhouseParams;
use crate::testfields::{still_air, LinearField};
use nalgebra::DVector;

type Dual8 = Dual<8>;
type Dual4 = Dual<4>;

/// min Σ (z_i - c_i)², unconstrained apart from the box.
struct Quadratic {
    center: Vec<f64>,
    scale: f64,
}

impl NlpFunctions for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn n_constraints(&self) -> usize {
        0
    }
    fn objective(&self, z: &DVector<f64>) -> crate::Result<f64> {
        Ok(self.scale
            * z.iter()
                .zip(&self.center)
                .map(|(z, c)| (z - c) * (z - c))
                .sum::<f64>())
    }
    fn gradient(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> crate::Result<()> {
        for i in 0..z.len() {
            out[i] = self.scale * 2.0 * (z[i] - self.center[i]);
        }
        Ok(())
    }
    fn constraints(&self, _z: &DVector<f64>, _out: &mut DVector<f64>) -> crate::Result<()> {
        Ok(())
    }
    fn jacobian_transpose_mul(
        &self,
        _z: &DVector<f64>,
        _w: &DVector<f64>,
        out: &mut DVector<f64>,
    ) -> crate::Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

/// min z₁² + z₂²  s.t.  z₁ + z₂ = 1.
struct SumToOne;

impl NlpFunctions for SumToOne {
    fn dim(&self) -> usize {
        2
    }
    fn n_constraints(&self) -> usize {
        1
    }
    fn objective(&self, z: &DVector<f64>) -> crate::Result<f64> {
        Ok(z[0] * z[0] + z[1] * z[1])
    }
    fn gradient(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> crate::Result<()> {
        out[0] = 2.0 * z[0];
        out[1] = 2.0 * z[1];
        Ok(())
    }
    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>) -> crate::Result<()> {
        out[0] = z[0] + z[1] - 1.0;
        Ok(())
    }
    fn jacobian_transpose_mul(
        &self,
        _z: &DVector<f64>,
        w: &DVector<f64>,
        out: &mut DVector<f64>,
    ) -> crate::Result<()> {
        out[0] = w[0];
        out[1] = w[0];
        Ok(())
    }
}

fn box_problem(center: f64, lo: f64, hi: f64) -> NlpProblem<Quadratic> {
    NlpProblem::new(
        Quadratic {
            center: vec![center],
            scale: 1.0,
        },
        DVector::from_element(1, lo),
        DVector::from_element(1, hi),
        DVector::from_element(1, lo),
    )
    .unwrap()
}

#[test]
fn interior_quadratic_minimum() {
    let problem = box_problem(3.0, 0.0, 10.0);
    let (z, report) = solve(&problem, &SolveOptions::default());
    assert_eq!(report.status, SolverStatus::Optimal, "{report:?}");
    assert!((z[0] - 3.0).abs() < 1e-6, "z = {}", z[0]);
    assert!(report.objective < 1e-10);
}

#[test]
fn active_bound_quadratic_minimum() {
    let problem = box_problem(3.0, 0.0, 2.0);
    let (z, report) = solve(&problem, &SolveOptions::default());
    assert_eq!(report.status, SolverStatus::Optimal, "{report:?}");
    assert!((z[0] - 2.0).abs() < 1e-9, "z = {}", z[0]);
}

#[test]
fn equality_constrained_symmetric_projection() {
    let problem = NlpProblem::new(
        SumToOne,
        DVector::from_element(2, -10.0),
        DVector::from_element(2, 10.0),
        DVector::from_vec(vec![5.0, -3.0]),
    )
    .unwrap();
    let (z, report) = solve(&problem, &SolveOptions::default());
    assert_eq!(report.status, SolverStatus::Optimal, "{report:?}");
    assert!((z[0] - 0.5).abs() < 1e-5, "z = {z:?}");
    assert!((z[1] - 0.5).abs() < 1e-5, "z = {z:?}");
    assert!((report.objective - 0.5).abs() < 1e-5);
    assert!(report.max_defect <= 1e-6);
    assert!(report.max_bound_violation <= 1e-12);
}

#[test]
fn argmin_invariant_under_objective_scaling() {
    for scale in [1.0, 1e4, 1e-4] {
        let problem = NlpProblem::new(
            Quadratic {
                center: vec![3.0, -1.0, 7.0],
                scale,
            },
            DVector::from_element(3, -2.0),
            DVector::from_element(3, 5.0),
            DVector::from_element(3, 0.0),
        )
        .unwrap();
        let (z, report) = solve(&problem, &SolveOptions::default());
        assert_eq!(report.status, SolverStatus::Optimal);
        assert!((z[0] - 3.0).abs() < 1e-5, "scale {scale}: {z:?}");
        assert!((z[1] + 1.0).abs() < 1e-5, "scale {scale}: {z:?}");
        assert!((z[2] - 5.0).abs() < 1e-9, "scale {scale}: {z:?}");
    }
}

#[test]
fn solve_is_deterministic() {
    let problem = NlpProblem::new(
        SumToOne,
        DVector::from_element(2, -10.0),
        DVector::from_element(2, 10.0),
        DVector::from_vec(vec![5.0, -3.0]),
    )
    .unwrap();
    let (z1, r1) = solve(&problem, &SolveOptions::default());
    let (z2, r2) = solve(&problem, &SolveOptions::default());
    assert_eq!(z1, z2);
    assert_eq!(r1.iterations, r2.iterations);
    assert_eq!(r1.objective, r2.objective);
}

/// Synthetic smooth cost used to exercise the transcription machinery.
struct TestCost;

impl TestCost {
    fn stage_generic<S: Real>(&self, x: &[S; 4], u: &[S; 4]) -> S {
        let mut acc = S::constant(0.0);
        for i in 0..4 {
            acc = acc + u[i] * u[i] * 0.1;
        }
        let mid = [22.0, 650.0, 55.0, 1.0];
        for i in 0..4 {
            let d = (x[i] - mid[i]) * (1.0 / (1.0 + mid[i]));
            acc = acc + d * d * 0.01;
        }
        acc
    }
}

impl OcpCost for TestCost {
    fn stage(&self, _k: usize, x: &[f64; 4], u: &[f64; 4]) -> f64 {
        self.stage_generic(x, u)
    }
    fn stage_dual(&self, _k: usize, x: &[Dual8; 4], u: &[Dual8; 4]) -> Dual8 {
        self.stage_generic(x, u)
    }
    fn terminal(&self, x: &[f64; 4]) -> f64 {
        -x[3]
    }
    fn terminal_dual(&self, x: &[Dual4; 4]) -> Dual4 {
        -x[3]
    }
}

fn greenhouse_structure(n: usize, scheme: SchemeKind) -> OcpStructure {
    OcpStructure {
        n_intervals: n,
        dt: 300.0,
        scheme,
        x0: [20.0, 500.0, 70.0, 1.0],
        x_scale: OcpStructure::DEFAULT_SCALE,
    }
}

fn preview(n: usize) -> Vec<Disturbance> {
    (0..n)
        .map(|k| Disturbance::new(15.0 + 0.01 * k as f64, 400.0, 8.0, 200.0))
        .collect()
}

#[test]
fn transcription_dimensions_euler() {
    let p = GreenhouseParams::default();
    let model = GreenhouseModel::new(&p);
    let bounds = (crate::model::HARD_LOWER, crate::model::HARD_UPPER);
    let problem = transcribe(
        &model,
        greenhouse_structure(1, SchemeKind::ExplicitEuler),
        TestCost,
        bounds,
        &preview(1),
    )
    .unwrap();
    assert_eq!(problem.functions.dim(), 8);
    assert_eq!(problem.functions.n_constraints(), 4);

    let problem = transcribe(
        &model,
        greenhouse_structure(5, SchemeKind::ExplicitEuler),
        TestCost,
        bounds,
        &preview(5),
    )
    .unwrap();
    assert_eq!(problem.functions.dim(), 40);
    assert_eq!(problem.functions.n_constraints(), 20);
}

#[test]
fn short_preview_is_span_error() {
    let p = GreenhouseParams::default();
    let model = GreenhouseModel::new(&p);
    let err = match transcribe(
        &model,
        greenhouse_structure(5, SchemeKind::ExplicitEuler),
        TestCost,
        (crate::model::HARD_LOWER, crate::model::HARD_UPPER),
        &preview(3),
    ) {
        Err(e) => e,
        Ok(_) => panic!("expected span error"),
    };
    assert!(matches!(err, Error::Span { .. }), "{err}");
}

#[test]
fn forward_simulation_point_has_zero_defects() {
    let p = GreenhouseParams::default();
    let model = GreenhouseModel::new(&p);
    let bounds = (crate::model::HARD_LOWER, crate::model::HARD_UPPER);
    for scheme in [
        SchemeKind::ExplicitEuler,
        SchemeKind::Rk4,
        SchemeKind::Collocation4,
    ] {
        let problem = transcribe(
            &model,
            greenhouse_structure(6, scheme),
            TestCost,
            bounds,
            &preview(6),
        )
        .unwrap();
        let inputs = vec![[0.3, 0.4, 0.1, 0.0]; 6];
        let z = problem.functions.simulation_guess(&inputs).unwrap();
        let defect = problem.functions.max_physical_defect(&z).unwrap();
        assert!(defect <= 1e-9, "{scheme:?}: defect {defect}");
    }
}

fn fd_check_gradient<Fns: NlpFunctions>(fns: &Fns, z: &DVector<f64>) {
    let mut grad = DVector::zeros(fns.dim());
    fns.gradient(z, &mut grad).unwrap();
    for i in 0..fns.dim() {
        let h = 1e-6;
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += h;
        zm[i] -= h;
        let fd = (fns.objective(&zp).unwrap() - fns.objective(&zm).unwrap()) / (2.0 * h);
        assert!(
            (fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0),
            "gradient component {i}: fd {fd} vs ad {}",
            grad[i]
        );
    }
}

fn fd_check_jacobian<Fns: NlpFunctions>(fns: &Fns, z: &DVector<f64>) {
    let jac = fns.jacobian(z).unwrap();
    let m = fns.n_constraints();
    let mut cp = DVector::zeros(m);
    let mut cm = DVector::zeros(m);
    for j in 0..fns.dim() {
        let h = 1e-6;
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += h;
        zm[j] -= h;
        fns.constraints(&zp, &mut cp).unwrap();
        fns.constraints(&zm, &mut cm).unwrap();
        for i in 0..m {
            let fd = (cp[i] - cm[i]) / (2.0 * h);
            assert!(
                (fd - jac[(i, j)]).abs() <= 1e-5 * jac[(i, j)].abs().max(1.0),
                "jacobian ({i},{j}): fd {fd} vs ad {}",
                jac[(i, j)]
            );
        }
    }
}

#[test]
fn transcription_derivatives_match_finite_differences() {
    let p = GreenhouseParams::default();
    let model = GreenhouseModel::new(&p);
    let bounds = (crate::model::HARD_LOWER, crate::model::HARD_UPPER);
    for scheme in [
        SchemeKind::ExplicitEuler,
        SchemeKind::Rk4,
        SchemeKind::Collocation4,
    ] {
        let problem = transcribe(
            &model,
            greenhouse_structure(3, scheme),
            TestCost,
            bounds,
            &preview(3),
        )
        .unwrap();
        // An interior, slightly perturbed point.
        let inputs = vec![[0.35, 0.52, 0.21, 0.08]; 3];
        let mut z = problem.functions.simulation_guess(&inputs).unwrap();
        for i in 0..z.len() {
            z[i] = (z[i] + 0.013 * ((i % 7) as f64 - 3.0) * 0.01).clamp(0.01, 0.99);
        }
        fd_check_gradient(&problem.functions, &z);
        fd_check_jacobian(&problem.functions, &z);
    }
}

#[test]
fn linear_dynamics_give_constant_jacobian_rows() {
    let field = LinearField {
        a: [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.5, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ],
        b: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    };
    let structure = OcpStructure {
        n_intervals: 2,
        dt: 0.1,
        scheme: SchemeKind::ExplicitEuler,
        x0: [1.0, 2.0, 3.0, 4.0],
        x_scale: [1.0; 4],
    };
    let problem = transcribe(
        &field,
        structure,
        TestCost,
        ([0.0, 0.0, 0.0, 0.0], [10.0, 10.0, 10.0, 10.0]),
        &[still_air(), still_air()],
    )
    .unwrap();
    let za = problem.project(&DVector::from_element(16, 0.3));
    let zb = problem.project(&DVector::from_element(16, 0.7));
    let ja = problem.functions.jacobian(&za).unwrap();
    let jb = problem.functions.jacobian(&zb).unwrap();
    assert!((ja - jb).amax() < 1e-12);
}

#[test]
fn nmpc_scale_tracking_problem_solves_to_reference() {
    // Hold-at-equilibrium: quadratic pull toward x0 with no constraints
    // beyond dynamics; the solution keeps inputs at the level that holds the
    // state, here compared against the forward-simulated zero-defect point.
    let p = GreenhouseParams::default();
    let model = GreenhouseModel::new(&p);
    let bounds = (crate::model::HARD_LOWER, crate::model::HARD_UPPER);
    let problem = transcribe(
        &model,
        greenhouse_structure(5, SchemeKind::Rk4),
        TestCost,
        bounds,
        &preview(5),
    )
    .unwrap();
    let opts = SolveOptions {
        feas_tol: 1e-7,
        ..SolveOptions::default()
    };
    let (z, report) = solve(&problem, &opts);
    assert!(
        matches!(report.status, SolverStatus::Optimal),
        "{:?} defect {} pg {}",
        report.status,
        report.max_defect,
        report.stationarity
    );
    // Independent feasibility certificate.
    let defect = problem.functions.max_physical_defect(&z).unwrap();
    assert!(defect <= 1e-7 * 700.0, "physical defect {defect}");
    assert!(report.max_bound_violation <= 1e-12);
}
