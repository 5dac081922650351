//! Degree-4 orthogonal collocation tableau on Radau points.
//!
//! The four collocation abscissae are the roots of
//! `d³/dt³ [t³ (t−1)⁴] = 6 (t−1)(35t³ − 45t² + 15t − 1)` on `(0, 1]`, i.e.
//! three interior points plus the right endpoint. Including the endpoint
//! makes the interval end state coincide with the last stage value.

use std::sync::OnceLock;

pub const DEGREE: usize = 4;

/// Collocation tableau: abscissae and the Lagrange differentiation matrix.
#[derive(Debug)]
pub struct Tableau {
    /// Collocation points `c_1..c_4`, `c_4 = 1`.
    pub points: [f64; DEGREE],
    /// `d[i][j] = ℓ_j'(c_{i+1})` over the node set `{0, c_1, .., c_4}`.
    pub diff: [[f64; DEGREE + 1]; DEGREE],
}

fn interior_poly(t: f64) -> f64 {
    ((35.0 * t - 45.0) * t + 15.0) * t - 1.0
}

fn bisect_root(mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = interior_poly(lo);
    assert!(
        f_lo * interior_poly(hi) < 0.0,
        "bracket [{lo}, {hi}] does not straddle a root"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = interior_poly(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo.signum() == f_mid.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn build() -> Tableau {
    let points = [
        bisect_root(0.05, 0.2),
        bisect_root(0.3, 0.5),
        bisect_root(0.7, 0.9),
        1.0,
    ];

    // Nodes for the interpolating polynomial: interval start plus stages.
    let mut nodes = [0.0; DEGREE + 1];
    nodes[1..].copy_from_slice(&points);

    // Barycentric weights w_j = 1 / prod_{m != j} (tau_j - tau_m).
    let mut w = [0.0; DEGREE + 1];
    for j in 0..=DEGREE {
        let mut prod = 1.0;
        for m in 0..=DEGREE {
            if m != j {
                prod *= nodes[j] - nodes[m];
            }
        }
        w[j] = 1.0 / prod;
    }

    // Differentiation matrix rows at the collocation points:
    // D_ij = (w_j / w_i) / (tau_i - tau_j) for i != j, D_ii = -sum_j D_ij.
    let mut diff = [[0.0; DEGREE + 1]; DEGREE];
    for row in 0..DEGREE {
        let i = row + 1;
        let mut diag = 0.0;
        for j in 0..=DEGREE {
            if j != i {
                let d = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                diff[row][j] = d;
                diag -= d;
            }
        }
        diff[row][i] = diag;
    }

    Tableau { points, diff }
}

/// The shared tableau, computed once.
pub fn tableau() -> &'static Tableau {
    static TABLEAU: OnceLock<Tableau> = OnceLock::new();
    TABLEAU.get_or_init(build)
}
