//! Forward-mode automatic differentiation on fixed-width dual numbers.
//!
//! The model equations are written once, generically over [`Real`], and are
//! evaluated either on plain `f64` (simulation) or on [`Dual`] (exact
//! derivatives for transcription, solver gradients, and derivative checks).
//! The dual width `N` is the number of independent directions carried per
//! pass; blocks of the control transcriptions need at most 8 (one state and
//! one input vector).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by `f64` and [`Dual`].
///
/// Only the elementary operations the greenhouse model needs are included.
pub trait Real:
    Copy
    + PartialOrd
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    /// Primal (value) part.
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn cbrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Real for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn cbrt(self) -> Self {
        f64::cbrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Dual number carrying `N` simultaneous derivative directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub dx: [f64; N],
}

impl<const N: usize> Dual<N> {
    #[inline]
    pub fn new(re: f64, dx: [f64; N]) -> Self {
        Dual { re, dx }
    }

    /// Independent variable: unit seed in direction `index`.
    #[inline]
    pub fn variable(v: f64, index: usize) -> Self {
        let mut dx = [0.0; N];
        dx[index] = 1.0;
        Dual { re: v, dx }
    }
}

impl<const N: usize> PartialOrd for Dual<N> {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.re = -self.re;
        for d in &mut self.dx {
            *d = -*d;
        }
        self
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.re += rhs.re;
        for (d, r) in self.dx.iter_mut().zip(rhs.dx.iter()) {
            *d += r;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.re -= rhs.re;
        for (d, r) in self.dx.iter_mut().zip(rhs.dx.iter()) {
            *d -= r;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = self.dx[i] * rhs.re + self.re * rhs.dx[i];
        }
        Dual {
            re: self.re * rhs.re,
            dx,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = (self.dx[i] - self.re * inv * rhs.dx[i]) * inv;
        }
        Dual {
            re: self.re * inv,
            dx,
        }
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.re += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.re -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.re *= rhs;
        for d in &mut self.dx {
            *d *= rhs;
        }
        self
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const N: usize> Real for Dual<N> {
    #[inline]
    fn constant(v: f64) -> Self {
        Dual {
            re: v,
            dx: [0.0; N],
        }
    }

    #[inline]
    fn value(&self) -> f64 {
        self.re
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        let half_inv = 0.5 / s;
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= half_inv;
        }
        Dual { re: s, dx }
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= e;
        }
        Dual { re: e, dx }
    }

    #[inline]
    fn cbrt(self) -> Self {
        let c = self.re.cbrt();
        let scale = 1.0 / (3.0 * c * c);
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= scale;
        }
        Dual { re: c, dx }
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        let scale = f64::from(n) * self.re.powi(n - 1);
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= scale;
        }
        Dual {
            re: self.re.powi(n),
            dx,
        }
    }
}
