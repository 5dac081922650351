//! Continuous-time greenhouse climate and crop dynamics.
//!
//! The state is `x = [T, C, RH, B]` (air temperature in °C, CO₂ in ppm,
//! relative humidity in %, fresh biomass in kg·m⁻²), actuation is the
//! normalized vector `u = [u_V, u_C, u_Qh, u_Qc] ∈ [0,1]⁴` and the exogenous
//! weather is `d = [T_out, C_out, H_out, Q_rad]`. Internally the CO₂ and
//! vapor balances run on absolute concentrations (g·m⁻³); the published
//! state uses ppm/% and the conversion chain rules are applied exactly.
//!
//! Every discontinuous `max` in the flux sub-models is replaced by a smooth
//! surrogate so the whole vector field is differentiable; the same generic
//! code evaluates on plain `f64` or on dual numbers for exact Jacobians.

mod flux;

pub use flux::{compute_fluxes, FluxBreakdown};

use crate::ad::Real;
use crate::error::{Error, Result};
use crate::params::GreenhouseParams;

/// Hard box `X` the state must never leave: `[14,30]×[300,1000]×[10,100]×[0,100]`.
pub const HARD_LOWER: [f64; 4] = [14.0, 300.0, 10.0, 0.0];
pub const HARD_UPPER: [f64; 4] = [30.0, 1000.0, 100.0, 100.0];

/// State field names used in diagnostics, reports and CSV headers.
pub const STATE_NAMES: [&str; 4] = ["T", "C", "RH", "B"];
/// Input field names.
pub const INPUT_NAMES: [&str; 4] = ["u_V", "u_C", "u_Qh", "u_Qc"];

const CELSIUS_OFFSET: f64 = 273.15;
/// ppm → g·m⁻³ conversion numerator: 1e-6 · M_CO₂ · P / R  (g·K·m⁻³ per ppm).
const CO2_UNIT: f64 = 1.0e-6 * 44.01 * 101_325.0 / 8.314;

/// Evaluable domain: the hard set inflated by 50% (bounds scaled by 0.5 and
/// 1.5, keeping concentrations and humidities positive). Dynamics evaluation
/// outside this box is a domain error.
pub fn evaluable_bounds() -> ([f64; 4], [f64; 4]) {
    let mut lo = [0.0; 4];
    let mut hi = [0.0; 4];
    for i in 0..4 {
        lo[i] = 0.5 * HARD_LOWER[i];
        hi[i] = 1.5 * HARD_UPPER[i];
    }
    (lo, hi)
}

/// Greenhouse climate state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClimateState {
    /// Air temperature (°C).
    pub temperature: f64,
    /// CO₂ concentration (ppm).
    pub co2: f64,
    /// Relative humidity (%).
    pub humidity: f64,
    /// Fresh biomass (kg·m⁻²).
    pub biomass: f64,
}

impl ClimateState {
    pub fn new(temperature: f64, co2: f64, humidity: f64, biomass: f64) -> Self {
        ClimateState {
            temperature,
            co2,
            humidity,
            biomass,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.temperature, self.co2, self.humidity, self.biomass]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        ClimateState {
            temperature: x[0],
            co2: x[1],
            humidity: x[2],
            biomass: x[3],
        }
    }

    /// True when every component lies inside the hard box (with `tol` slack).
    pub fn in_hard_box(&self, tol: f64) -> bool {
        let x = self.to_array();
        (0..4).all(|i| x[i] >= HARD_LOWER[i] - tol && x[i] <= HARD_UPPER[i] + tol)
    }
}

/// Normalized actuator vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlInput {
    /// Vent opening (–).
    pub vent: f64,
    /// CO₂ injection (–).
    pub co2: f64,
    /// Heating (–).
    pub heat: f64,
    /// Cooling (–).
    pub cool: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        vent: 0.0,
        co2: 0.0,
        heat: 0.0,
        cool: 0.0,
    };

    pub fn new(vent: f64, co2: f64, heat: f64, cool: f64) -> Self {
        ControlInput {
            vent,
            co2,
            heat,
            cool,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.vent, self.co2, self.heat, self.cool]
    }

    pub fn from_array(u: [f64; 4]) -> Self {
        ControlInput {
            vent: u[0],
            co2: u[1],
            heat: u[2],
            cool: u[3],
        }
    }

    pub fn clamped(self) -> Self {
        ControlInput {
            vent: self.vent.clamp(0.0, 1.0),
            co2: self.co2.clamp(0.0, 1.0),
            heat: self.heat.clamp(0.0, 1.0),
            cool: self.cool.clamp(0.0, 1.0),
        }
    }
}

/// Exogenous weather acting on the greenhouse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disturbance {
    /// Outdoor temperature (°C).
    pub outdoor_temp: f64,
    /// Outdoor CO₂ (ppm).
    pub outdoor_co2: f64,
    /// Outdoor absolute humidity (g·m⁻³).
    pub outdoor_humidity: f64,
    /// Global radiation (W·m⁻²).
    pub radiation: f64,
}

impl Disturbance {
    pub fn new(outdoor_temp: f64, outdoor_co2: f64, outdoor_humidity: f64, radiation: f64) -> Self {
        Disturbance {
            outdoor_temp,
            outdoor_co2,
            outdoor_humidity,
            radiation,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [
            self.outdoor_temp,
            self.outdoor_co2,
            self.outdoor_humidity,
            self.radiation,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Schema("non-finite disturbance component".into()));
        }
        if self.radiation < 0.0 {
            return Err(Error::Schema(format!(
                "radiation must be nonnegative, got {}",
                self.radiation
            )));
        }
        if self.outdoor_co2 <= 0.0 {
            return Err(Error::Schema(format!(
                "outdoor CO2 must be positive, got {}",
                self.outdoor_co2
            )));
        }
        if self.outdoor_humidity < 0.0 {
            return Err(Error::Schema(format!(
                "outdoor humidity must be nonnegative, got {}",
                self.outdoor_humidity
            )));
        }
        Ok(())
    }
}

/// Time derivative of the climate state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    /// dT/dt (°C·s⁻¹).
    pub temperature: f64,
    /// dC/dt (ppm·s⁻¹).
    pub co2: f64,
    /// dRH/dt (%·s⁻¹).
    pub humidity: f64,
    /// dB/dt (kg·m⁻²·s⁻¹).
    pub biomass: f64,
}

impl StateDerivative {
    pub fn to_array(self) -> [f64; 4] {
        [self.temperature, self.co2, self.humidity, self.biomass]
    }

    pub fn from_array(d: [f64; 4]) -> Self {
        StateDerivative {
            temperature: d[0],
            co2: d[1],
            humidity: d[2],
            biomass: d[3],
        }
    }
}

/// Smooth surrogate for `max(a, b)`: `(a + b + sqrt((a-b)² + γ)) / 2`.
///
/// Dominates the exact maximum by at most `sqrt(γ)/2` and is differentiable
/// everywhere.
#[inline]
pub fn smooth_max<S: Real>(a: S, b: S, gamma: f64) -> S {
    (a + b + ((a - b).powi(2) + gamma).sqrt()) / 2.0
}

/// Smooth surrogate for the cube root: `t / (t² + δ)^(1/3)`.
///
/// Matches `cbrt(t)` away from zero while keeping the slope finite at the
/// origin (the exact cube root has an infinite derivative there, which
/// poisons gradient-based solvers whenever the cover and air temperatures
/// cross).
#[inline]
pub fn smooth_cbrt<S: Real>(t: S, delta: f64) -> S {
    t / (t * t + delta).cbrt()
}

/// Saturated vapor concentration of air, `5.5638 · e^(0.0572 T)` (g·m⁻³).
#[inline]
pub fn h_sat<S: Real>(temperature: S) -> S {
    (temperature * 0.0572).exp() * 5.5638
}

/// `h_sat` plus a validity flag; the exponential fit is calibrated for
/// `T ∈ [10, 40]` °C and extrapolates outside.
pub fn h_sat_with_validity(temperature: f64) -> (f64, bool) {
    (h_sat(temperature), (10.0..=40.0).contains(&temperature))
}

/// Net radiation at crop level, `0.86 (1 − e^(−0.7 LAI)) Q_rad` (W·m⁻²).
#[inline]
pub fn net_radiation(radiation: f64, leaf_area_index: f64) -> f64 {
    0.86 * (1.0 - (-0.7 * leaf_area_index).exp()) * radiation
}

/// CO₂ ppm → absolute concentration (g·m⁻³) at air temperature `t` (°C).
#[inline]
pub fn co2_ppm_to_density<S: Real>(ppm: S, temperature: S) -> S {
    ppm * CO2_UNIT / (temperature + CELSIUS_OFFSET)
}

/// CO₂ absolute concentration (g·m⁻³) → ppm at air temperature `t` (°C).
#[inline]
pub fn co2_density_to_ppm<S: Real>(density: S, temperature: S) -> S {
    density * (temperature + CELSIUS_OFFSET) / CO2_UNIT
}

/// Relative humidity (%) → absolute humidity (g·m⁻³).
#[inline]
pub fn rh_to_humidity<S: Real>(rh: S, temperature: S) -> S {
    rh / 100.0 * h_sat(temperature)
}

/// Absolute humidity (g·m⁻³) → relative humidity (%).
#[inline]
pub fn humidity_to_rh<S: Real>(humidity: S, temperature: S) -> S {
    humidity * 100.0 / h_sat(temperature)
}

/// A controlled vector field `ẋ = f(x, u, d)` on the 4-dimensional state.
///
/// Implemented by the greenhouse model and by the synthetic test fields used
/// to validate integrators and transcriptions.
pub trait VectorField {
    fn eval<S: Real>(&self, x: &[S; 4], u: &[S; 4], d: &Disturbance) -> Result<[S; 4]>;
}

/// The greenhouse dynamics bound to a parameter ledger.
#[derive(Clone, Copy)]
pub struct GreenhouseModel<'a> {
    pub params: &'a GreenhouseParams,
}

impl<'a> GreenhouseModel<'a> {
    pub fn new(params: &'a GreenhouseParams) -> Self {
        GreenhouseModel { params }
    }

    /// Reject states outside the evaluable (inflated) domain and inputs
    /// meaningfully outside the unit box.
    pub fn check_domain(x: &[f64; 4], u: &[f64; 4]) -> Result<()> {
        let (lo, hi) = evaluable_bounds();
        for i in 0..4 {
            if !x[i].is_finite() || x[i] < lo[i] || x[i] > hi[i] {
                return Err(Error::Domain {
                    field: STATE_NAMES[i],
                    value: x[i],
                    lo: lo[i],
                    hi: hi[i],
                });
            }
        }
        for i in 0..4 {
            if !u[i].is_finite() || u[i] < -1e-9 || u[i] > 1.0 + 1e-9 {
                return Err(Error::Domain {
                    field: INPUT_NAMES[i],
                    value: u[i],
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }

    /// Full flux decomposition at a valid point.
    pub fn compute_fluxes(
        &self,
        x: &ClimateState,
        u: &ControlInput,
        d: &Disturbance,
    ) -> Result<FluxBreakdown> {
        compute_fluxes(self.params, x, u, d)
    }

    /// Net canopy photosynthesis rate φ_CO₂ (g·s⁻¹).
    ///
    /// Rectangular-hyperbola light and CO₂ responses scaled by a smooth
    /// temperature bump that peaks at 21 °C and vanishes outside [10, 35] °C;
    /// nonnegative by construction and exactly zero without radiation.
    pub fn photosynthesis_rate(&self, x: &ClimateState, d: &Disturbance) -> f64 {
        let r_n = net_radiation(d.radiation, self.params.leaf_area_index);
        let c_abs = co2_ppm_to_density(x.co2, x.temperature);
        flux::photosynthesis(self.params, r_n, c_abs, x.temperature)
    }

    /// `ẋ = f(x, u, d)` with domain checking.
    pub fn dynamics(
        &self,
        x: &ClimateState,
        u: &ControlInput,
        d: &Disturbance,
    ) -> Result<StateDerivative> {
        let xa = x.to_array();
        let ua = u.to_array();
        Self::check_domain(&xa, &ua)?;
        Ok(StateDerivative::from_array(self.derivative(&xa, &ua, d)))
    }

    /// Vector field value and its exact Jacobian with respect to `(x, u)`,
    /// computed in a single dual-number pass. Rows are state derivatives,
    /// columns are `[T, C, RH, B, u_V, u_C, u_Qh, u_Qc]`.
    pub fn dynamics_jacobian(
        &self,
        x: &ClimateState,
        u: &ControlInput,
        d: &Disturbance,
    ) -> Result<([f64; 4], [[f64; 8]; 4])> {
        let xa = x.to_array();
        let ua = u.to_array();
        Self::check_domain(&xa, &ua)?;
        let xd: [crate::ad::Dual<8>; 4] =
            std::array::from_fn(|i| crate::ad::Dual::variable(xa[i], i));
        let ud: [crate::ad::Dual<8>; 4] =
            std::array::from_fn(|i| crate::ad::Dual::variable(ua[i], 4 + i));
        let f = self.derivative(&xd, &ud, d);
        let mut value = [0.0; 4];
        let mut jac = [[0.0; 8]; 4];
        for i in 0..4 {
            value[i] = f[i].re;
            jac[i] = f[i].dx;
        }
        Ok((value, jac))
    }

    /// Generic, unchecked evaluation of the vector field.
    pub fn derivative<S: Real>(&self, x: &[S; 4], u: &[S; 4], d: &Disturbance) -> [S; 4] {
        let p = self.params;
        let (fx, phi) = flux::flux_terms(p, x, u, d);

        let d_temp = (fx.q_sun + fx.q_vent + fx.q_cov + fx.q_trans + fx.q_heat - fx.q_cool)
            / p.heat_capacity;

        let area_per_volume = p.floor_area / p.volume;
        // Balances in absolute units (g·m⁻³·s⁻¹); vent fluxes are signed
        // positive into the greenhouse air.
        let d_co2_abs = (fx.c_inj + fx.c_vent - fx.c_phot) * area_per_volume;
        let d_hum_abs = (fx.h_trans + fx.h_vent - fx.h_cov + fx.h_heat - fx.h_cool)
            * area_per_volume;

        // Chain rules of the unit maps. C_ppm = C_abs (T + 273.15) / k, so
        // dC_ppm picks up a (C_ppm / (T + 273.15)) dT term; RH = 100 H_a /
        // H_sat(T) picks up the -RH (H_sat'/H_sat) dT term with
        // H_sat'/H_sat = 0.0572.
        let t_abs = x[0] + CELSIUS_OFFSET;
        let d_co2_ppm = d_co2_abs * t_abs / CO2_UNIT + x[1] / t_abs * d_temp;
        let d_rh = d_hum_abs * 100.0 / h_sat(x[0]) - x[2] * 0.0572 * d_temp;

        let d_biomass = phi * (p.biomass_per_co2 / p.cultivated_area);

        [d_temp, d_co2_ppm, d_rh, d_biomass]
    }
}

impl VectorField for GreenhouseModel<'_> {
    fn eval<S: Real>(&self, x: &[S; 4], u: &[S; 4], d: &Disturbance) -> Result<[S; 4]> {
        let xa = [x[0].value(), x[1].value(), x[2].value(), x[3].value()];
        let ua = [u[0].value(), u[1].value(), u[2].value(), u[3].value()];
        Self::check_domain(&xa, &ua)?;
        Ok(self.derivative(x, u, d))
    }
}

#[cfg(test)]
mod tests;
