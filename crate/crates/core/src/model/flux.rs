//! Heat, CO₂ and vapor flux sub-models.

use super::{
    co2_ppm_to_density, h_sat, net_radiation, rh_to_humidity, smooth_cbrt, smooth_max,
    ClimateState, ControlInput, Disturbance, GreenhouseModel,
};
use crate::ad::Real;
use crate::error::Result;
use crate::params::GreenhouseParams;

/// All flux terms, generic over the scalar type.
pub(crate) struct FluxTerms<S> {
    pub q_sun: S,
    pub q_vent: S,
    pub q_cov: S,
    pub q_trans: S,
    pub q_heat: S,
    pub q_cool: S,
    pub c_inj: S,
    pub c_vent: S,
    pub c_phot: S,
    pub h_trans: S,
    pub h_vent: S,
    pub h_cov: S,
    pub h_heat: S,
    pub h_cool: S,
}

/// Named flux decomposition of one model evaluation.
///
/// Heat fluxes in W·m⁻², mass fluxes in g·m⁻²·s⁻¹. The ventilation exchange
/// terms (`q_vent`, `c_vent`, `h_vent`) are signed positive into the
/// greenhouse air.
#[derive(Clone, Copy, Debug)]
pub struct FluxBreakdown {
    /// Solar heat gain through the cover.
    pub q_sun: f64,
    /// Sensible heat exchanged by ventilation.
    pub q_vent: f64,
    /// Conductive/convective exchange through the cover.
    pub q_cov: f64,
    /// Sensible heat carried by crop evapotranspiration.
    pub q_trans: f64,
    /// Heating power.
    pub q_heat: f64,
    /// Cooling power.
    pub q_cool: f64,
    /// Injected CO₂.
    pub c_inj: f64,
    /// CO₂ exchanged by ventilation.
    pub c_vent: f64,
    /// CO₂ consumed by photosynthesis.
    pub c_phot: f64,
    /// Vapor released by crop transpiration.
    pub h_trans: f64,
    /// Vapor exchanged by ventilation.
    pub h_vent: f64,
    /// Vapor condensing on the cover.
    pub h_cov: f64,
    /// Vapor released by the direct air heater.
    pub h_heat: f64,
    /// Vapor condensing on the cooling pipes.
    pub h_cool: f64,
}

/// Evaluate every flux sub-model at a valid point.
pub fn compute_fluxes(
    params: &GreenhouseParams,
    x: &ClimateState,
    u: &ControlInput,
    d: &Disturbance,
) -> Result<FluxBreakdown> {
    let xa = x.to_array();
    let ua = u.to_array();
    GreenhouseModel::check_domain(&xa, &ua)?;
    let (fx, _) = flux_terms::<f64>(params, &xa, &ua, d);
    Ok(FluxBreakdown {
        q_sun: fx.q_sun,
        q_vent: fx.q_vent,
        q_cov: fx.q_cov,
        q_trans: fx.q_trans,
        q_heat: fx.q_heat,
        q_cool: fx.q_cool,
        c_inj: fx.c_inj,
        c_vent: fx.c_vent,
        c_phot: fx.c_phot,
        h_trans: fx.h_trans,
        h_vent: fx.h_vent,
        h_cov: fx.h_cov,
        h_heat: fx.h_heat,
        h_cool: fx.h_cool,
    })
}

/// Smooth temperature response of photosynthesis: 1 at 21 °C, 0 outside
/// [10, 35] °C, C¹ everywhere (compactly supported bump with asymmetric
/// half-widths).
pub(crate) fn temperature_response<S: Real>(t: S) -> S {
    const PEAK: f64 = 21.0;
    let tv = t.value();
    if !(10.0..=35.0).contains(&tv) {
        return S::constant(0.0);
    }
    let width = if tv < PEAK { PEAK - 10.0 } else { 35.0 - PEAK };
    let s = (t - PEAK) / width;
    let s2 = s * s;
    // Beyond this the bump is below 1e-200 and the dual part of exp(-huge)
    // would degenerate to 0 * inf.
    if s2.value() > 0.998 {
        return S::constant(0.0);
    }
    (S::constant(1.0) - S::constant(1.0) / (S::constant(1.0) - s2)).exp()
}

/// Net canopy photosynthesis rate φ_CO₂ (g·s⁻¹); nonnegative by construction.
pub(crate) fn photosynthesis<S: Real>(
    params: &GreenhouseParams,
    r_n: f64,
    c_abs: S,
    t: S,
) -> S {
    let light = r_n / (r_n + params.phot_rad_half);
    let c_pos = smooth_max(S::constant(0.0), c_abs, params.smoothing);
    let co2 = c_pos / (c_pos + params.phot_co2_half);
    let g_t = temperature_response(t);
    co2 * g_t * (params.phot_rate_max * light)
}

/// Evaluate all flux terms plus the shared photosynthesis rate.
pub(crate) fn flux_terms<S: Real>(
    p: &GreenhouseParams,
    x: &[S; 4],
    u: &[S; 4],
    d: &Disturbance,
) -> (FluxTerms<S>, S) {
    let gamma = p.smoothing;
    let t = x[0];
    let c_ppm = x[1];
    let rh = x[2];
    let t_out = S::constant(d.outdoor_temp);

    let q_sun = S::constant(p.cover_transmittance * d.radiation);

    // Effective exchange velocity of the vents (m·s⁻¹).
    let vent = u[0] * p.vent_rate_max;
    let q_vent = vent * (t_out - t) * (p.air_specific_heat * p.air_density);
    let q_cov = (t_out - t) * (p.cover_area_ratio * p.cover_u_value);

    let r_n = net_radiation(d.radiation, p.leaf_area_index);
    let resistance = (1.0 + p.latent_sensible_ratio) * p.boundary_resistance
        + p.stomatal_resistance;
    let g_e = 2.0 * p.leaf_area_index / resistance;
    let h_sat_air = h_sat(t);
    let h_a = rh_to_humidity(rh, t);
    // H_trans = g_e (H_v - H_a) with H_v = H_sat + eps r_b R_n / (2 LAI k_L);
    // the LAI cancels in g_e * (H_v - H_sat), which keeps the bare-canopy
    // (LAI = 0) limit exact. Evaporating that vapor absorbs sensible heat,
    // so the transpiration term enters the temperature balance as a loss:
    // q_trans = -k_L h_trans.
    let radiative_load = p.latent_sensible_ratio * p.boundary_resistance * r_n
        / (p.latent_heat * resistance);
    let h_trans = (h_sat_air - h_a) * g_e + radiative_load;
    let q_trans = -(h_trans * p.latent_heat);

    let q_heat = u[2] * p.heating_power_max;
    let q_cool = u[3] * p.cooling_power_max;

    let c_inj = u[1] * (p.co2_injection_max / p.floor_area);
    // Concentration differences are converted ppm → g·m⁻³ at the indoor air
    // temperature so the exchange sign follows the ppm difference.
    let c_vent = vent * co2_ppm_to_density(S::constant(d.outdoor_co2) - c_ppm, t);
    let c_abs = co2_ppm_to_density(c_ppm, t);
    let phi = photosynthesis(p, r_n, c_abs, t);
    let c_phot = phi * (1.0e-3 / p.floor_area);

    // Condensation on the cover; the cover temperature is closed as the mean
    // of indoor and outdoor air temperatures.
    let t_cvr = (t + t_out) / 2.0;
    let g_c = smooth_max(
        S::constant(0.0),
        smooth_cbrt(t - t_cvr, gamma) * (p.cover_area_ratio * 1.64e-3),
        gamma,
    );
    let subcooling = (t - t_out) * ((t * 0.0485).exp() * 0.2522) - (h_sat_air - h_a);
    // Condensation is one-way: the conductance multiplies the nonnegative
    // part of the vapor excess at the cover.
    let h_cov = g_c * smooth_max(S::constant(0.0), subcooling, gamma);

    let h_vent = vent * (S::constant(d.outdoor_humidity) - h_a);
    let h_heat = q_heat * p.heater_vapor_yield;
    let h_cool = smooth_max(
        S::constant(0.0),
        (h_a - p.pipe_saturation_humidity) * u[3] * (p.pipe_area_ratio * p.pipe_transfer_coeff),
        gamma,
    );

    (
        FluxTerms {
            q_sun,
            q_vent,
            q_cov,
            q_trans,
            q_heat,
            q_cool,
            c_inj,
            c_vent,
            c_phot,
            h_trans,
            h_vent,
            h_cov,
            h_heat,
            h_cool,
        },
        phi,
    )
}
