use super::*;
use crate::ad::Dual;
use proptest::prelude::*;

fn params() -> GreenhouseParams {
    GreenhouseParams::default()
}

/// Synthetic configuration with no canopy and negligible smoothing; used to
/// build exact-equilibrium and single-flux constructions.
fn bare_params() -> GreenhouseParams {
    GreenhouseParams {
        leaf_area_index: 0.0,
        smoothing: 1e-20,
        ..GreenhouseParams::default()
    }
}

fn nominal_state() -> ClimateState {
    ClimateState::new(22.0, 600.0, 75.0, 1.0)
}

fn nominal_disturbance() -> Disturbance {
    Disturbance::new(16.0, 400.0, 9.0, 450.0)
}

#[test]
fn smooth_max_at_tie_is_half_sqrt_gamma() {
    let v: f64 = smooth_max(0.0, 0.0, 1e-4);
    assert!((v - 0.005).abs() < 1e-15);
}

#[test]
fn smooth_max_pointwise_values() {
    let v: f64 = smooth_max(1.0, 0.0, 1e-4);
    assert!((v - 1.000_025).abs() < 1e-6);
    let w: f64 = smooth_max(5.0, 3.0, 1e-4);
    assert!((w - 5.000_012_5).abs() < 1e-6);
}

#[test]
fn h_sat_fit_values() {
    assert!((h_sat(20.0) - 17.466).abs() < 0.01);
    assert!((h_sat(10.0) - 9.858).abs() < 0.01);
    assert!(h_sat(25.0) > h_sat(24.0));
    assert!(h_sat_with_validity(20.0).1);
    assert!(!h_sat_with_validity(45.0).1);
    assert!(h_sat_with_validity(45.0).0.is_finite());
}

#[test]
fn net_radiation_values() {
    assert_eq!(net_radiation(500.0, 0.0), 0.0);
    assert_eq!(net_radiation(0.0, 3.0), 0.0);
    assert!((net_radiation(500.0, 3.0) - 377.4).abs() < 0.5);
}

#[test]
fn vent_heat_flux_vanishes_without_temperature_difference() {
    let p = params();
    let model = GreenhouseModel::new(&p);
    let x = nominal_state();
    let d = Disturbance::new(x.temperature, 400.0, 9.0, 300.0);
    let u = ControlInput::new(0.7, 0.0, 0.0, 0.0);
    let fx = model.compute_fluxes(&x, &u, &d).unwrap();
    assert_eq!(fx.q_vent, 0.0);
}

#[test]
fn all_drivers_zero_gives_zero_fluxes() {
    let p = bare_params();
    let model = GreenhouseModel::new(&p);
    let x = nominal_state();
    let d = Disturbance::new(x.temperature, x.co2, 9.0, 0.0);
    let fx = model
        .compute_fluxes(&x, &ControlInput::ZERO, &d)
        .unwrap();
    assert_eq!(fx.q_sun, 0.0);
    assert_eq!(fx.q_heat, 0.0);
    assert_eq!(fx.q_cool, 0.0);
    assert_eq!(fx.c_inj, 0.0);
    assert_eq!(fx.c_phot, 0.0);
    assert_eq!(fx.h_trans, 0.0);
    assert_eq!(fx.q_trans, 0.0);
}

#[test]
fn heating_flux_scales_with_actuation() {
    let p = GreenhouseParams {
        heating_power_max: 100.0,
        ..params()
    };
    let model = GreenhouseModel::new(&p);
    let u = ControlInput::new(0.0, 0.0, 0.5, 0.0);
    let fx = model
        .compute_fluxes(&nominal_state(), &u, &nominal_disturbance())
        .unwrap();
    assert!((fx.q_heat - 50.0).abs() < 1e-12);
    assert!((fx.h_heat - p.heater_vapor_yield * 50.0).abs() < 1e-12);
}

#[test]
fn out_of_domain_state_names_offending_field() {
    let p = params();
    let model = GreenhouseModel::new(&p);
    let mut x = nominal_state();
    x.temperature = 50.0;
    let err = model
        .compute_fluxes(&x, &ControlInput::ZERO, &nominal_disturbance())
        .unwrap_err();
    match err {
        crate::error::Error::Domain { field, .. } => assert_eq!(field, "T"),
        other => panic!("expected domain error, got {other}"),
    }
}

#[test]
fn equilibrium_construction_has_zero_derivative() {
    let p = bare_params();
    let model = GreenhouseModel::new(&p);
    let t = 20.0;
    let x = ClimateState::new(t, 400.0, 100.0, 1.0);
    let d = Disturbance::new(t, 400.0, rh_to_humidity(100.0, t), 0.0);
    let dx = model.dynamics(&x, &ControlInput::ZERO, &d).unwrap();
    for v in dx.to_array() {
        assert!(v.abs() < 1e-9, "expected equilibrium, got {dx:?}");
    }
}

#[test]
fn smoothing_residual_stays_gamma_scale_at_equilibrium() {
    // Same construction with the production gamma: the derivative no longer
    // vanishes exactly but stays at the sqrt(gamma) leakage scale.
    let p = GreenhouseParams {
        leaf_area_index: 0.0,
        ..params()
    };
    let model = GreenhouseModel::new(&p);
    let t = 20.0;
    let x = ClimateState::new(t, 400.0, 100.0, 1.0);
    let d = Disturbance::new(t, 400.0, rh_to_humidity(100.0, t), 0.0);
    let dx = model.dynamics(&x, &ControlInput::ZERO, &d).unwrap();
    for v in dx.to_array() {
        assert!(v.abs() < 0.01, "residual too large: {dx:?}");
    }
}

#[test]
fn heating_only_temperature_rate() {
    let p = GreenhouseParams {
        leaf_area_index: 0.0,
        smoothing: 1e-20,
        heat_capacity: 3.0e4,
        heating_power_max: 100.0,
        ..GreenhouseParams::default()
    };
    let model = GreenhouseModel::new(&p);
    let t = 20.0;
    let x = ClimateState::new(t, 400.0, 80.0, 1.0);
    let d = Disturbance::new(t, 400.0, rh_to_humidity(80.0, t), 0.0);
    let u = ControlInput::new(0.0, 0.0, 0.5, 0.0);
    let dx = model.dynamics(&x, &u, &d).unwrap();
    assert!((dx.temperature - 50.0 / 3.0e4).abs() < 1e-12);
}

#[test]
fn photosynthesis_dark_and_saturation() {
    let p = params();
    let model = GreenhouseModel::new(&p);
    let x = nominal_state();
    let dark = Disturbance::new(16.0, 400.0, 9.0, 0.0);
    assert_eq!(model.photosynthesis_rate(&x, &dark), 0.0);

    let bright = Disturbance::new(16.0, 400.0, 9.0, 600.0);
    let dim = Disturbance::new(16.0, 400.0, 9.0, 300.0);
    assert!(model.photosynthesis_rate(&x, &bright) >= model.photosynthesis_rate(&x, &dim));

    let rich = ClimateState::new(21.0, 1000.0, 75.0, 1.0);
    assert!(model.photosynthesis_rate(&rich, &bright) <= p.phot_rate_max);
}

#[test]
fn temperature_response_peaks_inside_band() {
    let at_peak: f64 = flux::temperature_response(21.0);
    assert!((at_peak - 1.0).abs() < 1e-12);
    assert_eq!(flux::temperature_response(9.0), 0.0);
    assert_eq!(flux::temperature_response(36.0), 0.0);
    let warm: f64 = flux::temperature_response(24.0);
    assert!(warm > 0.0 && warm < 1.0);
}

#[test]
fn jacobian_matches_finite_differences_at_spot_checks() {
    let p = params();
    let model = GreenhouseModel::new(&p);
    let d = nominal_disturbance();
    let points = [
        (nominal_state(), ControlInput::new(0.3, 0.4, 0.2, 0.1)),
        (
            ClimateState::new(17.0, 820.0, 88.0, 4.0),
            ControlInput::new(0.9, 0.05, 0.6, 0.5),
        ),
    ];
    for (x, u) in points {
        let (_, jac) = model.dynamics_jacobian(&x, &u, &d).unwrap();
        let xa = x.to_array();
        let ua = u.to_array();
        for col in 0..8 {
            let h = 1e-5;
            let mut lo = (xa, ua);
            let mut hi = (xa, ua);
            if col < 4 {
                lo.0[col] -= h;
                hi.0[col] += h;
            } else {
                lo.1[col - 4] -= h;
                hi.1[col - 4] += h;
            }
            let f_lo = model.derivative::<f64>(&lo.0, &lo.1, &d);
            let f_hi = model.derivative::<f64>(&hi.0, &hi.1, &d);
            for row in 0..4 {
                let fd = (f_hi[row] - f_lo[row]) / (2.0 * h);
                let ad = jac[row][col];
                assert!(
                    (fd - ad).abs() <= 1e-5 * ad.abs().max(1.0),
                    "row {row} col {col}: fd {fd} vs ad {ad}"
                );
            }
        }
    }
}

#[test]
fn shared_phi_consistency_between_flux_and_biomass() {
    let p = params();
    let model = GreenhouseModel::new(&p);
    let x = nominal_state();
    let d = nominal_disturbance();
    let phi = model.photosynthesis_rate(&x, &d);
    let fx = model
        .compute_fluxes(&x, &ControlInput::ZERO, &d)
        .unwrap();
    assert!((fx.c_phot - phi * 1e-3 / p.floor_area).abs() < 1e-15);
    let dx = model.dynamics(&x, &ControlInput::ZERO, &d).unwrap();
    assert!((dx.biomass - phi * p.biomass_per_co2 / p.cultivated_area).abs() < 1e-18);
}

fn admissible() -> impl Strategy<Value = (ClimateState, ControlInput, Disturbance)> {
    (
        14.0..30.0f64,
        300.0..1000.0f64,
        10.0..100.0f64,
        0.0..100.0f64,
        proptest::array::uniform4(0.0..1.0f64),
        -5.0..35.0f64,
        300.0..500.0f64,
        0.0..25.0f64,
        0.0..900.0f64,
    )
        .prop_map(|(t, c, rh, b, u, t_out, c_out, h_out, q)| {
            (
                ClimateState::new(t, c, rh, b),
                ControlInput::from_array(u),
                Disturbance::new(t_out, c_out, h_out, q),
            )
        })
}

proptest! {
    #[test]
    fn smooth_max_dominance(a in -1e3..1e3f64, b in -1e3..1e3f64) {
        let m: f64 = smooth_max(a, b, 1e-4);
        let exact = a.max(b);
        prop_assert!(m >= exact);
        prop_assert!(m - exact <= 0.005 + 1e-12);
    }

    #[test]
    fn flux_sign_structure((x, u, d) in admissible()) {
        let p = params();
        let model = GreenhouseModel::new(&p);
        let fx = model.compute_fluxes(&x, &u, &d).unwrap();
        prop_assert!(fx.q_vent * (d.outdoor_temp - x.temperature) >= 0.0);
        prop_assert!(fx.c_vent * (d.outdoor_co2 - x.co2) >= -1e-15);
        let h_a = rh_to_humidity(x.humidity, x.temperature);
        prop_assert!(fx.h_vent * (d.outdoor_humidity - h_a) >= 0.0);
    }

    #[test]
    fn clamped_fluxes_stay_nonnegative((x, u, d) in admissible()) {
        let p = params();
        let model = GreenhouseModel::new(&p);
        let fx = model.compute_fluxes(&x, &u, &d).unwrap();
        prop_assert!(fx.q_heat >= 0.0);
        prop_assert!(fx.q_cool >= 0.0);
        prop_assert!(fx.c_inj >= 0.0);
        prop_assert!(fx.h_heat >= 0.0);
        prop_assert!(fx.h_cool >= 0.0);
        prop_assert!(fx.h_cov >= 0.0);
    }

    #[test]
    fn biomass_never_decreases((x, u, d) in admissible()) {
        let p = params();
        let model = GreenhouseModel::new(&p);
        let dx = model.dynamics(&x, &u, &d).unwrap();
        prop_assert!(dx.biomass >= 0.0);
    }

    #[test]
    fn actuator_monotonicity((x, u, d) in admissible()) {
        let p = params();
        let model = GreenhouseModel::new(&p);
        let mut low = u;
        let mut high = u;
        low.heat = 0.1;
        high.heat = 0.9;
        let d_low = model.dynamics(&x, &low, &d).unwrap();
        let d_high = model.dynamics(&x, &high, &d).unwrap();
        prop_assert!(d_high.temperature >= d_low.temperature - 1e-12);

        low = u;
        high = u;
        low.cool = 0.1;
        high.cool = 0.9;
        let d_low = model.dynamics(&x, &low, &d).unwrap();
        let d_high = model.dynamics(&x, &high, &d).unwrap();
        prop_assert!(d_high.temperature <= d_low.temperature + 1e-12);

        low = u;
        high = u;
        low.co2 = 0.1;
        high.co2 = 0.9;
        let d_low = model.dynamics(&x, &low, &d).unwrap();
        let d_high = model.dynamics(&x, &high, &d).unwrap();
        prop_assert!(d_high.co2 >= d_low.co2 - 1e-12);
    }

    #[test]
    fn unit_conversions_round_trip(t in 10.0..35.0f64, c in 100.0..1500.0f64, rh in 1.0..120.0f64) {
        let density = co2_ppm_to_density(c, t);
        let back = co2_density_to_ppm(density, t);
        prop_assert!((back - c).abs() / c < 1e-10);
        let h_a = rh_to_humidity(rh, t);
        let rh_back = humidity_to_rh(h_a, t);
        prop_assert!((rh_back - rh).abs() / rh < 1e-10);
    }

    #[test]
    fn derivative_finite_on_admissible_domain((x, u, d) in admissible()) {
        let p = params();
        let model = GreenhouseModel::new(&p);
        let dx = model.dynamics(&x, &u, &d).unwrap();
        prop_assert!(dx.to_array().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn dual_evaluation_matches_plain_evaluation() {
    let p = params();
    let model = GreenhouseModel::new(&p);
    let x = nominal_state().to_array();
    let u = [0.25, 0.5, 0.75, 0.1];
    let d = nominal_disturbance();
    let plain = model.derivative::<f64>(&x, &u, &d);
    let xd: [Dual<8>; 8] = std::array::from_fn(|i| {
        if i < 4 {
            Dual::variable(x[i], i)
        } else {
            Dual::variable(u[i - 4], i)
        }
    });
    let dual = model.derivative(
        &[xd[0], xd[1], xd[2], xd[3]],
        &[xd[4], xd[5], xd[6], xd[7]],
        &d,
    );
    for i in 0..4 {
        assert_eq!(plain[i], dual[i].re);
    }
}
