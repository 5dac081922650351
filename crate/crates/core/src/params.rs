//! Physical parameter ledger for the greenhouse model.
//!
//! A single documented default set is shipped and used by every test and
//! experiment; all quantities are plausible magnitudes for a Venlo-type
//! glasshouse with screens, roof vents, CO₂ injection, pipe heating and
//! chilled-water cooling. The on-disk form is a flat `key = value` text file
//! with one constant per line and a unit comment; the loader enforces the
//! exhaustive schema (no unknown keys, no missing keys).

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Physical constants of the greenhouse, crop, and actuators.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenhouseParams {
    /// `k_c_gh` — areal heat capacity of greenhouse air + inventory (J·m⁻²·K⁻¹).
    pub heat_capacity: f64,
    /// `k_tot` — total shortwave transmittance of the cover incl. screens (–).
    pub cover_transmittance: f64,
    /// `k_c_air` — specific heat of air (J·g⁻¹·K⁻¹).
    pub air_specific_heat: f64,
    /// `k_rho_air` — density of air (g·m⁻³).
    pub air_density: f64,
    /// `k_u_vent` — maximum ventilation exchange velocity (m·s⁻¹).
    pub vent_rate_max: f64,
    /// `k_a_cov` — cover area / floor area ratio (–).
    pub cover_area_ratio: f64,
    /// `k_u_cov` — heat transfer coefficient of the cover (W·m⁻²·K⁻¹).
    pub cover_u_value: f64,
    /// `k_l_vap` — latent heat of water vaporization (J·g⁻¹).
    pub latent_heat: f64,
    /// `k_lai` — leaf area index (–).
    pub leaf_area_index: f64,
    /// `eps_heat` — latent/sensible heat ratio of saturated air (–).
    pub latent_sensible_ratio: f64,
    /// `r_b` — leaf boundary-layer resistance (s·m⁻¹).
    pub boundary_resistance: f64,
    /// `r_s` — stomatal resistance (s·m⁻¹).
    pub stomatal_resistance: f64,
    /// `k_a_gh` — greenhouse floor area (m²).
    pub floor_area: f64,
    /// `k_v_gh` — greenhouse air volume (m³).
    pub volume: f64,
    /// `c_inj_max` — maximum CO₂ injection rate, whole house (g·s⁻¹).
    pub co2_injection_max: f64,
    /// `k_eta` — vapor released per joule of direct air heating (g·J⁻¹).
    pub heater_vapor_yield: f64,
    /// `k_a_pipe` — cooling-pipe surface per floor area (m²·m⁻²).
    pub pipe_area_ratio: f64,
    /// `k_cool` — vapor mass-transfer coefficient to the cooling pipe (m·s⁻¹).
    pub pipe_transfer_coeff: f64,
    /// `h_sat_cool` — saturation vapor concentration at pipe temperature (g·m⁻³).
    pub pipe_saturation_humidity: f64,
    /// `p_h_max` — maximum heating power per floor area (W·m⁻²).
    pub heating_power_max: f64,
    /// `p_c_max` — maximum cooling power per floor area (W·m⁻²).
    pub cooling_power_max: f64,
    /// `k_b_co2` — fresh biomass produced per gram of consumed CO₂ (kg·g⁻¹).
    pub biomass_per_co2: f64,
    /// `k_a_s` — cultivated area (m²).
    pub cultivated_area: f64,
    /// `k_b_fruit` — fruit fraction of fresh biomass (–).
    pub fruit_fraction: f64,
    /// `gamma` — smoothing parameter for max operators and penalties (–).
    pub smoothing: f64,
    /// `phi_max` — canopy photosynthesis rate at saturation (g·s⁻¹).
    pub phot_rate_max: f64,
    /// `k_r_half` — net-radiation half-saturation of photosynthesis (W·m⁻²).
    pub phot_rad_half: f64,
    /// `k_c_half` — CO₂ half-saturation of photosynthesis (g·m⁻³).
    pub phot_co2_half: f64,
}

impl Default for GreenhouseParams {
    fn default() -> Self {
        GreenhouseParams {
            heat_capacity: 3.0e5,
            cover_transmittance: 0.50,
            air_specific_heat: 1.005,
            air_density: 1225.0,
            vent_rate_max: 0.05,
            cover_area_ratio: 1.3,
            cover_u_value: 12.0,
            latent_heat: 2450.0,
            leaf_area_index: 3.0,
            latent_sensible_ratio: 0.4,
            boundary_resistance: 250.0,
            stomatal_resistance: 250.0,
            floor_area: 1.0e4,
            volume: 4.0e4,
            co2_injection_max: 30.0,
            heater_vapor_yield: 4.4e-5,
            pipe_area_ratio: 0.3,
            pipe_transfer_coeff: 5.0e-3,
            pipe_saturation_humidity: 9.858,
            heating_power_max: 200.0,
            cooling_power_max: 200.0,
            biomass_per_co2: 0.01,
            cultivated_area: 1.0e4,
            fruit_fraction: 0.5,
            smoothing: 1.0e-4,
            phot_rate_max: 15.0,
            phot_rad_half: 150.0,
            phot_co2_half: 0.6,
        }
    }
}

/// (ledger key, unit/description) for every field, in canonical file order.
const SCHEMA: [(&str, &str); 28] = [
    ("k_c_gh", "J/m^2/K   areal heat capacity of greenhouse air and inventory"),
    ("k_tot", "-         total shortwave transmittance of the cover"),
    ("k_c_air", "J/g/K     specific heat of air"),
    ("k_rho_air", "g/m^3     density of air"),
    ("k_u_vent", "m/s       maximum ventilation exchange velocity"),
    ("k_a_cov", "-         cover/floor area ratio"),
    ("k_u_cov", "W/m^2/K   cover heat transfer coefficient"),
    ("k_l_vap", "J/g       latent heat of vaporization"),
    ("k_lai", "-         leaf area index"),
    ("eps_heat", "-         latent/sensible heat ratio of saturated air"),
    ("r_b", "s/m       leaf boundary-layer resistance"),
    ("r_s", "s/m       stomatal resistance"),
    ("k_a_gh", "m^2       greenhouse floor area"),
    ("k_v_gh", "m^3       greenhouse air volume"),
    ("c_inj_max", "g/s       maximum CO2 injection rate (whole house)"),
    ("k_eta", "g/J       vapor released per joule of direct air heating"),
    ("k_a_pipe", "m^2/m^2   cooling pipe surface per floor area"),
    ("k_cool", "m/s       vapor transfer coefficient to cooling pipe"),
    ("h_sat_cool", "g/m^3     saturation vapor concentration at pipe temperature"),
    ("p_h_max", "W/m^2     maximum heating power per floor area"),
    ("p_c_max", "W/m^2     maximum cooling power per floor area"),
    ("k_b_co2", "kg/g      fresh biomass per gram of consumed CO2"),
    ("k_a_s", "m^2       cultivated area"),
    ("k_b_fruit", "-         fruit fraction of fresh biomass"),
    ("gamma", "-         smoothing parameter for max operators"),
    ("phi_max", "g/s       canopy photosynthesis rate at saturation"),
    ("k_r_half", "W/m^2     radiation half-saturation of photosynthesis"),
    ("k_c_half", "g/m^3     CO2 half-saturation of photosynthesis"),
];

impl GreenhouseParams {
    fn get(&self, key: &str) -> f64 {
        match key {
            "k_c_gh" => self.heat_capacity,
            "k_tot" => self.cover_transmittance,
            "k_c_air" => self.air_specific_heat,
            "k_rho_air" => self.air_density,
            "k_u_vent" => self.vent_rate_max,
            "k_a_cov" => self.cover_area_ratio,
            "k_u_cov" => self.cover_u_value,
            "k_l_vap" => self.latent_heat,
            "k_lai" => self.leaf_area_index,
            "eps_heat" => self.latent_sensible_ratio,
            "r_b" => self.boundary_resistance,
            "r_s" => self.stomatal_resistance,
            "k_a_gh" => self.floor_area,
            "k_v_gh" => self.volume,
            "c_inj_max" => self.co2_injection_max,
            "k_eta" => self.heater_vapor_yield,
            "k_a_pipe" => self.pipe_area_ratio,
            "k_cool" => self.pipe_transfer_coeff,
            "h_sat_cool" => self.pipe_saturation_humidity,
            "p_h_max" => self.heating_power_max,
            "p_c_max" => self.cooling_power_max,
            "k_b_co2" => self.biomass_per_co2,
            "k_a_s" => self.cultivated_area,
            "k_b_fruit" => self.fruit_fraction,
            "gamma" => self.smoothing,
            "phi_max" => self.phot_rate_max,
            "k_r_half" => self.phot_rad_half,
            "k_c_half" => self.phot_co2_half,
            _ => unreachable!("key outside schema: {key}"),
        }
    }

    fn set(&mut self, key: &str, v: f64) {
        match key {
            "k_c_gh" => self.heat_capacity = v,
            "k_tot" => self.cover_transmittance = v,
            "k_c_air" => self.air_specific_heat = v,
            "k_rho_air" => self.air_density = v,
            "k_u_vent" => self.vent_rate_max = v,
            "k_a_cov" => self.cover_area_ratio = v,
            "k_u_cov" => self.cover_u_value = v,
            "k_l_vap" => self.latent_heat = v,
            "k_lai" => self.leaf_area_index = v,
            "eps_heat" => self.latent_sensible_ratio = v,
            "r_b" => self.boundary_resistance = v,
            "r_s" => self.stomatal_resistance = v,
            "k_a_gh" => self.floor_area = v,
            "k_v_gh" => self.volume = v,
            "c_inj_max" => self.co2_injection_max = v,
            "k_eta" => self.heater_vapor_yield = v,
            "k_a_pipe" => self.pipe_area_ratio = v,
            "k_cool" => self.pipe_transfer_coeff = v,
            "h_sat_cool" => self.pipe_saturation_humidity = v,
            "p_h_max" => self.heating_power_max = v,
            "p_c_max" => self.cooling_power_max = v,
            "k_b_co2" => self.biomass_per_co2 = v,
            "k_a_s" => self.cultivated_area = v,
            "k_b_fruit" => self.fruit_fraction = v,
            "gamma" => self.smoothing = v,
            "phi_max" => self.phot_rate_max = v,
            "k_r_half" => self.phot_rad_half = v,
            "k_c_half" => self.phot_co2_half = v,
            _ => unreachable!("key outside schema: {key}"),
        }
    }

    /// Check the physical invariants: strictly positive constants, ratio
    /// fields within (0, 1].
    pub fn validate(&self) -> Result<()> {
        for (key, _) in SCHEMA {
            let v = self.get(key);
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Schema(format!(
                    "parameter {key} must be a positive finite number, got {v}"
                )));
            }
        }
        for key in ["k_tot", "k_b_fruit"] {
            let v = self.get(key);
            if v > 1.0 {
                return Err(Error::Schema(format!(
                    "parameter {key} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Render the canonical ledger text.
    pub fn to_ledger(&self) -> String {
        let mut out = String::from("# Greenhouse physical parameter ledger.\n");
        for (key, unit) in SCHEMA {
            let _ = writeln!(out, "{:<11} = {:<12} # {}", key, self.get(key), unit);
        }
        out
    }

    /// Parse a ledger; the schema is exhaustive in both directions.
    pub fn from_ledger(text: &str) -> Result<Self> {
        let mut seen: BTreeMap<&str, f64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{raw}`"),
            })?;
            let key = key.trim();
            let schema_key = SCHEMA
                .iter()
                .map(|(k, _)| *k)
                .find(|k| *k == key)
                .ok_or_else(|| Error::Schema(format!("unknown parameter key `{key}`")))?;
            if seen.contains_key(schema_key) {
                return Err(Error::Schema(format!("duplicate parameter key `{key}`")));
            }
            let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid number for `{key}`: `{}`", value.trim()),
            })?;
            seen.insert(schema_key, value);
        }
        let missing: Vec<&str> = SCHEMA
            .iter()
            .map(|(k, _)| *k)
            .filter(|k| !seen.contains_key(k))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!(
                "missing parameter keys: {}",
                missing.join(", ")
            )));
        }
        let mut params = GreenhouseParams::default();
        for (key, value) in seen {
            params.set(key, value);
        }
        params.validate()?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ledger())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_ledger(&text)
    }
}
