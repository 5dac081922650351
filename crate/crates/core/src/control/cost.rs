//! Economic stage/terminal costs, smoothed soft-constraint penalties, and the
//! cost/weights configuration file.

use crate::ad::{Dual, Real};
use crate::error::{Error, Result};
use crate::model::{ClimateState, ControlInput};
use crate::nlp::OcpCost;
use crate::params::GreenhouseParams;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

type Dual8 = Dual<8>;
type Dual4 = Dual<4>;

/// Prices, actuator ratings, and soft-constraint weights of the economic
/// objective.
#[derive(Clone, Debug, PartialEq)]
pub struct EconomicCostSpec {
    /// Electricity price (€·J⁻¹).
    pub electricity_price: f64,
    /// Industrial CO₂ price (€·g⁻¹).
    pub co2_price: f64,
    /// Selling price of yield (€·kg⁻¹).
    pub yield_price: f64,
    /// Ventilation motor rating P_v (W).
    pub vent_power: f64,
    /// Heating rating P_Qh (W).
    pub heating_power: f64,
    /// Cooling rating P_Qc (W).
    pub cooling_power: f64,
    /// CO₂ injection rating (g·s⁻¹).
    pub co2_rating: f64,
    /// Soft-band penalty weights for (T, C, RH), € per unit deviation per
    /// step.
    pub temp_weight: f64,
    pub co2_weight: f64,
    pub humidity_weight: f64,
    /// Soft bounds on (T, C, RH).
    pub soft_lower: [f64; 3],
    pub soft_upper: [f64; 3],
    /// Penalty smoothing parameter.
    pub smoothing: f64,
}

impl Default for EconomicCostSpec {
    fn default() -> Self {
        EconomicCostSpec {
            electricity_price: 3.0e-8,
            co2_price: 1.5e-4,
            yield_price: 1.5,
            vent_power: 2.0e4,
            heating_power: 2.0e6,
            cooling_power: 2.0e6,
            co2_rating: 30.0,
            temp_weight: 2.0,
            co2_weight: 0.01,
            humidity_weight: 0.15,
            soft_lower: [18.0, 500.0, 60.0],
            soft_upper: [26.0, 900.0, 90.0],
            smoothing: 1.0e-4,
        }
    }
}

impl EconomicCostSpec {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("p_e", self.electricity_price),
            ("p_c", self.co2_price),
            ("p_y", self.yield_price),
            ("p_v_max", self.vent_power),
            ("p_qh_max", self.heating_power),
            ("p_qc_max", self.cooling_power),
            ("c_inj_max", self.co2_rating),
            ("c_t", self.temp_weight),
            ("c_c", self.co2_weight),
            ("c_rh", self.humidity_weight),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Schema(format!(
                    "cost parameter {name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.smoothing <= 0.0 {
            return Err(Error::Schema("penalty smoothing must be positive".into()));
        }
        for i in 0..3 {
            if self.soft_lower[i] >= self.soft_upper[i] {
                return Err(Error::Schema(format!(
                    "soft band {i} inverted: [{}, {}]",
                    self.soft_lower[i], self.soft_upper[i]
                )));
            }
        }
        Ok(())
    }
}

/// Diagonal tracking weights of the lower-level NMPC.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingWeights {
    pub q: [f64; 4],
    pub r: [f64; 4],
    pub p: [f64; 4],
}

impl Default for TrackingWeights {
    fn default() -> Self {
        TrackingWeights {
            q: [100.0; 4],
            r: [1.0; 4],
            p: [100.0; 4],
        }
    }
}

impl TrackingWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, arr, strict) in [("q", &self.q, false), ("r", &self.r, true), ("p", &self.p, false)]
        {
            for (i, v) in arr.iter().enumerate() {
                if !v.is_finite() || *v < 0.0 || (strict && *v == 0.0) {
                    return Err(Error::Schema(format!(
                        "tracking weight {name}[{i}] must be {} got {v}",
                        if strict { "positive," } else { "nonnegative," }
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Exact piecewise soft-bound penalty: `c·|bound − v|` outside the band,
/// zero inside.
pub fn piecewise_penalty(v: f64, lo: f64, hi: f64, weight: f64) -> f64 {
    if v < lo {
        weight * (lo - v)
    } else if v > hi {
        weight * (v - hi)
    } else {
        0.0
    }
}

/// Smooth surrogate of [`piecewise_penalty`]:
/// `(c/2)(sqrt((lo−v)²+γ) + sqrt((hi−v)²+γ) − (hi−lo))`.
pub fn smoothed_penalty<S: Real>(v: S, lo: f64, hi: f64, weight: f64, gamma: f64) -> S {
    let a = ((v - lo) * (v - lo) + gamma).sqrt();
    let b = ((v - hi) * (v - hi) + gamma).sqrt();
    (a + b - (hi - lo)) * (0.5 * weight)
}

fn operating_generic<S: Real>(u: &[S; 4], spec: &EconomicCostSpec, dt: f64) -> S {
    let e = spec.electricity_price * dt;
    u[0] * (e * spec.vent_power)
        + u[1] * (spec.co2_price * spec.co2_rating * dt)
        + u[2] * (e * spec.heating_power)
        + u[3] * (e * spec.cooling_power)
}

fn penalty_generic<S: Real>(x: &[S; 4], spec: &EconomicCostSpec) -> S {
    let mut acc = S::constant(0.0);
    let weights = [spec.temp_weight, spec.co2_weight, spec.humidity_weight];
    for i in 0..3 {
        acc = acc
            + smoothed_penalty(
                x[i],
                spec.soft_lower[i],
                spec.soft_upper[i],
                weights[i],
                spec.smoothing,
            );
    }
    acc
}

/// Actuation cost of one step (€): power ratings × prices × Δt.
pub fn operating_cost(u: &ControlInput, spec: &EconomicCostSpec, dt: f64) -> f64 {
    operating_generic(&u.to_array(), spec, dt)
}

/// Smoothed soft-constraint penalty of one step (€).
pub fn penalty_cost(x: &ClimateState, spec: &EconomicCostSpec) -> f64 {
    penalty_generic(&x.to_array(), spec)
}

/// Full stage cost `L(x, u)` (€): operating terms scaled by Δt plus the
/// smoothed (T, C, RH) penalties.
pub fn stage_cost(x: &ClimateState, u: &ControlInput, spec: &EconomicCostSpec, dt: f64) -> f64 {
    operating_cost(u, spec, dt) + penalty_cost(x, spec)
}

/// Terminal crop value `V = p_y · k_B,fruit · k_A,s · B` (€).
pub fn terminal_value(x: &ClimateState, spec: &EconomicCostSpec, params: &GreenhouseParams) -> f64 {
    spec.yield_price * params.fruit_fraction * params.cultivated_area * x.biomass
}

/// The day-ahead objective `J_o = Σ L − V` as transcription cost terms.
pub struct EconomicObjective<'a> {
    pub spec: &'a EconomicCostSpec,
    pub params: &'a GreenhouseParams,
    /// Stage interval Δt_o (s).
    pub dt: f64,
}

impl EconomicObjective<'_> {
    fn stage_generic<S: Real>(&self, x: &[S; 4], u: &[S; 4]) -> S {
        operating_generic(u, self.spec, self.dt) + penalty_generic(x, self.spec)
    }

    fn terminal_generic<S: Real>(&self, x: &[S; 4]) -> S {
        // J_o subtracts the terminal crop value.
        -(x[3] * (self.spec.yield_price * self.params.fruit_fraction * self.params.cultivated_area))
    }
}

impl OcpCost for EconomicObjective<'_> {
    fn stage(&self, _k: usize, x: &[f64; 4], u: &[f64; 4]) -> f64 {
        self.stage_generic(x, u)
    }
    fn stage_dual(&self, _k: usize, x: &[Dual8; 4], u: &[Dual8; 4]) -> Dual8 {
        self.stage_generic(x, u)
    }
    fn terminal(&self, x: &[f64; 4]) -> f64 {
        self.terminal_generic(x)
    }
    fn terminal_dual(&self, x: &[Dual4; 4]) -> Dual4 {
        self.terminal_generic(x)
    }
}

/// Cost + tracking-weights configuration, persisted as flat `key = value`
/// text with an exhaustive schema.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CostConfig {
    pub economic: EconomicCostSpec,
    pub tracking: TrackingWeights,
}

const COST_KEYS: [(&str, &str); 29] = [
    ("p_e", "EUR/J     electricity price"),
    ("p_c", "EUR/g     industrial CO2 price"),
    ("p_y", "EUR/kg    selling price of yield"),
    ("p_v_max", "W         ventilation motor rating"),
    ("p_qh_max", "W         heating rating"),
    ("p_qc_max", "W         cooling rating"),
    ("c_inj_max", "g/s       CO2 injection rating"),
    ("c_t", "EUR/K     temperature penalty weight per step"),
    ("c_c", "EUR/ppm   CO2 penalty weight per step"),
    ("c_rh", "EUR/%     humidity penalty weight per step"),
    ("soft_t_min", "degC      soft lower temperature bound"),
    ("soft_t_max", "degC      soft upper temperature bound"),
    ("soft_c_min", "ppm       soft lower CO2 bound"),
    ("soft_c_max", "ppm       soft upper CO2 bound"),
    ("soft_rh_min", "%         soft lower humidity bound"),
    ("soft_rh_max", "%         soft upper humidity bound"),
    ("pen_gamma", "-         penalty smoothing parameter"),
    ("q_t", "-         state tracking weight, temperature"),
    ("q_c", "-         state tracking weight, CO2"),
    ("q_rh", "-         state tracking weight, humidity"),
    ("q_b", "-         state tracking weight, biomass"),
    ("r_v", "-         input tracking weight, vent"),
    ("r_c", "-         input tracking weight, CO2"),
    ("r_qh", "-         input tracking weight, heating"),
    ("r_qc", "-         input tracking weight, cooling"),
    ("pw_t", "-         terminal tracking weight, temperature"),
    ("pw_c", "-         terminal tracking weight, CO2"),
    ("pw_rh", "-         terminal tracking weight, humidity"),
    ("pw_b", "-         terminal tracking weight, biomass"),
];

impl CostConfig {
    fn get(&self, key: &str) -> f64 {
        let e = &self.economic;
        let t = &self.tracking;
        match key {
            "p_e" => e.electricity_price,
            "p_c" => e.co2_price,
            "p_y" => e.yield_price,
            "p_v_max" => e.vent_power,
            "p_qh_max" => e.heating_power,
            "p_qc_max" => e.cooling_power,
            "c_inj_max" => e.co2_rating,
            "c_t" => e.temp_weight,
            "c_c" => e.co2_weight,
            "c_rh" => e.humidity_weight,
            "soft_t_min" => e.soft_lower[0],
            "soft_t_max" => e.soft_upper[0],
            "soft_c_min" => e.soft_lower[1],
            "soft_c_max" => e.soft_upper[1],
            "soft_rh_min" => e.soft_lower[2],
            "soft_rh_max" => e.soft_upper[2],
            "pen_gamma" => e.smoothing,
            "q_t" => t.q[0],
            "q_c" => t.q[1],
            "q_rh" => t.q[2],
            "q_b" => t.q[3],
            "r_v" => t.r[0],
            "r_c" => t.r[1],
            "r_qh" => t.r[2],
            "r_qc" => t.r[3],
            "pw_t" => t.p[0],
            "pw_c" => t.p[1],
            "pw_rh" => t.p[2],
            "pw_b" => t.p[3],
            _ => unreachable!("key outside schema: {key}"),
        }
    }

    fn set(&mut self, key: &str, v: f64) {
        let e = &mut self.economic;
        let t = &mut self.tracking;
        match key {
            "p_e" => e.electricity_price = v,
            "p_c" => e.co2_price = v,
            "p_y" => e.yield_price = v,
            "p_v_max" => e.vent_power = v,
            "p_qh_max" => e.heating_power = v,
            "p_qc_max" => e.cooling_power = v,
            "c_inj_max" => e.co2_rating = v,
            "c_t" => e.temp_weight = v,
            "c_c" => e.co2_weight = v,
            "c_rh" => e.humidity_weight = v,
            "soft_t_min" => e.soft_lower[0] = v,
            "soft_t_max" => e.soft_upper[0] = v,
            "soft_c_min" => e.soft_lower[1] = v,
            "soft_c_max" => e.soft_upper[1] = v,
            "soft_rh_min" => e.soft_lower[2] = v,
            "soft_rh_max" => e.soft_upper[2] = v,
            "pen_gamma" => e.smoothing = v,
            "q_t" => t.q[0] = v,
            "q_c" => t.q[1] = v,
            "q_rh" => t.q[2] = v,
            "q_b" => t.q[3] = v,
            "r_v" => t.r[0] = v,
            "r_c" => t.r[1] = v,
            "r_qh" => t.r[2] = v,
            "r_qc" => t.r[3] = v,
            "pw_t" => t.p[0] = v,
            "pw_c" => t.p[1] = v,
            "pw_rh" => t.p[2] = v,
            "pw_b" => t.p[3] = v,
            _ => unreachable!("key outside schema: {key}"),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# Cost and tracking-weight configuration.\n");
        for (key, unit) in COST_KEYS {
            let _ = writeln!(out, "{:<11} = {:<12} # {}", key, self.get(key), unit);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
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
            let schema_key = COST_KEYS
                .iter()
                .map(|(k, _)| *k)
                .find(|k| *k == key)
                .ok_or_else(|| Error::Schema(format!("unknown cost key `{key}`")))?;
            if seen.contains_key(schema_key) {
                return Err(Error::Schema(format!("duplicate cost key `{key}`")));
            }
            let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid number for `{key}`: `{}`", value.trim()),
            })?;
            seen.insert(schema_key, value);
        }
        let missing: Vec<&str> = COST_KEYS
            .iter()
            .map(|(k, _)| *k)
            .filter(|k| !seen.contains_key(k))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!(
                "missing cost keys: {}",
                missing.join(", ")
            )));
        }
        let mut config = CostConfig::default();
        for (key, value) in seen {
            config.set(key, value);
        }
        config.economic.validate()?;
        config.tracking.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
