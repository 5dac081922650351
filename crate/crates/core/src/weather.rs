//! Disturbance traces: synthetic diurnal weather, forecast perturbation, and
//! CSV persistence.
//!
//! Recorded multi-month weather is replaced by a seeded generator producing
//! one day at a time: a sine-arch radiation profile, a diurnal outdoor
//! temperature wave, near-ambient CO₂ and humidity coupled to temperature,
//! all overlaid with smooth correlated noise. Forecast error is modeled as a
//! multiplicative Ornstein-Uhlenbeck process per channel.

use crate::error::{Error, Result};
use crate::model::{h_sat, Disturbance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::path::Path;

pub const DAY_SECONDS: f64 = 86_400.0;
/// Sample spacing of generated traces (s).
pub const TRACE_DT: f64 = 300.0;

const CSV_HEADER: [&str; 5] = ["epoch_s", "T_out_C", "C_out_ppm", "H_out_gm3", "Q_rad_Wm2"];

/// Uniformly sampled disturbance sequence with zero-order-hold semantics:
/// row `k` covers `[start + k·dt, start + (k+1)·dt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceTrace {
    /// Epoch of the first row (s).
    pub start: f64,
    /// Row spacing (s).
    pub dt: f64,
    pub rows: Vec<Disturbance>,
}

impl DisturbanceTrace {
    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::Schema(format!("trace dt must be positive, got {}", self.dt)));
        }
        if self.rows.is_empty() {
            return Err(Error::Schema("trace has no rows".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            row.validate().map_err(|e| Error::Schema(format!("row {i}: {e}")))?;
        }
        Ok(())
    }

    /// Zero-order-hold sample at absolute time `t`.
    pub fn sample(&self, t: f64) -> Result<Disturbance> {
        let idx = ((t - self.start) / self.dt).floor();
        if idx < 0.0 || idx as usize >= self.rows.len() {
            return Err(Error::Span {
                context: format!("disturbance trace lookup at t = {t}"),
                needed: idx.max(0.0) as usize + 1,
                available: self.rows.len(),
            });
        }
        Ok(self.rows[idx as usize])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(csv_to_io)?;
        wtr.write_record(CSV_HEADER).map_err(csv_to_io)?;
        for (k, row) in self.rows.iter().enumerate() {
            let t = self.start + k as f64 * self.dt;
            wtr.write_record([
                format!("{t}"),
                format!("{}", row.outdoor_temp),
                format!("{}", row.outdoor_co2),
                format!("{}", row.outdoor_humidity),
                format!("{}", row.radiation),
            ])
            .map_err(csv_to_io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(csv_to_io)?;
        let headers = rdr.headers().map_err(csv_to_io)?.clone();
        for want in CSV_HEADER {
            if !headers.iter().any(|h| h == want) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("missing column `{want}`"),
                });
            }
        }
        let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
        let cols = [
            col("epoch_s"),
            col("T_out_C"),
            col("C_out_ppm"),
            col("H_out_gm3"),
            col("Q_rad_Wm2"),
        ];

        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2; // header is line 1
            let record = record.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            let field = |c: usize| -> Result<f64> {
                record
                    .get(cols[c])
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("missing field `{}`", CSV_HEADER[c]),
                    })?
                    .parse()
                    .map_err(|_| Error::Parse {
                        line,
                        message: format!(
                            "invalid number in `{}`: `{}`",
                            CSV_HEADER[c],
                            record.get(cols[c]).unwrap_or_default()
                        ),
                    })
            };
            times.push(field(0)?);
            let d = Disturbance::new(field(1)?, field(2)?, field(3)?, field(4)?);
            d.validate()
                .map_err(|e| Error::Schema(format!("line {line}: {e}")))?;
            rows.push(d);
        }
        if rows.len() < 2 {
            return Err(Error::Schema(
                "trace needs at least two rows to establish spacing".into(),
            ));
        }
        let start = times[0];
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return Err(Error::Schema(format!("non-increasing timestamps: dt = {dt}")));
        }
        for (k, &t) in times.iter().enumerate() {
            let expect = start + k as f64 * dt;
            if (t - expect).abs() > 1e-6 {
                return Err(Error::Schema(format!(
                    "non-uniform timestamps: row {k} at {t}, expected {expect}"
                )));
            }
        }
        let trace = DisturbanceTrace { start, dt, rows };
        trace.validate()?;
        Ok(trace)
    }
}

fn csv_to_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Forecast-uncertainty description: multiplicative level, noise seed, and
/// the correlation time of the noise process.
#[derive(Clone, Copy, Debug)]
pub struct UncertaintySpec {
    /// Fractional level, e.g. 0.10 for 10%.
    pub level: f64,
    pub seed: u64,
    /// Correlation time of the noise process (s).
    pub correlation_time: f64,
}

impl UncertaintySpec {
    pub fn new(level: f64, seed: u64) -> Self {
        UncertaintySpec {
            level,
            seed,
            correlation_time: 1800.0,
        }
    }
}

/// Parameters of the synthetic day generator.
#[derive(Clone, Copy, Debug)]
pub struct ProfileSpec {
    /// Clear-sky peak global radiation (W·m⁻²).
    pub q_peak: f64,
    /// Daily mean outdoor temperature (°C).
    pub t_mean: f64,
    /// Diurnal temperature half-amplitude (°C).
    pub t_amp: f64,
    /// Outdoor relative humidity level (%).
    pub rh_out: f64,
    /// Ambient CO₂ (ppm).
    pub co2_mean: f64,
    /// Sunrise epoch (s).
    pub sunrise: f64,
    /// Sunset epoch (s).
    pub sunset: f64,
    /// Relative amplitude of the generator noise (–).
    pub noise: f64,
}

impl ProfileSpec {
    /// Named presets: `clear-summer`, `overcast`, `cold-clear`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "clear-summer" => Ok(ProfileSpec {
                q_peak: 700.0,
                t_mean: 14.0,
                t_amp: 6.0,
                rh_out: 65.0,
                co2_mean: 400.0,
                sunrise: 5.0 * 3600.0,
                sunset: 21.0 * 3600.0,
                noise: 0.05,
            }),
            "overcast" => Ok(ProfileSpec {
                q_peak: 170.0,
                t_mean: 11.0,
                t_amp: 3.0,
                rh_out: 85.0,
                co2_mean: 405.0,
                sunrise: 6.0 * 3600.0,
                sunset: 20.0 * 3600.0,
                noise: 0.08,
            }),
            "cold-clear" => Ok(ProfileSpec {
                q_peak: 450.0,
                t_mean: 2.0,
                t_amp: 5.0,
                rh_out: 70.0,
                co2_mean: 410.0,
                sunrise: 7.5 * 3600.0,
                sunset: 17.5 * 3600.0,
                noise: 0.05,
            }),
            other => Err(Error::Config(format!("unknown weather profile `{other}`"))),
        }
    }
}

/// Smooth correlated noise: an Ornstein-Uhlenbeck state squashed through
/// tanh, so samples are zero-mean, unit-bounded, and continuous in time.
struct OuNoise {
    state: f64,
    decay: f64,
    diffusion: f64,
}

impl OuNoise {
    fn new(dt: f64, correlation_time: f64) -> Self {
        let tau = correlation_time.max(1.0);
        let decay = (-dt / tau).exp();
        OuNoise {
            state: 0.0,
            decay,
            diffusion: (1.0 - decay * decay).sqrt(),
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let draw: f64 = rng.sample(StandardNormal);
        self.state = self.decay * self.state + self.diffusion * draw;
        // ~N(0,1) stationary; squash to (-1, 1).
        (self.state * 0.6).tanh()
    }
}

/// Generate one synthetic day: 289 rows at 300 s covering `[0, 86400]`.
///
/// Deterministic for a given `(seed, profile)`; radiation is exactly zero
/// while the sun is below the horizon.
pub fn generate_day(seed: u64, profile: &ProfileSpec) -> DisturbanceTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (DAY_SECONDS / TRACE_DT) as usize + 1;
    let mut q_noise = OuNoise::new(TRACE_DT, 3600.0);
    let mut t_noise = OuNoise::new(TRACE_DT, 5400.0);
    let mut c_noise = OuNoise::new(TRACE_DT, 3600.0);
    let mut rh_noise = OuNoise::new(TRACE_DT, 5400.0);

    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * TRACE_DT;
        let xi_q = q_noise.next(&mut rng);
        let xi_t = t_noise.next(&mut rng);
        let xi_c = c_noise.next(&mut rng);
        let xi_rh = rh_noise.next(&mut rng);

        let day_len = profile.sunset - profile.sunrise;
        let base_q = if t > profile.sunrise && t < profile.sunset {
            profile.q_peak * (std::f64::consts::PI * (t - profile.sunrise) / day_len).sin()
        } else {
            0.0
        };
        let radiation = (base_q * (1.0 + profile.noise * xi_q)).max(0.0);

        // Warmest around 15:00 local.
        let phase = 2.0 * std::f64::consts::PI * (t - 15.0 * 3600.0) / DAY_SECONDS;
        let outdoor_temp = profile.t_mean + profile.t_amp * phase.cos()
            + profile.t_amp * 0.25 * profile.noise * xi_t;

        let outdoor_co2 = profile.co2_mean * (1.0 + 0.02 * profile.noise * xi_c);
        let rh = (profile.rh_out * (1.0 + profile.noise * xi_rh)).clamp(20.0, 100.0);
        let outdoor_humidity = rh / 100.0 * h_sat(outdoor_temp);

        rows.push(Disturbance::new(
            outdoor_temp,
            outdoor_co2,
            outdoor_humidity,
            radiation,
        ));
    }
    DisturbanceTrace {
        start: 0.0,
        dt: TRACE_DT,
        rows,
    }
}

/// Multiply each channel by `(1 + level·ξ(t))` with ξ smooth, zero-mean and
/// unit-bounded; radiation is re-clamped at zero. `level = 0` returns the
/// input bit-for-bit.
pub fn perturb(trace: &DisturbanceTrace, spec: &UncertaintySpec) -> DisturbanceTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise: [OuNoise; 4] =
        std::array::from_fn(|_| OuNoise::new(trace.dt, spec.correlation_time));
    let rows = trace
        .rows
        .iter()
        .map(|row| {
            let xi: [f64; 4] = std::array::from_fn(|i| noise[i].next(&mut rng));
            Disturbance::new(
                row.outdoor_temp * (1.0 + spec.level * xi[0]),
                (row.outdoor_co2 * (1.0 + spec.level * xi[1])).max(1.0),
                (row.outdoor_humidity * (1.0 + spec.level * xi[2])).max(0.0),
                (row.radiation * (1.0 + spec.level * xi[3])).max(0.0),
            )
        })
        .collect();
    DisturbanceTrace {
        start: trace.start,
        dt: trace.dt,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_day_shape_and_night() {
        let profile = ProfileSpec::preset("clear-summer").unwrap();
        let trace = generate_day(7, &profile);
        assert_eq!(trace.rows.len(), 289);
        assert_eq!(trace.dt, 300.0);
        // Midnight (first and last rows) has no sun, for any seed.
        for seed in [0, 1, 42, 993] {
            let t = generate_day(seed, &profile);
            assert_eq!(t.rows[0].radiation, 0.0);
            assert_eq!(t.rows[288].radiation, 0.0);
        }
        trace.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let profile = ProfileSpec::preset("overcast").unwrap();
        assert_eq!(generate_day(11, &profile), generate_day(11, &profile));
    }

    #[test]
    fn clear_summer_peak_radiation_band() {
        let profile = ProfileSpec::preset("clear-summer").unwrap();
        for seed in 0..20 {
            let trace = generate_day(seed, &profile);
            let peak = trace
                .rows
                .iter()
                .map(|r| r.radiation)
                .fold(0.0f64, f64::max);
            assert!((600.0..=900.0).contains(&peak), "seed {seed}: peak {peak}");
        }
    }

    #[test]
    fn unknown_profile_is_config_error() {
        assert!(matches!(
            ProfileSpec::preset("marsian"),
            Err(crate::error::Error::Config(_))
        ));
    }

    #[test]
    fn perturb_level_zero_is_identity() {
        let profile = ProfileSpec::preset("clear-summer").unwrap();
        let trace = generate_day(3, &profile);
        let out = perturb(&trace, &UncertaintySpec::new(0.0, 55));
        assert_eq!(trace, out);
    }

    #[test]
    fn perturb_respects_level_bound_and_clamp() {
        let profile = ProfileSpec::preset("clear-summer").unwrap();
        let trace = generate_day(3, &profile);
        let out = perturb(&trace, &UncertaintySpec::new(0.10, 55));
        for (a, b) in trace.rows.iter().zip(out.rows.iter()) {
            assert!(b.radiation >= 0.0);
            if a.radiation > 0.0 {
                assert!((b.radiation / a.radiation - 1.0).abs() <= 0.10 + 1e-12);
            }
            assert!((b.outdoor_temp / a.outdoor_temp - 1.0).abs() <= 0.10 + 1e-12);
            assert!((b.outdoor_co2 / a.outdoor_co2 - 1.0).abs() <= 0.10 + 1e-12);
        }
    }

    #[test]
    fn perturb_seeds_decorrelate() {
        let profile = ProfileSpec::preset("clear-summer").unwrap();
        let trace = generate_day(3, &profile);
        let a = perturb(&trace, &UncertaintySpec::new(0.10, 1));
        let b = perturb(&trace, &UncertaintySpec::new(0.10, 2));
        let distinct = a
            .rows
            .iter()
            .zip(b.rows.iter())
            .filter(|(x, y)| x.outdoor_temp != y.outdoor_temp)
            .count();
        assert!(distinct > 250, "only {distinct} rows differ");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let profile = ProfileSpec::preset("cold-clear").unwrap();
        let trace = generate_day(9, &profile);
        trace.save(&path).unwrap();
        let back = DisturbanceTrace::load(&path).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn csv_missing_column_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "epoch_s,T_out_C,C_out_ppm,H_out_gm3\n0,10,400,8\n300,10,400,8\n")
            .unwrap();
        let err = DisturbanceTrace::load(&path).unwrap_err();
        assert!(err.to_string().contains("Q_rad_Wm2"), "{err}");
    }

    #[test]
    fn csv_negative_radiation_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "epoch_s,T_out_C,C_out_ppm,H_out_gm3,Q_rad_Wm2\n0,10,400,8,-5\n300,10,400,8,0\n",
        )
        .unwrap();
        let err = DisturbanceTrace::load(&path).unwrap_err();
        assert!(err.to_string().contains("radiation"), "{err}");
    }

    #[test]
    fn csv_non_uniform_timestamps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "epoch_s,T_out_C,C_out_ppm,H_out_gm3,Q_rad_Wm2\n0,10,400,8,0\n300,10,400,8,0\n700,10,400,8,0\n",
        )
        .unwrap();
        let err = DisturbanceTrace::load(&path).unwrap_err();
        assert!(err.to_string().contains("non-uniform"), "{err}");
    }

    #[test]
    fn sample_is_zero_order_hold() {
        let profile = ProfileSpec::preset("clear-summer").unwrap();
        let trace = generate_day(5, &profile);
        assert_eq!(trace.sample(0.0).unwrap(), trace.rows[0]);
        assert_eq!(trace.sample(299.9).unwrap(), trace.rows[0]);
        assert_eq!(trace.sample(300.0).unwrap(), trace.rows[1]);
        assert!(trace.sample(-1.0).is_err());
        assert!(trace.sample(86_700.1).is_err());
    }
}
