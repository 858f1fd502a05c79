//! Seeded synthetic market generator used for fixtures and ordinal checks.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::panel::{HourlyPanel, Series};
use crate::error::{Error, Result};
use crate::numerics::RngState;
use crate::HOURS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Constant drivers and price (plus an optional fixed hourly profile).
    Flat,
    /// `price = 2·load − wind` exactly.
    Linear,
    /// Price responds through a ReLU kink in daily mean residual load.
    Nonlinear,
    /// Per-hour linear residual-load response plus the kink.
    Mixed,
    /// Seasonality, fundamentals, fuels and occasional spikes.
    Realistic,
}

/// Generator settings, read from TOML:
///
/// ```toml
/// scenario = "nonlinear"   # flat | linear | nonlinear | mixed | realistic
/// seed = 7
/// days = 430
/// start = "2019-01-07"
/// noise = 1.0              # optional, scenario default otherwise
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_days")]
    pub days: usize,
    #[serde(default = "default_start")]
    pub start: NaiveDate,
    /// Std of the additive price noise in EUR/MWh.
    #[serde(default)]
    pub noise: Option<f64>,
    #[serde(default = "default_flat_level")]
    pub flat_level: f64,
    /// Amplitude of the fixed hourly shape added in the flat scenario.
    #[serde(default)]
    pub flat_profile: f64,
    /// Residual-load threshold of the kink, GW.
    #[serde(default = "default_kink_threshold")]
    pub kink_threshold: f64,
    /// Price slope above the threshold, EUR/MWh per GW.
    #[serde(default = "default_kink_slope")]
    pub kink_slope: f64,
    #[serde(default = "default_spike_prob")]
    pub spike_prob: f64,
}

fn default_days() -> usize {
    430
}
fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 7).unwrap()
}
fn default_flat_level() -> f64 {
    50.0
}
fn default_kink_threshold() -> f64 {
    33.0
}
fn default_kink_slope() -> f64 {
    4.0
}
fn default_spike_prob() -> f64 {
    0.01
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, seed: u64, days: usize) -> Self {
        Self {
            scenario,
            seed,
            days,
            start: default_start(),
            noise: None,
            flat_level: default_flat_level(),
            flat_profile: 0.0,
            kink_threshold: default_kink_threshold(),
            kink_slope: default_kink_slope(),
            spike_prob: default_spike_prob(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn noise_std(&self) -> f64 {
        self.noise.unwrap_or(match self.scenario {
            Scenario::Flat | Scenario::Linear => 0.0,
            Scenario::Nonlinear | Scenario::Mixed => 1.0,
            Scenario::Realistic => 3.0,
        })
    }
}

/// Two-peak intraday shape, roughly zero-mean.
pub fn hourly_profile(s: usize) -> f64 {
    let s = s as f64;
    (-(s - 9.0).powi(2) / 8.0).exp() + 1.2 * (-(s - 19.0).powi(2) / 6.0).exp() - 0.35
}

/// Generates `cfg.days` days of hourly UTC data starting at `cfg.start`.
pub fn synth_generate(rng: &mut RngState, cfg: &ScenarioConfig) -> Result<HourlyPanel> {
    let days = cfg.days;
    if days < 30 {
        return Err(Error::Range(format!("synthetic panel needs at least 30 days, got {days}")));
    }
    let n = days * HOURS;
    let start = NaiveDateTime::from(cfg.start);
    let timestamps: Vec<_> = (0..n).map(|h| start + Duration::hours(h as i64)).collect();
    let mut cols = vec![vec![0.0; n]; Series::ALL.len()];
    let noise = cfg.noise_std();

    if cfg.scenario == Scenario::Flat {
        let fill = [
            (Series::LoadFc, 55_000.0),
            (Series::WindOnshoreFc, 15_000.0),
            (Series::WindOffshoreFc, 3_000.0),
            (Series::SolarFc, 5_000.0),
            (Series::Coal, 80.0),
            (Series::Gas, 20.0),
            (Series::Oil, 60.0),
            (Series::Eua, 25.0),
        ];
        for (s, v) in fill {
            cols[s.index()].fill(v);
        }
        for h in 0..n {
            let mut p = cfg.flat_level + cfg.flat_profile * hourly_profile(h % HOURS);
            if noise > 0.0 {
                p += noise * rng.standard_normal();
            }
            cols[Series::Price.index()][h] = p;
        }
        return HourlyPanel::new(timestamps, cols);
    }

    // daily state
    let mut wind_level = 18_000.0;
    let mut fuel = [80.0, 20.0, 60.0, 25.0]; // coal, gas, oil, eua
    for d in 0..days {
        let date = cfg.start + Duration::days(d as i64);
        let doy = date.ordinal() as f64;
        let season = (2.0 * PI * doy / 365.25).cos(); // +1 in winter
        let weekend = date.weekday().number_from_monday() >= 6;

        wind_level = (0.75 * wind_level + 0.25 * 18_000.0 + 4_000.0 * season
            + 7_000.0 * rng.standard_normal())
        .clamp(500.0, 45_000.0);
        let wind_phase = rng.uniform(0.0, 2.0 * PI);
        let cloud = rng.uniform(0.3, 1.0);
        let solar_peak = (22_000.0 - 14_000.0 * season) * cloud;
        for (k, f) in fuel.iter_mut().enumerate() {
            let vol = [1.5, 0.6, 1.2, 0.5][k];
            *f = (*f + vol * rng.standard_normal()).max(1.0);
        }

        let mut load = [0.0; HOURS];
        let mut onshore = [0.0; HOURS];
        let mut offshore = [0.0; HOURS];
        let mut solar = [0.0; HOURS];
        for s in 0..HOURS {
            let base = 55_000.0 + 9_000.0 * hourly_profile(s) + 5_000.0 * season;
            load[s] = base - if weekend { 8_000.0 } else { 0.0 } + 1_500.0 * rng.standard_normal();
            let w = wind_level * (1.0 + 0.15 * (2.0 * PI * s as f64 / 24.0 + wind_phase).sin())
                + 600.0 * rng.standard_normal();
            let w = w.max(0.0);
            onshore[s] = 0.85 * w;
            offshore[s] = 0.15 * w;
            let sun = (PI * (s as f64 - 5.0) / 14.0).sin().max(0.0);
            solar[s] = solar_peak * sun;
        }
        let residual: Vec<f64> = (0..HOURS)
            .map(|s| (load[s] - onshore[s] - offshore[s] - solar[s]) / 1_000.0)
            .collect();
        let r_day = residual.iter().sum::<f64>() / HOURS as f64;
        let kink = cfg.kink_slope * (r_day - cfg.kink_threshold).max(0.0);

        for s in 0..HOURS {
            let h = d * HOURS + s;
            let price = match cfg.scenario {
                Scenario::Flat => unreachable!(),
                Scenario::Linear => 2.0 * load[s] - (onshore[s] + offshore[s]),
                Scenario::Nonlinear => 30.0 + 5.0 * hourly_profile(s) + kink,
                Scenario::Mixed => 20.0 + 0.8 * residual[s] + kink,
                Scenario::Realistic => {
                    let spike = if rng.bernoulli(cfg.spike_prob) {
                        rng.uniform(50.0, 200.0)
                    } else {
                        0.0
                    };
                    10.0 + 8.0 * hourly_profile(s)
                        + 1.2 * residual[s]
                        + 0.6 * kink
                        + 1.0 * fuel[1]
                        + 0.4 * fuel[3]
                        + 0.05 * fuel[0]
                        + spike
                }
            };
            let eps = if noise > 0.0 { noise * rng.standard_normal() } else { 0.0 };
            cols[Series::Price.index()][h] = price + eps;
            cols[Series::LoadFc.index()][h] = load[s];
            cols[Series::WindOnshoreFc.index()][h] = onshore[s];
            cols[Series::WindOffshoreFc.index()][h] = offshore[s];
            cols[Series::SolarFc.index()][h] = solar[s];
            cols[Series::Coal.index()][h] = fuel[0];
            cols[Series::Gas.index()][h] = fuel[1];
            cols[Series::Oil.index()][h] = fuel[2];
            cols[Series::Eua.index()][h] = fuel[3];
        }
    }
    HourlyPanel::new(timestamps, cols)
}
