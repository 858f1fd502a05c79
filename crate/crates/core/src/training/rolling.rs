//! Daily re-estimation on a rolling window with warm-started weights.

use std::io::Write;
use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::window::{train_window, StdBlock};
use crate::dataset::panel::format_float;
use crate::dataset::{fit_standardizer_counted, FeatureSets, StandardizationParams};
use crate::error::{Error, Result};
use crate::models::{decompose, forward, init_weights, Decomposition, ModelSpec, ModelState};
use crate::numerics::RngState;
use crate::HOURS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingPlan {
    /// Length of the first training window, days.
    pub init_days: usize,
    /// Length of every later training window, days.
    pub update_days: usize,
    /// Forecast sample positions `start..end`.
    pub start: usize,
    pub end: usize,
    pub warm_start: bool,
}

impl RollingPlan {
    pub fn new(init_days: usize, update_days: usize, forecast: Range<usize>) -> Self {
        Self {
            init_days,
            update_days,
            start: forecast.start,
            end: forecast.end,
            warm_start: true,
        }
    }

    pub fn validate(&self, spec: &ModelSpec, samples: usize) -> Result<()> {
        if !(30..=730).contains(&self.init_days) {
            return Err(Error::Config(format!("init_days {} outside [30, 730]", self.init_days)));
        }
        if !(2..=365).contains(&self.update_days) {
            return Err(Error::Config(format!("update_days {} outside [2, 365]", self.update_days)));
        }
        if self.start >= self.end || self.end > samples {
            return Err(Error::Range(format!(
                "forecast range {}..{} invalid for {samples} samples",
                self.start, self.end
            )));
        }
        let need = self.init_days.max(self.update_days) + spec.lookback() - 1;
        if self.start < need {
            return Err(Error::InsufficientHistory(format!(
                "first forecast at sample {} but {need} earlier samples are needed",
                self.start
            )));
        }
        Ok(())
    }
}

/// One out-of-sample day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub sample: usize,
    pub date: NaiveDate,
    /// Combined forecast, EUR/MWh.
    pub forecast: Vec<f64>,
    pub actual: Vec<f64>,
    pub components: Decomposition,
    pub standardization: StandardizationParams,
    pub loss_trace: Vec<f64>,
}

/// State and scaling after the last processed window.
#[derive(Clone, Debug)]
pub struct RollingResult {
    pub records: Vec<ForecastRecord>,
    pub final_state: ModelState,
    pub final_standardization: StandardizationParams,
}

fn fresh_state(
    spec: &ModelSpec,
    block: &StdBlock,
    window: Range<usize>,
    rng: &mut RngState,
) -> Result<ModelState> {
    let ols = if spec.arch.has_lem() && spec.use_ols {
        Some(block.ols(window)?)
    } else {
        None
    };
    init_weights(spec, rng, ols.as_ref())
}

/// Forecasts every sample in `plan.start..plan.end`. The first day trains a
/// fresh model on `init_days` with the initial phase; later days warm-start
/// from the previous day's weights and train on `update_days` with the
/// update phase (or start fresh when `warm_start` is off).
pub fn rolling_forecast(
    fs: &FeatureSets,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    plan: &RollingPlan,
    rng: &mut RngState,
) -> Result<Vec<ForecastRecord>> {
    Ok(rolling_forecast_full(fs, spec, cfg, plan, rng)?.records)
}

pub fn rolling_forecast_full(
    fs: &FeatureSets,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    plan: &RollingPlan,
    rng: &mut RngState,
) -> Result<RollingResult> {
    spec.validate()?;
    cfg.validate()?;
    plan.validate(spec, fs.len())?;
    if spec.input_dim != fs.rnn_dim() || spec.linear_width != fs.linear_width {
        return Err(crate::error::shape_err(
            "model spec vs features",
            format!("D={} p={}", fs.rnn_dim(), fs.linear_width),
            format!("D={} p={}", spec.input_dim, spec.linear_width),
        ));
    }
    let lookback = spec.lookback();
    let mut records = Vec::with_capacity(plan.end - plan.start);
    let mut prev: Option<(ModelState, StandardizationParams)> = None;
    let mut reported = 0;

    for tau in plan.start..plan.end {
        let first = prev.is_none();
        let days = if first { plan.init_days } else { plan.update_days };
        let window = tau - days..tau;
        let (params, clamped) = fit_standardizer_counted(fs, window.clone(), cfg.standardize)?;
        if clamped != reported {
            if clamped > 0 {
                log::warn!("{clamped} constant feature columns from window {window:?} on; std clamped to 1");
            }
            reported = clamped;
        }
        let block = StdBlock::new(fs, &params, spec, window.start + 1 - lookback..tau + 1);
        let mut day_rng = rng.split();

        let (init, phase) = match prev.take() {
            Some((state, old)) if plan.warm_start => {
                let carried = if cfg.rescale_warm_start {
                    state.rescale(&old, &params)
                } else {
                    state
                };
                (carried, cfg.update())
            }
            _ => {
                let phase = if first { cfg.initial() } else { cfg.update() };
                (fresh_state(spec, &block, window.clone(), &mut day_rng)?, phase)
            }
        };
        let outcome = train_window(&block, window, spec, &phase, cfg, init, &mut day_rng)?;

        let inputs = block.inputs(&[tau], spec);
        let out = forward(&outcome.state, spec, &inputs)?.day(0);
        let components = decompose(&out, &params);
        records.push(ForecastRecord {
            sample: tau,
            date: fs.dates[tau],
            forecast: components.combined.clone(),
            actual: fs.targets.row(tau).to_vec(),
            components,
            standardization: params.clone(),
            loss_trace: outcome.loss_trace,
        });
        prev = Some((outcome.state, params));
    }
    let (final_state, final_standardization) = prev.expect("at least one forecast day");
    Ok(RollingResult {
        records,
        final_state,
        final_standardization,
    })
}

/// Writes `date,hour,forecast,actual,lem_component,rnn_component,kf_component`;
/// component cells are empty for absent branches.
pub fn write_forecasts<W: Write>(records: &[ForecastRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "date",
        "hour",
        "forecast",
        "actual",
        "lem_component",
        "rnn_component",
        "kf_component",
    ])?;
    for r in records {
        let cell = |c: &Option<Vec<f64>>, s: usize| c.as_ref().map(|v| format_float(v[s])).unwrap_or_default();
        for s in 0..HOURS {
            w.write_record([
                r.date.to_string(),
                s.to_string(),
                format_float(r.forecast[s]),
                format_float(r.actual[s]),
                cell(&r.components.lem, s),
                cell(&r.components.rnn, s),
                cell(&r.components.kf, s),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
