//! Regressor construction for the linear expert model and the recurrent branches.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::daily::{DailyMatrix, CALENDAR_DIM, FUEL_DIM};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::HOURS;

/// Autoregressive price lags of the expert model, in days.
pub const PRICE_LAGS: [usize; 3] = [1, 2, 7];

/// Lag configuration. Commodity lags are in [`super::FUEL_SERIES`] order
/// (EUA, NGas, Oil, Coal).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub fuel_lags: [usize; FUEL_DIM],
}

impl Default for FeatureConfig {
    fn default() -> Self {
        // EUA settles at t-1, oil/gas/coal at t-2.
        Self {
            fuel_lags: [1, 2, 2, 2],
        }
    }
}

impl FeatureConfig {
    pub fn max_lag(&self) -> usize {
        self.fuel_lags
            .iter()
            .copied()
            .chain(PRICE_LAGS)
            .max()
            .unwrap_or(7)
    }
}

/// Aligned regressors and targets, one sample per target day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSets {
    /// Row index into the source [`DailyMatrix`] for each sample.
    pub target_days: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    /// n×24 target prices.
    pub targets: Matrix,
    /// n×(24·p) per-hour expert design rows; the first entry of each hour
    /// block is the intercept.
    pub linear: Matrix,
    /// Width `p` of one per-hour design row (intercept included).
    pub linear_width: usize,
    /// n×D recurrent inputs `(Y_{t-1}, cal, Fund, price)`.
    pub rnn: Matrix,
}

impl FeatureSets {
    pub fn len(&self) -> usize {
        self.target_days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_days.is_empty()
    }

    pub fn rnn_dim(&self) -> usize {
        self.rnn.cols()
    }

    /// Sample position of the given calendar date, if present.
    pub fn position_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.iter().position(|d| *d == date)
    }

    /// Per-hour design row `(1, Ylag, cal, Fund, price)` of sample `i`, hour `s`.
    pub fn linear_row(&self, i: usize, s: usize) -> &[f64] {
        let p = self.linear_width;
        &self.linear.row(i)[s * p..(s + 1) * p]
    }
}

/// Width of one per-hour expert design row: intercept, 3 lags, calendar,
/// fundamentals, commodity prices.
pub fn linear_width(fund_dim: usize) -> usize {
    1 + PRICE_LAGS.len() + CALENDAR_DIM + fund_dim + FUEL_DIM
}

/// Width `D = S + D_cal + S·D_fund + D_price` of the recurrent input.
pub fn rnn_width(fund_dim: usize) -> usize {
    HOURS + CALENDAR_DIM + HOURS * fund_dim + FUEL_DIM
}

/// Builds both feature sets. Samples start at the first day for which every
/// lag is available, so the first `max_lag` days are dropped.
pub fn build_features(dm: &DailyMatrix, cfg: &FeatureConfig) -> Result<FeatureSets> {
    let max_lag = cfg.max_lag();
    let t = dm.days();
    if t <= max_lag {
        return Err(Error::InsufficientHistory(format!(
            "{t} days available, need at least {}",
            max_lag + 1
        )));
    }
    let fd = dm.fund_dim;
    let p = linear_width(fd);
    let d = rnn_width(fd);
    let n = t - max_lag;

    let mut targets = Matrix::zeros(n, HOURS);
    let mut linear = Matrix::zeros(n, HOURS * p);
    let mut rnn = Matrix::zeros(n, d);
    let mut target_days = Vec::with_capacity(n);
    let mut dates = Vec::with_capacity(n);

    for (i, day) in (max_lag..t).enumerate() {
        target_days.push(day);
        dates.push(dm.dates[day]);
        targets.row_mut(i).copy_from_slice(dm.price.row(day));

        let cal = dm.calendar.row(day);
        let fuel: Vec<f64> = (0..FUEL_DIM)
            .map(|k| dm.fuels[(day - cfg.fuel_lags[k], k)])
            .collect();

        let lin = linear.row_mut(i);
        for s in 0..HOURS {
            let row = &mut lin[s * p..(s + 1) * p];
            let mut k = 0;
            row[k] = 1.0;
            k += 1;
            for lag in PRICE_LAGS {
                row[k] = dm.price[(day - lag, s)];
                k += 1;
            }
            row[k..k + CALENDAR_DIM].copy_from_slice(cal);
            k += CALENDAR_DIM;
            row[k..k + fd].copy_from_slice(&dm.fundamentals.row(day)[s * fd..(s + 1) * fd]);
            k += fd;
            row[k..k + FUEL_DIM].copy_from_slice(&fuel);
        }

        let r = rnn.row_mut(i);
        let mut k = 0;
        r[k..k + HOURS].copy_from_slice(dm.price.row(day - 1));
        k += HOURS;
        r[k..k + CALENDAR_DIM].copy_from_slice(cal);
        k += CALENDAR_DIM;
        r[k..k + HOURS * fd].copy_from_slice(dm.fundamentals.row(day));
        k += HOURS * fd;
        r[k..k + FUEL_DIM].copy_from_slice(&fuel);
    }

    Ok(FeatureSets {
        target_days,
        dates,
        targets,
        linear,
        linear_width: p,
        rnn,
    })
}
