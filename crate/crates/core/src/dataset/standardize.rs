//! Train-window z-scoring of regressors and targets.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::features::FeatureSets;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::HOURS;

/// What to do with a zero-variance column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantColumn {
    /// Keep the mean shift, use σ = 1.
    Clamp,
    /// Fail with [`Error::DegenerateColumn`].
    Reject,
}

/// Per-column mean and sample standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn is_degenerate(mean: f64, std: f64) -> bool {
    !(std > 1e-12 * (1.0 + mean.abs()))
}

impl ColumnScaler {
    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![0.0; cols],
            std: vec![1.0; cols],
        }
    }

    /// Fits on `rows` of `m` using the N−1 denominator. Returns the scaler
    /// and the number of clamped columns.
    pub fn fit(m: &Matrix, rows: Range<usize>, policy: ConstantColumn) -> Result<(Self, usize)> {
        let n = rows.len();
        if n < 2 || rows.end > m.rows() {
            return Err(Error::InsufficientHistory(format!(
                "standardisation window {rows:?} needs at least 2 rows inside 0..{}",
                m.rows()
            )));
        }
        let cols = m.cols();
        let mut mean = vec![0.0; cols];
        for i in rows.clone() {
            for (acc, x) in mean.iter_mut().zip(m.row(i)) {
                *acc += x;
            }
        }
        for v in &mut mean {
            *v /= n as f64;
        }
        let mut var = vec![0.0; cols];
        for i in rows {
            for ((acc, x), mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
                *acc += (x - mu) * (x - mu);
            }
        }
        let mut clamped = 0;
        let mut std = Vec::with_capacity(cols);
        for (j, v) in var.into_iter().enumerate() {
            let s = (v / (n as f64 - 1.0)).sqrt();
            if is_degenerate(mean[j], s) {
                match policy {
                    ConstantColumn::Reject => return Err(Error::DegenerateColumn { column: j }),
                    ConstantColumn::Clamp => {
                        clamped += 1;
                        std.push(1.0);
                    }
                }
            } else {
                std.push(s);
            }
        }
        Ok((Self { mean, std }, clamped))
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }

    pub fn apply(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..m.rows() {
            let r = self.apply_row(m.row(i));
            out.row_mut(i).copy_from_slice(&r);
        }
        out
    }

    pub fn invert(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..m.rows() {
            let r = self.invert_row(m.row(i));
            out.row_mut(i).copy_from_slice(&r);
        }
        out
    }

    /// Rows `idx` of `m`, standardised.
    pub fn apply_rows(&self, m: &Matrix, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), m.cols());
        for (k, &i) in idx.iter().enumerate() {
            let r = self.apply_row(m.row(i));
            out.row_mut(k).copy_from_slice(&r);
        }
        out
    }
}

/// Scaling constants of one training window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    /// Recurrent input columns.
    pub rnn: ColumnScaler,
    /// Expert design columns; intercept columns are left untouched.
    pub linear: ColumnScaler,
    /// Per-hour target mean/std (24 entries, all equal in scalar mode).
    pub target: ColumnScaler,
}

impl StandardizationParams {
    pub fn target_mean(&self) -> &[f64] {
        &self.target.mean
    }

    pub fn target_std(&self) -> &[f64] {
        &self.target.std
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardizeConfig {
    /// One mean/std pair over all 24 hours instead of one per hour.
    #[serde(default)]
    pub scalar_target_standardization: bool,
}

/// Fits all scaling constants on the samples in `window` only.
pub fn fit_standardizer(
    fs: &FeatureSets,
    window: Range<usize>,
    cfg: StandardizeConfig,
) -> Result<StandardizationParams> {
    let (params, clamped) = fit_standardizer_counted(fs, window.clone(), cfg)?;
    if clamped > 0 {
        log::warn!("{clamped} constant feature columns in window {window:?}; std clamped to 1");
    }
    Ok(params)
}

/// [`fit_standardizer`] without logging; also returns the number of
/// constant feature columns whose std was clamped to 1.
pub fn fit_standardizer_counted(
    fs: &FeatureSets,
    window: Range<usize>,
    cfg: StandardizeConfig,
) -> Result<(StandardizationParams, usize)> {
    let (rnn, c1) = ColumnScaler::fit(&fs.rnn, window.clone(), ConstantColumn::Clamp)?;
    let (mut linear, c2) = ColumnScaler::fit(&fs.linear, window.clone(), ConstantColumn::Clamp)?;
    let p = fs.linear_width;
    for s in 0..HOURS {
        linear.mean[s * p] = 0.0;
        linear.std[s * p] = 1.0;
    }
    let clamped = c1 + c2 - HOURS;

    let target = if cfg.scalar_target_standardization {
        let cells = window.len() * HOURS;
        let flat = Matrix::from_vec(
            cells,
            1,
            window.clone().flat_map(|i| fs.targets.row(i).to_vec()).collect(),
        )?;
        let (s, _) = ColumnScaler::fit(&flat, 0..cells, ConstantColumn::Reject)?;
        ColumnScaler {
            mean: vec![s.mean[0]; HOURS],
            std: vec![s.std[0]; HOURS],
        }
    } else {
        ColumnScaler::fit(&fs.targets, window, ConstantColumn::Reject)?.0
    };
    Ok((StandardizationParams { rnn, linear, target }, clamped))
}
