//! Unconditional Giacomini–White comparison of two multivariate forecasts.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;

/// Days below which the normal approximation is flagged.
pub const GW_MIN_DAYS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwResult {
    pub statistic: f64,
    /// Small values favour model A.
    pub p_value: f64,
    pub days: usize,
    pub small_sample: bool,
}

/// `Δ_d = Σ_h |ε^A_{d,h}| − Σ_h |ε^B_{d,h}|`.
pub fn loss_differential(errors_a: &Matrix, errors_b: &Matrix) -> Result<Vec<f64>> {
    if errors_a.shape() != errors_b.shape() {
        return Err(shape_err(
            "loss differential",
            format!("{:?}", errors_a.shape()),
            format!("{:?}", errors_b.shape()),
        ));
    }
    Ok((0..errors_a.rows())
        .map(|d| {
            let a: f64 = errors_a.row(d).iter().map(|e| e.abs()).sum();
            let b: f64 = errors_b.row(d).iter().map(|e| e.abs()).sum();
            a - b
        })
        .collect())
}

/// One-sided test of `H0: E[Δ] ≥ 0` against A having the smaller L1 loss.
pub fn gw_test(errors_a: &Matrix, errors_b: &Matrix) -> Result<GwResult> {
    let delta = loss_differential(errors_a, errors_b)?;
    let n = delta.len();
    if n < 2 {
        return Err(Error::InsufficientHistory(format!("GW test needs 2 days, got {n}")));
    }
    let mean = delta.iter().sum::<f64>() / n as f64;
    let var = delta.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let scale = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if !(var > (1e-14 * scale).powi(2)) || !var.is_finite() {
        return Err(Error::DegenerateDifferential);
    }
    if n < GW_MIN_DAYS {
        log::warn!("GW test on {n} days; the normal approximation may be poor");
    }
    let t = mean / (var / n as f64).sqrt();
    let p = Normal::new(0.0, 1.0).expect("standard normal").cdf(t);
    Ok(GwResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        days: n,
        small_sample: n < GW_MIN_DAYS,
    })
}
