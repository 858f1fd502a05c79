use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::gw::{gw_test, GW_MIN_DAYS};
use super::metrics::{mae, mae_per_hour, rmae, rmse, rmse_per_hour};
use crate::dataset::panel::format_float;
use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;
use crate::training::ForecastRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub name: String,
    pub rmse: f64,
    pub mae: f64,
    pub rmae: f64,
    pub rmse_hour: Vec<f64>,
    pub mae_hour: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: Vec<ModelMetrics>,
    /// `gw[a][b]`: p-value for "model a beats model b"; `None` on the
    /// diagonal and for degenerate pairs.
    pub gw: Vec<Vec<Option<f64>>>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub days: usize,
    pub small_sample: bool,
}

/// Stacks forecasts and actuals of consecutive records into days × hours.
pub fn stack_records(records: &[ForecastRecord]) -> Result<(Vec<NaiveDate>, Matrix, Matrix)> {
    let dates = records.iter().map(|r| r.date).collect();
    let actual = Matrix::from_rows(&records.iter().map(|r| &r.actual[..]).collect::<Vec<_>>())?;
    let forecast =
        Matrix::from_rows(&records.iter().map(|r| &r.forecast[..]).collect::<Vec<_>>())?;
    Ok((dates, actual, forecast))
}

/// Metrics for every model plus the pairwise GW matrix. `naive` is the
/// benchmark forecast used for rMAE.
pub fn evaluate(
    actual: &Matrix,
    forecasts: &[(String, Matrix)],
    naive: &Matrix,
    dates: &[NaiveDate],
) -> Result<EvalReport> {
    if !dates.is_empty() && dates.len() != actual.rows() {
        return Err(shape_err("report dates", actual.rows(), dates.len()));
    }
    let naive_mae = mae(actual, naive)?;
    let mut models = Vec::with_capacity(forecasts.len());
    for (name, f) in forecasts {
        let m = mae(actual, f)?;
        models.push(ModelMetrics {
            name: name.clone(),
            rmse: rmse(actual, f)?,
            mae: m,
            rmae: rmae(m, naive_mae)?,
            rmse_hour: rmse_per_hour(actual, f)?,
            mae_hour: mae_per_hour(actual, f)?,
        });
    }
    let errors: Vec<Matrix> = forecasts
        .iter()
        .map(|(_, f)| actual.sub(f))
        .collect::<Result<_>>()?;
    let n = forecasts.len();
    let mut gw = vec![vec![None; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            gw[a][b] = match gw_test(&errors[a], &errors[b]) {
                Ok(r) => Some(r.p_value),
                Err(Error::DegenerateDifferential) => None,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(EvalReport {
        models,
        gw,
        start: dates.first().copied(),
        end: dates.last().copied(),
        days: actual.rows(),
        small_sample: actual.rows() < GW_MIN_DAYS,
    })
}

impl EvalReport {
    /// `model,rmse,mae,rmae`.
    pub fn write_metrics<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "rmse", "mae", "rmae"])?;
        for m in &self.models {
            w.write_record([
                m.name.clone(),
                format_float(m.rmse),
                format_float(m.mae),
                format_float(m.rmae),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `model,hour,rmse,mae`.
    pub fn write_per_hour<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "hour", "rmse", "mae"])?;
        for m in &self.models {
            for (h, (r, a)) in m.rmse_hour.iter().zip(&m.mae_hour).enumerate() {
                w.write_record([m.name.clone(), h.to_string(), format_float(*r), format_float(*a)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Square p-value matrix; row model tested as the better one.
    pub fn write_gw_matrix<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["model".to_string()];
        header.extend(self.models.iter().map(|m| m.name.clone()));
        w.write_record(&header)?;
        for (m, row) in self.models.iter().zip(&self.gw) {
            let mut rec = vec![m.name.clone()];
            rec.extend(row.iter().map(|p| p.map(format_float).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
