//! Point-forecast accuracy over a days × hours grid.

use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;

fn check(actual: &Matrix, forecast: &Matrix) -> Result<()> {
    if actual.shape() != forecast.shape() {
        return Err(shape_err(
            "metric inputs",
            format!("{:?}", actual.shape()),
            format!("{:?}", forecast.shape()),
        ));
    }
    if actual.is_empty() {
        return Err(Error::Range("metrics need at least one day and hour".into()));
    }
    Ok(())
}

fn errors<'a>(actual: &'a Matrix, forecast: &'a Matrix) -> impl Iterator<Item = f64> + 'a {
    actual.data().iter().zip(forecast.data()).map(|(a, f)| a - f)
}

pub fn rmse(actual: &Matrix, forecast: &Matrix) -> Result<f64> {
    check(actual, forecast)?;
    let ss: f64 = errors(actual, forecast).map(|e| e * e).sum();
    Ok((ss / actual.len() as f64).sqrt())
}

pub fn mae(actual: &Matrix, forecast: &Matrix) -> Result<f64> {
    check(actual, forecast)?;
    let s: f64 = errors(actual, forecast).map(f64::abs).sum();
    Ok(s / actual.len() as f64)
}

fn per_column(actual: &Matrix, forecast: &Matrix, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    check(actual, forecast)?;
    let (t, s) = actual.shape();
    let mut acc = vec![0.0; s];
    for i in 0..t {
        for (j, a) in acc.iter_mut().enumerate() {
            *a += f(actual.row(i)[j] - forecast.row(i)[j]);
        }
    }
    Ok(acc.into_iter().map(|a| a / t as f64).collect())
}

/// RMSE of each hour (column) across days.
pub fn rmse_per_hour(actual: &Matrix, forecast: &Matrix) -> Result<Vec<f64>> {
    Ok(per_column(actual, forecast, |e| e * e)?
        .into_iter()
        .map(f64::sqrt)
        .collect())
}

pub fn mae_per_hour(actual: &Matrix, forecast: &Matrix) -> Result<Vec<f64>> {
    per_column(actual, forecast, f64::abs)
}

/// Relative MAE against a benchmark.
pub fn rmae(model_mae: f64, naive_mae: f64) -> Result<f64> {
    if !(naive_mae > 0.0) {
        return Err(Error::DegenerateBaseline);
    }
    Ok(model_mae / naive_mae)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_values() {
        let a = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let f = Matrix::from_rows(&[[1.0, 3.0]]).unwrap();
        assert!((rmse(&a, &f).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&a, &f).unwrap(), 1.0);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn constant_error() {
        let a = Matrix::from_fn(5, 24, |i, j| (i * j) as f64);
        let f = a.map(|x| x - 2.5);
        assert!((rmse(&a, &f).unwrap() - 2.5).abs() < 1e-12);
        assert!((mae(&a, &f).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::zeros(2, 24);
        let f = Matrix::zeros(3, 24);
        assert!(matches!(rmse(&a, &f), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(mae_per_hour(&a, &f), Err(Error::ShapeMismatch { .. })));
        assert!(rmse(&Matrix::zeros(0, 24), &Matrix::zeros(0, 24)).is_err());
    }

    #[test]
    fn rmae_values() {
        assert_eq!(rmae(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(rmae(0.0, 3.0).unwrap(), 0.0);
        assert!(((rmae(13.006, 32.998).unwrap()) - 0.394).abs() < 5e-4);
        assert!(matches!(rmae(1.0, 0.0), Err(Error::DegenerateBaseline)));
    }
}
