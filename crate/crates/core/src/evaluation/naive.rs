use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Same hour one week earlier.
pub fn weekly_naive(price: &Matrix, day: usize, hour: usize) -> Result<f64> {
    if day < 7 {
        return Err(Error::InsufficientHistory(format!(
            "weekly naive forecast for day {day} needs 7 earlier days"
        )));
    }
    if day >= price.rows() || hour >= price.cols() {
        return Err(Error::Range(format!(
            "day {day}, hour {hour} outside {}x{} price matrix",
            price.rows(),
            price.cols()
        )));
    }
    Ok(price.row(day - 7)[hour])
}

/// Weekly naive forecasts for the listed days, one row each.
pub fn weekly_naive_forecast(price: &Matrix, days: &[usize]) -> Result<Matrix> {
    let mut out = Matrix::zeros(days.len(), price.cols());
    for (r, &d) in days.iter().enumerate() {
        for s in 0..price.cols() {
            out.row_mut(r)[s] = weekly_naive(price, d, s)?;
        }
    }
    Ok(out)
}
