//! Accuracy metrics, the weekly naive benchmark and forecast comparison.

mod gw;
mod metrics;
mod naive;
mod report;

pub use gw::{gw_test, loss_differential, GwResult, GW_MIN_DAYS};
pub use metrics::{mae, mae_per_hour, rmae, rmse, rmse_per_hour};
pub use naive::{weekly_naive, weekly_naive_forecast};
pub use report::{evaluate, stack_records, EvalReport, ModelMetrics};
