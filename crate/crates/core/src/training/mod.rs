//! Regularised Adam training, plateau scheduling and the rolling backtest.

mod config;
mod optim;
mod rolling;
mod scheduler;
mod window;

pub use config::{AdamConfig, PhaseConfig, SchedulerConfig, TrainConfig};
pub use optim::{adam_step, clip_global_norm, OptimizerState};
pub use rolling::{
    rolling_forecast, rolling_forecast_full, write_forecasts, ForecastRecord, RollingPlan,
    RollingResult,
};
pub use scheduler::{scheduler_step, scheduler_step_with, PlateauScheduler};
pub use window::{loss, loss_gradients, train_window, StdBlock, TrainOutcome};
