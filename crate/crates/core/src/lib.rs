//! Day-ahead electricity price forecasting with parallel linear, Kalman-type
//! and ReLU recurrent branches.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: matrices, least squares, RNG, reverse-mode gradients
//! - [`dataset`]: CSV ingestion, DST repair, daily-by-hour matrices, features
//! - [`models`]: the three branches and their six combinations
//! - [`training`]: Adam, plateau scheduling and rolling re-estimation
//! - [`hpo`]: random and TPE hyperparameter search
//! - [`evaluation`]: RMSE/MAE/rMAE and the Giacomini–White test

pub mod error;
pub mod dataset;
pub mod evaluation;
pub mod hpo;
pub mod models;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};

/// Hours per delivery day.
pub const HOURS: usize = 24;
