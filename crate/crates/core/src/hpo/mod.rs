//! Hyperparameter search over rolling-validation RMSE.

mod objective;
mod sampler;
mod search;
mod space;

pub use objective::{configure, objective, ValidationSetup};
pub use sampler::{sample, sample_random, sample_tpe, SamplerKind, TpeConfig};
pub use search::{
    best_so_far, best_trial, optimize, trial_seed, write_history, OptimizeConfig, SearchResult,
    Trial, TrialStatus,
};
pub use space::{Dimension, Domain, HyperParams, Point, SearchSpace};
