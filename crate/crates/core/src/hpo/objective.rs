//! Rolling-validation RMSE of one hyperparameter configuration.

use std::ops::Range;

use super::space::HyperParams;
use crate::dataset::FeatureSets;
use crate::error::{Error, Result};
use crate::evaluation::{rmse, stack_records};
use crate::models::{ArchType, ModelSpec};
use crate::numerics::RngState;
use crate::training::{rolling_forecast, RollingPlan, TrainConfig};

/// What stays fixed across trials.
#[derive(Clone, Debug)]
pub struct ValidationSetup {
    pub arch: ArchType,
    /// Forecast samples scored by the objective.
    pub validation: Range<usize>,
    /// First test sample; the validation range must end at or before it.
    pub test_start: usize,
    /// Optimizer settings not covered by the search space.
    pub base: TrainConfig,
}

/// Model, training and rolling settings implied by `h`.
pub fn configure(
    h: &HyperParams,
    arch: ArchType,
    fs: &FeatureSets,
    base: &TrainConfig,
    forecast: Range<usize>,
) -> (ModelSpec, TrainConfig, RollingPlan) {
    let mut spec = ModelSpec::new(arch, fs.rnn_dim(), fs.linear_width);
    spec.hidden = h.hidden;
    spec.seq_len = h.seq_len;
    spec.dropout = h.dropout;
    spec.use_ols = h.use_ols && arch.has_lem();
    spec.ols_alpha = h.ols_alpha;
    let cfg = TrainConfig {
        lr_init: h.lr_init,
        lr_all: h.lr_all,
        weight_decay_init: h.weight_decay_init,
        weight_decay_all: h.weight_decay_all,
        l1_init: h.l1_init,
        l1_all: h.l1_all,
        epochs_init: h.epochs_init,
        epochs_all: h.epochs_all,
        batch_size: h.batch_size,
        clip_norm: h.clip_norm,
        ..base.clone()
    };
    let plan = RollingPlan::new(h.init_days, h.update_days, forecast);
    (spec, cfg, plan)
}

/// Overall RMSE (EUR/MWh) of rolling one-day-ahead forecasts over the
/// validation range.
pub fn objective(
    h: &HyperParams,
    fs: &FeatureSets,
    setup: &ValidationSetup,
    seed: u64,
) -> Result<f64> {
    if setup.validation.end > setup.test_start {
        return Err(Error::Range(format!(
            "validation range {:?} overlaps the test range starting at {}",
            setup.validation, setup.test_start
        )));
    }
    let (spec, cfg, plan) = configure(h, setup.arch, fs, &setup.base, setup.validation.clone());
    let mut rng = RngState::new(seed);
    let records = rolling_forecast(fs, &spec, &cfg, &plan, &mut rng)?;
    let (_, actual, forecast) = stack_records(&records)?;
    rmse(&actual, &forecast)
}
