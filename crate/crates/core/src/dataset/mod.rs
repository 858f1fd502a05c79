//! Data ingestion, DST repair, daily reshaping, feature construction,
//! standardisation, splitting and synthetic data.

pub mod daily;
pub mod features;
pub mod panel;
pub mod split;
pub mod standardize;
pub mod synth;

pub use daily::{calendar_dummies, DailyMatrix, FundamentalsConfig, CALENDAR_DIM, FUEL_DIM, FUEL_SERIES};
pub use features::{build_features, linear_width, rnn_width, FeatureConfig, FeatureSets, PRICE_LAGS};
pub use panel::{load_csv, normalize_dst, read_csv, CsvSchema, HourlyPanel, Series};
pub use split::{split, split_tail, split_years, SplitRanges, DAYS_PER_YEAR};
pub use standardize::{
    fit_standardizer, fit_standardizer_counted, ColumnScaler, ConstantColumn, StandardizationParams, StandardizeConfig,
};
pub use synth::{synth_generate, Scenario, ScenarioConfig};

use crate::error::Result;

/// Panel → daily matrix → aligned feature sets.
pub fn prepare(
    panel: &HourlyPanel,
    fund: FundamentalsConfig,
    features: &FeatureConfig,
) -> Result<(DailyMatrix, FeatureSets)> {
    let dm = DailyMatrix::from_panel(panel, fund)?;
    let fs = build_features(&dm, features)?;
    Ok((dm, fs))
}
