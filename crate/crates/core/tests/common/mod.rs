#![allow(dead_code)]

use dayahead_core::dataset::{
    prepare, synth_generate, FeatureConfig, FeatureSets, FundamentalsConfig, HourlyPanel, Scenario,
    ScenarioConfig,
};
use dayahead_core::numerics::RngState;

pub fn panel(scenario: Scenario, seed: u64, days: usize) -> HourlyPanel {
    let cfg = ScenarioConfig::new(scenario, seed, days);
    synth_generate(&mut RngState::new(seed), &cfg).unwrap()
}

pub fn features_of(panel: &HourlyPanel) -> FeatureSets {
    prepare(panel, FundamentalsConfig::default(), &FeatureConfig::default())
        .unwrap()
        .1
}

pub fn features(scenario: Scenario, seed: u64, days: usize) -> FeatureSets {
    features_of(&panel(scenario, seed, days))
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}
