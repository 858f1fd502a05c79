use serde::{Deserialize, Serialize};

use super::forward::BranchOutputs;
use crate::dataset::StandardizationParams;
use crate::HOURS;

/// Forecast in EUR/MWh together with each branch's own de-standardised
/// contribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub lem: Option<Vec<f64>>,
    pub rnn: Option<Vec<f64>>,
    pub kf: Option<Vec<f64>>,
    pub combined: Vec<f64>,
}

impl Decomposition {
    pub fn components(&self) -> Vec<&[f64]> {
        [&self.lem, &self.rnn, &self.kf]
            .into_iter()
            .flatten()
            .map(|v| v.as_slice())
            .collect()
    }
}

/// `component_c = ŷ_c·σ_y + μ_y` per branch and `combined = (Σ_c ŷ_c)·σ_y + μ_y`.
/// Hence `combined = Σ_c component_c − (C−1)·μ_y`.
pub fn decompose(out: &BranchOutputs, params: &StandardizationParams) -> Decomposition {
    let mu = &params.target.mean;
    let sd = &params.target.std;
    let de = |v: &[f64]| -> Vec<f64> { (0..HOURS).map(|s| v[s] * sd[s] + mu[s]).collect() };
    Decomposition {
        lem: out.lem.as_deref().map(de),
        rnn: out.rnn.as_deref().map(de),
        kf: out.kf.as_deref().map(de),
        combined: de(&out.combined),
    }
}
