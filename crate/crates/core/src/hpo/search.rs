use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{sample, SamplerKind, TpeConfig};
use super::space::{format_param, Point, SearchSpace};
use crate::dataset::panel::format_float;
use crate::error::{Error, Result};
use crate::numerics::RngState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    pub point: Point,
    /// Validation RMSE; `None` for failed trials.
    pub objective: Option<f64>,
    pub status: TrialStatus,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub budget: usize,
    pub sampler: SamplerKind,
    pub tpe: TpeConfig,
    /// Trials proposed from the same history snapshot and run concurrently.
    pub parallel: usize,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            budget: 50,
            sampler: SamplerKind::Tpe,
            tpe: TpeConfig::default(),
            parallel: 4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best: Trial,
    pub history: Vec<Trial>,
}

/// Seed handed to the objective of trial `id`.
pub fn trial_seed(seed: u64, id: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64 + 1)
}

/// Runs `cfg.budget` trials of `objective` (lower is better). Points are
/// proposed sequentially from one RNG stream; each group of `cfg.parallel`
/// trials is evaluated concurrently, so results do not depend on the number
/// of threads. Failed trials are recorded and skipped.
pub fn optimize<F>(space: &SearchSpace, cfg: &OptimizeConfig, objective: F) -> Result<SearchResult>
where
    F: Fn(&Point, u64) -> Result<f64> + Sync,
{
    if cfg.budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    let mut rng = RngState::new(cfg.seed);
    let mut history: Vec<Trial> = Vec::with_capacity(cfg.budget);
    let group = cfg.parallel.max(1);
    while history.len() < cfg.budget {
        let done: Vec<(Point, f64)> = history
            .iter()
            .filter_map(|t| t.objective.map(|o| (t.point.clone(), o)))
            .collect();
        let start = history.len();
        let n = group.min(cfg.budget - start);
        let proposals: Vec<(usize, Point)> = (0..n)
            .map(|k| (start + k, sample(space, &done, &mut rng, cfg.sampler, &cfg.tpe)))
            .collect();
        let results: Vec<Trial> = proposals
            .into_par_iter()
            .map(|(id, point)| {
                let seed = trial_seed(cfg.seed, id);
                match objective(&point, seed) {
                    Ok(v) if v.is_finite() => Trial {
                        id,
                        point,
                        objective: Some(v),
                        status: TrialStatus::Complete,
                        seed,
                        error: None,
                    },
                    other => {
                        let reason = match other {
                            Ok(v) => format!("objective is {v}"),
                            Err(e) => e.to_string(),
                        };
                        log::warn!("{}", Error::TrialFailed { id, reason: reason.clone() });
                        Trial {
                            id,
                            point,
                            objective: None,
                            status: TrialStatus::Failed,
                            seed,
                            error: Some(reason),
                        }
                    }
                }
            })
            .collect();
        history.extend(results);
    }
    let best = best_trial(&history).ok_or(Error::AllTrialsFailed(history.len()))?;
    Ok(SearchResult {
        best: best.clone(),
        history,
    })
}

/// Lowest objective among complete trials; ties go to the lower id.
pub fn best_trial(history: &[Trial]) -> Option<&Trial> {
    history
        .iter()
        .filter(|t| t.objective.is_some())
        .min_by(|a, b| {
            a.objective
                .unwrap()
                .total_cmp(&b.objective.unwrap())
                .then(a.id.cmp(&b.id))
        })
}

/// Best objective seen up to each trial (infinite until the first success).
pub fn best_so_far(history: &[Trial]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    history
        .iter()
        .map(|t| {
            if let Some(o) = t.objective {
                best = best.min(o);
            }
            best
        })
        .collect()
}

/// `trial_id,params,rmse,status,seed,best`; params as `key=value` pairs
/// joined by `;`, rmse empty for failed trials.
pub fn write_history<W: Write>(space: &SearchSpace, history: &[Trial], writer: W) -> Result<()> {
    let best_id = best_trial(history).map(|t| t.id);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial_id", "params", "rmse", "status", "seed", "best"])?;
    for t in history {
        let params = space
            .named(&t.point)
            .into_iter()
            .map(|(k, v)| format!("{k}={}", format_param(v)))
            .collect::<Vec<_>>()
            .join(";");
        let status = match t.status {
            TrialStatus::Complete => "complete",
            TrialStatus::Failed => "failed",
        };
        w.write_record([
            t.id.to_string(),
            params,
            t.objective.map(format_float).unwrap_or_default(),
            status.to_string(),
            t.seed.to_string(),
            (Some(t.id) == best_id).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
