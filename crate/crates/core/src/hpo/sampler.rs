//! Random and tree-structured Parzen estimator (TPE) samplers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::space::{Domain, Point, SearchSpace};
use crate::numerics::RngState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Tpe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeConfig {
    /// Fraction of completed trials forming the "good" set.
    pub gamma: f64,
    /// Random trials before the density model takes over.
    pub n_startup: usize,
    /// Candidates drawn from the good density per dimension.
    pub n_candidates: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_startup: 10,
            n_candidates: 24,
        }
    }
}

fn sample_domain(d: &Domain, rng: &mut RngState) -> f64 {
    if let Some(p) = d.point() {
        return p;
    }
    match d {
        Domain::Int { lo, hi } => {
            let k = (rng.uniform(0.0, 1.0) * (hi - lo + 1) as f64).floor() as i64;
            (lo + k.min(hi - lo)) as f64
        }
        Domain::Categorical(v) => {
            let k = ((rng.uniform(0.0, 1.0) * v.len() as f64).floor() as usize).min(v.len() - 1);
            v[k]
        }
        Domain::LogUniform { lo, hi } => rng.uniform(lo.ln(), hi.ln()).exp().clamp(*lo, *hi),
        Domain::Uniform { lo, hi } => rng.uniform(*lo, *hi),
    }
}

/// Independent draw for every dimension.
pub fn sample_random(space: &SearchSpace, rng: &mut RngState) -> Point {
    space.dims.iter().map(|d| sample_domain(&d.domain, rng)).collect()
}

/// Continuous view of a numeric domain: bounds in the working space and the
/// maps into and out of it.
struct Continuous {
    lo: f64,
    hi: f64,
    log: bool,
    int: bool,
}

impl Continuous {
    fn of(d: &Domain) -> Option<Self> {
        match d {
            Domain::Int { lo, hi } => Some(Self {
                lo: *lo as f64 - 0.5,
                hi: *hi as f64 + 0.5,
                log: false,
                int: true,
            }),
            Domain::LogUniform { lo, hi } => Some(Self {
                lo: lo.ln(),
                hi: hi.ln(),
                log: true,
                int: false,
            }),
            Domain::Uniform { lo, hi } => Some(Self {
                lo: *lo,
                hi: *hi,
                log: false,
                int: false,
            }),
            Domain::Categorical(_) => None,
        }
    }

    fn to_work(&self, x: f64) -> f64 {
        if self.log {
            x.ln()
        } else {
            x
        }
    }

    fn from_work(&self, u: f64, d: &Domain) -> f64 {
        match d {
            Domain::Int { lo, hi } => u.round().clamp(*lo as f64, *hi as f64),
            Domain::LogUniform { lo, hi } => u.exp().clamp(*lo, *hi),
            Domain::Uniform { lo, hi } => u.clamp(*lo, *hi),
            Domain::Categorical(_) => unreachable!(),
        }
    }
}

/// Truncated Gaussian mixture with one component per observation plus a
/// broad prior component centred on the domain.
struct Parzen {
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Parzen {
    fn fit(obs: &[f64], lo: f64, hi: f64) -> Self {
        let range = (hi - lo).max(1e-12);
        let n = obs.len();
        let mut mus = obs.to_vec();
        mus.push(0.5 * (lo + hi));
        // each kernel is as wide as the larger gap to its sorted neighbours
        let mut order: Vec<usize> = (0..mus.len()).collect();
        order.sort_by(|&a, &b| mus[a].total_cmp(&mus[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| mus[i]).collect();
        let floor = range / (n as f64 + 1.0).min(100.0);
        let mut sigmas = vec![range; mus.len()];
        for (r, &i) in order.iter().enumerate() {
            let left = if r == 0 { sorted[r] - lo } else { sorted[r] - sorted[r - 1] };
            let right = if r + 1 == sorted.len() { hi - sorted[r] } else { sorted[r + 1] - sorted[r] };
            sigmas[i] = left.max(right).clamp(floor, range);
        }
        sigmas[n] = range;
        Self { mus, sigmas, lo, hi }
    }

    fn sample(&self, rng: &mut RngState) -> f64 {
        let k = ((rng.uniform(0.0, 1.0) * self.mus.len() as f64) as usize).min(self.mus.len() - 1);
        for _ in 0..100 {
            let x = self.mus[k] + self.sigmas[k] * rng.standard_normal();
            if x >= self.lo && x <= self.hi {
                return x;
            }
        }
        self.mus[k].clamp(self.lo, self.hi)
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for (&m, &s) in self.mus.iter().zip(&self.sigmas) {
            let n = Normal::new(m, s).expect("positive bandwidth");
            let mass = (n.cdf(self.hi) - n.cdf(self.lo)).max(1e-300);
            let z = (x - m) / s;
            total += (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()) / mass;
        }
        (total / self.mus.len() as f64).max(1e-300).ln()
    }
}

fn categorical_weights(values: &[f64], obs: &[f64]) -> Vec<f64> {
    let mut w = vec![1.0; values.len()];
    for o in obs {
        if let Some(k) = values.iter().position(|v| v == o) {
            w[k] += 1.0;
        }
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Proposes the next point given completed `(point, objective)` pairs
/// (lower objective is better).
pub fn sample_tpe(
    space: &SearchSpace,
    history: &[(Point, f64)],
    rng: &mut RngState,
    cfg: &TpeConfig,
) -> Point {
    if history.len() < cfg.n_startup.max(2) {
        return sample_random(space, rng);
    }
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&a, &b| history[a].1.total_cmp(&history[b].1).then(a.cmp(&b)));
    let n_good = ((cfg.gamma * history.len() as f64).ceil() as usize).clamp(1, history.len() - 1);
    let (good, bad) = order.split_at(n_good);

    space
        .dims
        .iter()
        .enumerate()
        .map(|(j, dim)| {
            let d = &dim.domain;
            if let Some(p) = d.point() {
                return p;
            }
            match d {
                Domain::Categorical(values) => {
                    let l = categorical_weights(values, &good.iter().map(|&i| history[i].0[j]).collect::<Vec<_>>());
                    let g = categorical_weights(values, &bad.iter().map(|&i| history[i].0[j]).collect::<Vec<_>>());
                    let mut best = (f64::NEG_INFINITY, values[0]);
                    for _ in 0..cfg.n_candidates {
                        let u = rng.uniform(0.0, 1.0);
                        let mut acc = 0.0;
                        let mut k = values.len() - 1;
                        for (i, w) in l.iter().enumerate() {
                            acc += w;
                            if u < acc {
                                k = i;
                                break;
                            }
                        }
                        let score = l[k].ln() - g[k].ln();
                        if score > best.0 {
                            best = (score, values[k]);
                        }
                    }
                    best.1
                }
                _ => {
                    let c = Continuous::of(d).expect("numeric domain");
                    let work = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| c.to_work(history[i].0[j])).collect() };
                    let l = Parzen::fit(&work(good), c.lo, c.hi);
                    let g = Parzen::fit(&work(bad), c.lo, c.hi);
                    let mut best = (f64::NEG_INFINITY, 0.0);
                    for _ in 0..cfg.n_candidates {
                        let mut u = l.sample(rng);
                        if c.int {
                            u = u.round();
                        }
                        let score = l.log_pdf(u) - g.log_pdf(u);
                        if score > best.0 {
                            best = (score, u);
                        }
                    }
                    c.from_work(best.1, d)
                }
            }
        })
        .collect()
}

pub fn sample(
    space: &SearchSpace,
    history: &[(Point, f64)],
    rng: &mut RngState,
    kind: SamplerKind,
    cfg: &TpeConfig,
) -> Point {
    match kind {
        SamplerKind::Random => sample_random(space, rng),
        SamplerKind::Tpe => sample_tpe(space, history, rng, cfg),
    }
}
