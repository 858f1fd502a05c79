//! Standardised window views, minibatch assembly, the loss and per-window training.

use std::ops::Range;

use rand::seq::SliceRandom;

use super::config::{PhaseConfig, TrainConfig};
use super::optim::{adam_step, OptimizerState};
use super::scheduler::PlateauScheduler;
use crate::dataset::{FeatureSets, StandardizationParams};
use crate::error::{Error, Result};
use crate::models::forward::{forward_on_tape, register, Masks, StateVars};
use crate::models::{BatchInputs, ModelSpec, ModelState};
use crate::numerics::{ols_fit_with_fallback, GradTape, Matrix, RngState, Var};
use crate::HOURS;

/// Standardised copy of the feature rows `lo..hi`.
#[derive(Clone, Debug)]
pub struct StdBlock {
    lo: usize,
    linear: Option<Matrix>,
    rnn: Option<Matrix>,
    targets: Matrix,
    linear_width: usize,
}

impl StdBlock {
    pub fn new(fs: &FeatureSets, params: &StandardizationParams, spec: &ModelSpec, rows: Range<usize>) -> Self {
        let idx: Vec<usize> = rows.clone().collect();
        let linear = spec
            .arch
            .has_lem()
            .then(|| params.linear.apply_rows(&fs.linear, &idx));
        let rnn = spec
            .arch
            .has_recurrent()
            .then(|| params.rnn.apply_rows(&fs.rnn, &idx));
        let targets = params.target.apply_rows(&fs.targets, &idx);
        Self {
            lo: rows.start,
            linear,
            rnn,
            targets,
            linear_width: fs.linear_width,
        }
    }

    /// Inputs for the samples `idx` (absolute sample positions).
    pub fn inputs(&self, idx: &[usize], spec: &ModelSpec) -> BatchInputs {
        let linear = self.linear.as_ref().map(|m| {
            let local: Vec<usize> = idx.iter().map(|&i| i - self.lo).collect();
            m.select_rows(&local)
        });
        let sequence = self.rnn.as_ref().map(|m| {
            let l = spec.seq_len;
            (0..l)
                .map(|t| {
                    let local: Vec<usize> = idx.iter().map(|&i| i + 1 + t - l - self.lo).collect();
                    m.select_rows(&local)
                })
                .collect()
        });
        BatchInputs { linear, sequence }
    }

    pub fn targets(&self, idx: &[usize]) -> Matrix {
        let local: Vec<usize> = idx.iter().map(|&i| i - self.lo).collect();
        self.targets.select_rows(&local)
    }

    /// Per-hour least squares of standardised targets on the standardised
    /// expert design over the samples `rows`. Columns that are numerically
    /// zero over the window (constant regressors such as night-time solar)
    /// are left out and get a zero coefficient.
    pub fn ols(&self, rows: Range<usize>) -> Result<Matrix> {
        let lin = self
            .linear
            .as_ref()
            .ok_or(Error::MissingInput { arch: "LEM", block: "linear" })?;
        let p = self.linear_width;
        let n = rows.len();
        let mut coef = Matrix::zeros(HOURS, p);
        for s in 0..HOURS {
            let cell = |i: usize, k: usize| lin.row(i - self.lo)[s * p + k];
            let keep: Vec<usize> = (0..p)
                .filter(|&k| k == 0 || rows.clone().any(|i| cell(i, k).abs() > 1e-9))
                .collect();
            let x = Matrix::from_fn(n, keep.len(), |r, c| cell(rows.start + r, keep[c]));
            let y = Matrix::from_fn(n, 1, |r, _| self.targets[(rows.start + r - self.lo, s)]);
            let b = ols_fit_with_fallback(&x, &y)?;
            for (c, &k) in keep.iter().enumerate() {
                coef[(s, k)] = b[(c, 0)];
            }
        }
        Ok(coef)
    }
}

/// `MSE + λ1·Σ|w|` over the output-side maps, evaluated directly.
pub fn loss(pred: &Matrix, targets: &Matrix, state: &ModelState, l1: f64) -> f64 {
    assert_eq!(pred.shape(), targets.shape(), "loss shape");
    let n = pred.len().max(1) as f64;
    let mse = pred
        .data()
        .iter()
        .zip(targets.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    mse + l1 * state.l1_norm()
}

fn loss_on_tape(
    tape: &mut GradTape,
    vars: &StateVars,
    spec: &ModelSpec,
    inputs: &BatchInputs,
    targets: &Matrix,
    l1: f64,
    masks: Masks,
) -> Result<Var> {
    let out = forward_on_tape(tape, vars, spec, inputs, masks)?;
    let t = tape.constant(targets.clone());
    let mut total = tape.mse(out.combined, t);
    if l1 > 0.0 {
        let mut terms: Vec<Var> = Vec::new();
        if let Some(coef) = vars.lem {
            let (rows, cols) = tape.value(coef).shape();
            let mask = Matrix::from_fn(rows, cols, |_, k| if k == 0 { 0.0 } else { 1.0 });
            let slopes = tape.mul_const(coef, mask);
            terms.push(tape.abs_sum(slopes));
        }
        let maps: Vec<Var> = vars.output_maps().collect();
        for w in maps {
            terms.push(tape.abs_sum(w));
        }
        for term in terms {
            let scaled = tape.scale(term, l1);
            total = tape.add(total, scaled);
        }
    }
    Ok(total)
}

/// Loss value and its gradient, shaped like the state. Frozen blocks get zeros.
pub fn loss_gradients(
    state: &ModelState,
    spec: &ModelSpec,
    inputs: &BatchInputs,
    targets: &Matrix,
    l1: f64,
) -> Result<(f64, ModelState)> {
    let mut tape = GradTape::new();
    let vars = register(&mut tape, state, true, spec.freeze_lem);
    let total = loss_on_tape(&mut tape, &vars, spec, inputs, targets, l1, Masks::default())?;
    let grads = tape.backward(total);
    let mut g = state.clone();
    for ((_, block), id) in g.params_mut().into_iter().zip(&vars.ids) {
        *block = match id {
            Some(id) => grads.get(*id).clone(),
            None => Matrix::zeros(block.rows(), block.cols()),
        };
    }
    Ok((tape.scalar(total), g))
}

fn dropout_mask(rng: &mut RngState, rows: usize, cols: usize, p: f64) -> Matrix {
    let keep = 1.0 / (1.0 - p);
    Matrix::from_fn(rows, cols, |_, _| if rng.bernoulli(p) { 0.0 } else { keep })
}

/// Result of training on one window.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub state: ModelState,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
    pub final_lr: f64,
}

/// Minibatch Adam over the samples in `window` for `phase.epochs` epochs.
/// Returns the final-epoch state.
#[allow(clippy::too_many_arguments)]
pub fn train_window(
    block: &StdBlock,
    window: Range<usize>,
    spec: &ModelSpec,
    phase: &PhaseConfig,
    cfg: &TrainConfig,
    init: ModelState,
    rng: &mut RngState,
) -> Result<TrainOutcome> {
    let lookback = spec.lookback();
    if window.len() < lookback + 1 {
        return Err(Error::InsufficientHistory(format!(
            "training window of {} days is shorter than L+1 = {}",
            window.len(),
            lookback + 1
        )));
    }
    if window.start + 1 < lookback || window.start + 1 < block.lo + lookback {
        return Err(Error::InsufficientHistory(format!(
            "window starting at sample {} lacks {} days of sequence history",
            window.start,
            lookback - 1
        )));
    }
    init.validate(spec)?;
    let mut state = init;
    let mut opt = OptimizerState::new(&state);
    let mut sched = PlateauScheduler::new(cfg.scheduler);
    let mut lr = phase.lr;
    let mut order: Vec<usize> = window.clone().collect();
    let mut trace = Vec::with_capacity(phase.epochs);

    for _ in 0..phase.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let inputs = block.inputs(batch, spec);
            let targets = block.targets(batch);
            let masks = if spec.dropout > 0.0 {
                Masks {
                    rnn: spec
                        .arch
                        .has_rnn()
                        .then(|| dropout_mask(rng, batch.len(), spec.hidden, spec.dropout)),
                    kf: spec
                        .arch
                        .has_kf()
                        .then(|| dropout_mask(rng, batch.len(), spec.hidden, spec.dropout)),
                }
            } else {
                Masks::default()
            };
            let mut tape = GradTape::new();
            let vars = register(&mut tape, &state, true, spec.freeze_lem);
            let total = loss_on_tape(&mut tape, &vars, spec, &inputs, &targets, phase.l1, masks)?;
            let value = tape.scalar(total);
            if !value.is_finite() {
                return Err(Error::NonFiniteGradient(format!("loss is {value}")));
            }
            epoch_loss += value * batch.len() as f64;
            let grads = tape.backward(total);
            let g: Vec<Option<Matrix>> = vars.ids.iter().map(|id| id.map(|id| grads.get(id).clone())).collect();
            adam_step(&mut state, &mut opt, g, lr, phase.weight_decay, cfg.clip_norm, &cfg.adam)?;
        }
        let mean = epoch_loss / window.len() as f64;
        trace.push(mean);
        lr = sched.step(lr, mean);
    }
    Ok(TrainOutcome {
        state,
        loss_trace: trace,
        final_lr: lr,
    })
}
