//! Branch forward passes. Everything runs on a [`GradTape`] so training and
//! inference share one code path and produce identical values.

use super::spec::{ArchType, ModelSpec};
use super::state::{ModelState, RecurrentBranch};
use crate::error::{shape_err, Error, Result};
use crate::numerics::{GradTape, Matrix, ParamId, Var};
use crate::HOURS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Standardised inputs for a batch of `B` target days.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchInputs {
    /// B×(24·p) expert design rows.
    pub linear: Option<Matrix>,
    /// `L` matrices of shape B×D, oldest step first.
    pub sequence: Option<Vec<Matrix>>,
}

impl BatchInputs {
    pub fn batch_size(&self) -> usize {
        self.linear
            .as_ref()
            .map(|m| m.rows())
            .or_else(|| self.sequence.as_ref().and_then(|s| s.first()).map(|m| m.rows()))
            .unwrap_or(0)
    }
}

/// Standardised per-branch and combined forecasts of one day.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchOutputs {
    pub lem: Option<Vec<f64>>,
    pub rnn: Option<Vec<f64>>,
    pub kf: Option<Vec<f64>>,
    pub combined: Vec<f64>,
}

impl BranchOutputs {
    /// Present branches in (lem, rnn, kf) order.
    pub fn branches(&self) -> Vec<&[f64]> {
        [&self.lem, &self.rnn, &self.kf]
            .into_iter()
            .flatten()
            .map(|v| v.as_slice())
            .collect()
    }
}

/// B×24 standardised outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutputs {
    pub lem: Option<Matrix>,
    pub rnn: Option<Matrix>,
    pub kf: Option<Matrix>,
    pub combined: Matrix,
}

impl BatchOutputs {
    pub fn len(&self) -> usize {
        self.combined.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.combined.rows() == 0
    }

    pub fn day(&self, i: usize) -> BranchOutputs {
        let row = |m: &Option<Matrix>| m.as_ref().map(|m| m.row(i).to_vec());
        BranchOutputs {
            lem: row(&self.lem),
            rnn: row(&self.rnn),
            kf: row(&self.kf),
            combined: self.combined.row(i).to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BranchVars {
    w_hid: Var,
    w_ext: Var,
    b_hid: Var,
    w_out: Var,
    b_out: Var,
}

#[derive(Clone, Debug)]
pub(crate) struct StateVars {
    pub lem: Option<Var>,
    pub rnn: Option<BranchVars>,
    pub kf: Option<BranchVars>,
    /// Tape parameter id per block of [`ModelState::params`], `None` when frozen.
    pub ids: Vec<Option<ParamId>>,
}

/// Puts the state on the tape. Blocks are registered as parameters when
/// `trainable`; the expert block stays constant when `freeze_lem`.
pub(crate) fn register(tape: &mut GradTape, state: &ModelState, trainable: bool, freeze_lem: bool) -> StateVars {
    let mut ids = Vec::new();
    let mut put = |tape: &mut GradTape, m: &Matrix, train: bool| {
        if train {
            let (id, v) = tape.param(m.clone());
            ids.push(Some(id));
            v
        } else {
            ids.push(None);
            tape.constant(m.clone())
        }
    };
    let lem = state
        .lem
        .as_ref()
        .map(|b| put(tape, b, trainable && !freeze_lem));
    let mut branch = |tape: &mut GradTape, br: &RecurrentBranch| BranchVars {
        w_hid: put(tape, &br.w_hid, trainable),
        w_ext: put(tape, &br.w_ext, trainable),
        b_hid: put(tape, &br.b_hid, trainable),
        w_out: put(tape, &br.w_out, trainable),
        b_out: put(tape, &br.b_out, trainable),
    };
    let rnn = state.rnn.as_ref().map(|br| branch(tape, br));
    let kf = state.kf.as_ref().map(|br| branch(tape, br));
    StateVars { lem, rnn, kf, ids }
}

impl StateVars {
    /// Output-side blocks that carry the L1 penalty.
    pub(crate) fn output_maps(&self) -> impl Iterator<Item = Var> + '_ {
        [&self.rnn, &self.kf]
            .into_iter()
            .flatten()
            .map(|b| b.w_out)
    }
}

/// Runs one recurrent branch over `seq` starting from `h0`; returns the
/// B×24 projection and the last hidden state (before dropout).
pub(crate) fn recurrent_on_tape(
    tape: &mut GradTape,
    b: &BranchVars,
    seq: &[Var],
    h0: Var,
    act: Activation,
    mask: Option<Matrix>,
) -> (Var, Var) {
    let mut h = h0;
    for &x in seq {
        let rec = tape.matmul_t(h, b.w_hid);
        let ext = tape.matmul_t(x, b.w_ext);
        let pre = tape.add(rec, ext);
        let pre = tape.add_row(pre, b.b_hid);
        h = match act {
            Activation::Relu => tape.relu(pre),
            Activation::Identity => pre,
        };
    }
    let hd = match mask {
        Some(m) => tape.mul_const(h, m),
        None => h,
    };
    let out = tape.matmul_t(hd, b.w_out);
    (tape.add_row(out, b.b_out), h)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TapeOutputs {
    pub lem: Option<Var>,
    pub rnn: Option<Var>,
    pub kf: Option<Var>,
    pub combined: Var,
}

/// Dropout masks on the final hidden state of each recurrent branch.
#[derive(Clone, Debug, Default)]
pub(crate) struct Masks {
    pub rnn: Option<Matrix>,
    pub kf: Option<Matrix>,
}

fn check_inputs(spec: &ModelSpec, inputs: &BatchInputs) -> Result<usize> {
    let arch = spec.arch;
    let b = inputs.batch_size();
    if arch.has_lem() {
        let lin = inputs.linear.as_ref().ok_or(Error::MissingInput {
            arch: arch.label(),
            block: "linear",
        })?;
        if lin.shape() != (b, HOURS * spec.linear_width) {
            return Err(shape_err(
                "expert design",
                format!("{:?}", (b, HOURS * spec.linear_width)),
                format!("{:?}", lin.shape()),
            ));
        }
    }
    if arch.has_recurrent() {
        let seq = inputs.sequence.as_ref().ok_or(Error::MissingInput {
            arch: arch.label(),
            block: "sequence",
        })?;
        if seq.len() != spec.seq_len {
            return Err(shape_err("sequence length", spec.seq_len, seq.len()));
        }
        for x in seq {
            if x.shape() != (b, spec.input_dim) {
                return Err(shape_err(
                    "sequence step",
                    format!("{:?}", (b, spec.input_dim)),
                    format!("{:?}", x.shape()),
                ));
            }
        }
    }
    Ok(b)
}

pub(crate) fn forward_on_tape(
    tape: &mut GradTape,
    vars: &StateVars,
    spec: &ModelSpec,
    inputs: &BatchInputs,
    masks: Masks,
) -> Result<TapeOutputs> {
    let b = check_inputs(spec, inputs)?;
    let arch: ArchType = spec.arch;
    let lem = match (vars.lem, arch.has_lem()) {
        (Some(coef), true) => {
            let design = tape.constant(inputs.linear.clone().expect("checked"));
            Some(tape.grouped_linear(design, coef))
        }
        _ => None,
    };
    let (rnn, kf) = if arch.has_recurrent() {
        let seq: Vec<Var> = inputs
            .sequence
            .as_ref()
            .expect("checked")
            .iter()
            .map(|x| tape.constant(x.clone()))
            .collect();
        let h0 = tape.constant(Matrix::zeros(b, spec.hidden));
        let rnn = vars
            .rnn
            .as_ref()
            .map(|bv| recurrent_on_tape(tape, bv, &seq, h0, Activation::Relu, masks.rnn.clone()).0);
        let kf = vars
            .kf
            .as_ref()
            .map(|bv| recurrent_on_tape(tape, bv, &seq, h0, Activation::Identity, masks.kf.clone()).0);
        (rnn, kf)
    } else {
        (None, None)
    };
    let mut parts = [lem, rnn, kf].into_iter().flatten();
    let mut combined = parts.next().expect("every architecture has a branch");
    for p in parts {
        combined = tape.add(combined, p);
    }
    Ok(TapeOutputs {
        lem,
        rnn,
        kf,
        combined,
    })
}

/// Evaluation-mode forward pass over a batch (no dropout).
pub fn forward(state: &ModelState, spec: &ModelSpec, inputs: &BatchInputs) -> Result<BatchOutputs> {
    state.validate(spec)?;
    let mut tape = GradTape::new();
    let vars = register(&mut tape, state, false, false);
    let out = forward_on_tape(&mut tape, &vars, spec, inputs, Masks::default())?;
    let get = |v: Option<Var>| v.map(|v| tape.value(v).clone());
    Ok(BatchOutputs {
        lem: get(out.lem),
        rnn: get(out.rnn),
        kf: get(out.kf),
        combined: tape.value(out.combined).clone(),
    })
}

fn single_recurrent(
    branch: &RecurrentBranch,
    seq: &Matrix,
    hidden_in: &[f64],
    act: Activation,
    dropout_mask: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = branch.hidden();
    if seq.cols() != branch.input_dim() || seq.rows() == 0 {
        return Err(shape_err(
            "recurrent sequence",
            format!("L×{}", branch.input_dim()),
            format!("{}×{}", seq.rows(), seq.cols()),
        ));
    }
    if hidden_in.len() != h {
        return Err(shape_err("hidden state", h, hidden_in.len()));
    }
    if let Some(m) = dropout_mask {
        if m.len() != h {
            return Err(shape_err("dropout mask", h, m.len()));
        }
    }
    let mut tape = GradTape::new();
    let st = ModelState {
        lem: None,
        rnn: Some(branch.clone()),
        kf: None,
    };
    let vars = register(&mut tape, &st, false, false);
    let steps: Vec<Var> = (0..seq.rows())
        .map(|t| tape.constant(Matrix::row_vector(seq.row(t))))
        .collect();
    let h0 = tape.constant(Matrix::row_vector(hidden_in));
    let mask = dropout_mask.map(Matrix::row_vector);
    let (out, h_last) = recurrent_on_tape(&mut tape, vars.rnn.as_ref().unwrap(), &steps, h0, act, mask);
    Ok((tape.value(out).data().to_vec(), tape.value(h_last).data().to_vec()))
}

/// One L×D sequence through an Elman branch with the given activation.
/// Returns the 24 outputs and the final hidden state.
pub fn rnn_forward(
    branch: &RecurrentBranch,
    seq: &Matrix,
    hidden_in: &[f64],
    act: Activation,
    dropout_mask: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    single_recurrent(branch, seq, hidden_in, act, dropout_mask)
}

/// The linear state-space branch: [`rnn_forward`] with identity activation.
pub fn kf_forward(
    branch: &RecurrentBranch,
    seq: &Matrix,
    hidden_in: &[f64],
    dropout_mask: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    single_recurrent(branch, seq, hidden_in, Activation::Identity, dropout_mask)
}

/// Per-hour expert forecast `β_s · x_s` from a 24×p block of design rows.
pub fn lem_forward(coef: &Matrix, rows: &Matrix) -> Result<Vec<f64>> {
    if rows.shape() != coef.shape() || coef.rows() != HOURS {
        return Err(shape_err(
            "expert design rows",
            format!("{:?}", coef.shape()),
            format!("{:?}", rows.shape()),
        ));
    }
    let mut tape = GradTape::new();
    let design = tape.constant(Matrix::from_vec(1, rows.len(), rows.data().to_vec())?);
    let c = tape.constant(coef.clone());
    let out = tape.grouped_linear(design, c);
    Ok(tape.value(out).data().to_vec())
}
