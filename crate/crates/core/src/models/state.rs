use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use crate::dataset::StandardizationParams;
use crate::error::{shape_err, Result};
use crate::numerics::{uniform_init, Matrix, RngState};
use crate::HOURS;

/// Weights of one Elman-type branch. Biases are stored as 1×n rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrentBranch {
    /// H×H
    pub w_hid: Matrix,
    /// H×D
    pub w_ext: Matrix,
    /// 1×H
    pub b_hid: Matrix,
    /// 24×H
    pub w_out: Matrix,
    /// 1×24
    pub b_out: Matrix,
}

impl RecurrentBranch {
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        Self {
            w_hid: Matrix::zeros(hidden, hidden),
            w_ext: Matrix::zeros(hidden, input_dim),
            b_hid: Matrix::zeros(1, hidden),
            w_out: Matrix::zeros(HOURS, hidden),
            b_out: Matrix::zeros(1, HOURS),
        }
    }

    /// Every block uniform on ±1/√H.
    pub fn random(hidden: usize, input_dim: usize, rng: &mut RngState) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        Self {
            w_hid: uniform_init(rng, hidden, hidden, k),
            w_ext: uniform_init(rng, hidden, input_dim, k),
            b_hid: uniform_init(rng, 1, hidden, k),
            w_out: uniform_init(rng, HOURS, hidden, k),
            b_out: uniform_init(rng, 1, HOURS, k),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hid.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ext.cols()
    }

    fn blocks(&self) -> [&Matrix; 5] {
        [&self.w_hid, &self.w_ext, &self.b_hid, &self.w_out, &self.b_out]
    }

    fn blocks_mut(&mut self) -> [&mut Matrix; 5] {
        [
            &mut self.w_hid,
            &mut self.w_ext,
            &mut self.b_hid,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    fn check(&self, name: &'static str, hidden: usize, input_dim: usize) -> Result<()> {
        let want = [
            (hidden, hidden),
            (hidden, input_dim),
            (1, hidden),
            (HOURS, hidden),
            (1, HOURS),
        ];
        for (m, w) in self.blocks().iter().zip(want) {
            if m.shape() != w {
                return Err(shape_err(name, format!("{w:?}"), format!("{:?}", m.shape())));
            }
        }
        Ok(())
    }
}

/// Trainable parameters; only the blocks of the `ModelSpec` architecture are present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    /// 24×p expert coefficients, column 0 is the intercept.
    pub lem: Option<Matrix>,
    pub rnn: Option<RecurrentBranch>,
    pub kf: Option<RecurrentBranch>,
}

/// Where a parameter block sits inside a [`ModelState`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Lem,
    Hidden,
    External,
    HiddenBias,
    Output,
    OutputBias,
}

impl ModelState {
    /// All-zero state with the `ModelSpec` blocks.
    pub fn zeros(spec: &ModelSpec) -> Self {
        let a = spec.arch;
        Self {
            lem: a
                .has_lem()
                .then(|| Matrix::zeros(HOURS, spec.linear_width)),
            rnn: a
                .has_rnn()
                .then(|| RecurrentBranch::zeros(spec.hidden, spec.input_dim)),
            kf: a
                .has_kf()
                .then(|| RecurrentBranch::zeros(spec.hidden, spec.input_dim)),
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let a = spec.arch;
        if self.lem.is_some() != a.has_lem()
            || self.rnn.is_some() != a.has_rnn()
            || self.kf.is_some() != a.has_kf()
        {
            return Err(shape_err(
                "model state blocks",
                a.label(),
                format!(
                    "lem={} rnn={} kf={}",
                    self.lem.is_some(),
                    self.rnn.is_some(),
                    self.kf.is_some()
                ),
            ));
        }
        if let Some(b) = &self.lem {
            if b.shape() != (HOURS, spec.linear_width) {
                return Err(shape_err(
                    "expert coefficients",
                    format!("{:?}", (HOURS, spec.linear_width)),
                    format!("{:?}", b.shape()),
                ));
            }
        }
        if let Some(r) = &self.rnn {
            r.check("rnn branch", spec.hidden, spec.input_dim)?;
        }
        if let Some(k) = &self.kf {
            k.check("kf branch", spec.hidden, spec.input_dim)?;
        }
        Ok(())
    }

    /// Parameter blocks in canonical order: expert, rnn (5 blocks), kf (5 blocks).
    pub fn params(&self) -> Vec<(ParamKind, &Matrix)> {
        let mut out = Vec::new();
        if let Some(b) = &self.lem {
            out.push((ParamKind::Lem, b));
        }
        for br in [&self.rnn, &self.kf].into_iter().flatten() {
            out.extend(BRANCH_KINDS.into_iter().zip(br.blocks()));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<(ParamKind, &mut Matrix)> {
        let mut out = Vec::new();
        if let Some(b) = &mut self.lem {
            out.push((ParamKind::Lem, b));
        }
        for br in [&mut self.rnn, &mut self.kf].into_iter().flatten() {
            out.extend(BRANCH_KINDS.into_iter().zip(br.blocks_mut()));
        }
        out
    }

    /// All parameters concatenated in [`ModelState::params`] order.
    pub fn flatten(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|(_, m)| m.data().iter().copied())
            .collect()
    }

    /// Copy of `self` with parameters taken from a [`ModelState::flatten`] vector.
    pub fn with_flat(&self, x: &[f64]) -> ModelState {
        assert_eq!(x.len(), self.num_params(), "flat parameter length");
        let mut out = self.clone();
        let mut k = 0;
        for (_, m) in out.params_mut() {
            let n = m.len();
            m.data_mut().copy_from_slice(&x[k..k + n]);
            k += n;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|(_, m)| m.is_finite())
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|(_, m)| m.len()).sum()
    }

    /// Σ|w| over the output-side maps: expert slopes (intercepts excluded),
    /// `W_out` and `A_out`.
    pub fn l1_norm(&self) -> f64 {
        let mut s = 0.0;
        if let Some(b) = &self.lem {
            for i in 0..b.rows() {
                s += b.row(i)[1..].iter().map(|x| x.abs()).sum::<f64>();
            }
        }
        for br in [&self.rnn, &self.kf].into_iter().flatten() {
            s += br.w_out.data().iter().map(|x| x.abs()).sum::<f64>();
        }
        s
    }

    /// Re-expresses the weights so that the model computes the same raw-unit
    /// forecast under the scaling `new` as it did under `old`.
    pub fn rescale(&self, old: &StandardizationParams, new: &StandardizationParams) -> ModelState {
        let mut out = self.clone();
        let ratio: Vec<f64> = (0..HOURS)
            .map(|s| old.target.std[s] / new.target.std[s])
            .collect();
        let shift: Vec<f64> = (0..HOURS)
            .map(|s| (old.target.mean[s] - new.target.mean[s]) / new.target.std[s])
            .collect();

        if let Some(b) = &mut out.lem {
            let p = b.cols();
            for s in 0..HOURS {
                let mut intercept = b[(s, 0)];
                for k in 1..p {
                    let j = s * p + k;
                    let (mo, so) = (old.linear.mean[j], old.linear.std[j]);
                    let (mn, sn) = (new.linear.mean[j], new.linear.std[j]);
                    intercept += b[(s, k)] * (mn - mo) / so;
                    b[(s, k)] *= sn / so;
                }
                b[(s, 0)] = intercept;
                for k in 0..p {
                    b[(s, k)] *= ratio[s];
                }
                b[(s, 0)] += shift[s];
            }
        }

        let mut shifted = out.lem.is_some();
        for br in [&mut out.rnn, &mut out.kf].into_iter().flatten() {
            let d = br.w_ext.cols();
            for h in 0..br.hidden() {
                let mut bias = br.b_hid[(0, h)];
                for j in 0..d {
                    let (mo, so) = (old.rnn.mean[j], old.rnn.std[j]);
                    let (mn, sn) = (new.rnn.mean[j], new.rnn.std[j]);
                    bias += br.w_ext[(h, j)] * (mn - mo) / so;
                    br.w_ext[(h, j)] *= sn / so;
                }
                br.b_hid[(0, h)] = bias;
            }
            for s in 0..HOURS {
                for v in br.w_out.row_mut(s) {
                    *v *= ratio[s];
                }
                br.b_out[(0, s)] *= ratio[s];
                if !shifted {
                    br.b_out[(0, s)] += shift[s];
                }
            }
            shifted = true;
        }
        out
    }
}

const BRANCH_KINDS: [ParamKind; 5] = [
    ParamKind::Hidden,
    ParamKind::External,
    ParamKind::HiddenBias,
    ParamKind::Output,
    ParamKind::OutputBias,
];

/// Initial weights. Recurrent blocks are uniform on ±1/√H; the expert block
/// is `α·ols` when `ModelSpec::use_ols` is set and `ols` is given, otherwise uniform
/// on ±1/√p. Draw order is expert, rnn, kf.
pub fn init_weights(spec: &ModelSpec, rng: &mut RngState, ols: Option<&Matrix>) -> Result<ModelState> {
    let a = spec.arch;
    let lem = if a.has_lem() {
        Some(match ols {
            Some(w) if spec.use_ols => {
                if w.shape() != (HOURS, spec.linear_width) {
                    return Err(shape_err(
                        "OLS coefficients",
                        format!("{:?}", (HOURS, spec.linear_width)),
                        format!("{:?}", w.shape()),
                    ));
                }
                w.scale(spec.ols_alpha)
            }
            _ => uniform_init(
                rng,
                HOURS,
                spec.linear_width,
                1.0 / (spec.linear_width as f64).sqrt(),
            ),
        })
    } else {
        None
    };
    let rnn = a
        .has_rnn()
        .then(|| RecurrentBranch::random(spec.hidden, spec.input_dim, rng));
    let kf = a
        .has_kf()
        .then(|| RecurrentBranch::random(spec.hidden, spec.input_dim, rng));
    Ok(ModelState { lem, rnn, kf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ArchType;

    #[test]
    fn blocks_follow_arch() {
        for a in ArchType::ALL {
            let spec = ModelSpec::new(a, 7, 5);
            let st = init_weights(&spec, &mut RngState::new(1), None).unwrap();
            st.validate(&spec).unwrap();
            let n_blocks = a.has_lem() as usize + 5 * (a.has_rnn() as usize + a.has_kf() as usize);
            assert_eq!(st.params().len(), n_blocks);
        }
    }

    #[test]
    fn ols_scaling() {
        let mut spec = ModelSpec::new(ArchType::Lem, 7, 5);
        let w = Matrix::from_fn(24, 5, |i, j| (i * 5 + j) as f64);
        spec.ols_alpha = 0.0;
        let st = init_weights(&spec, &mut RngState::new(1), Some(&w)).unwrap();
        assert!(st.lem.unwrap().data().iter().all(|&x| x == 0.0));
        spec.ols_alpha = 1.0;
        let st = init_weights(&spec, &mut RngState::new(1), Some(&w)).unwrap();
        assert_eq!(st.lem.unwrap(), w);
        assert!(init_weights(&spec, &mut RngState::new(1), Some(&Matrix::zeros(24, 4))).is_err());
    }

    #[test]
    fn uniform_init_is_seeded() {
        let mut spec = ModelSpec::new(ArchType::LemKfRnn, 7, 5);
        spec.use_ols = false;
        let a = init_weights(&spec, &mut RngState::new(3), None).unwrap();
        let b = init_weights(&spec, &mut RngState::new(3), None).unwrap();
        let c = init_weights(&spec, &mut RngState::new(4), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let k = 1.0 / (spec.hidden as f64).sqrt();
        assert!(a.rnn.unwrap().w_hid.max_abs() <= k);
    }

    #[test]
    fn l1_skips_intercepts_and_hidden_blocks() {
        let spec = ModelSpec::new(ArchType::LemRnn, 3, 2);
        let mut st = ModelState::zeros(&spec);
        st.lem.as_mut().unwrap()[(0, 0)] = 100.0;
        st.lem.as_mut().unwrap()[(1, 1)] = -2.0;
        st.rnn.as_mut().unwrap().w_hid[(0, 0)] = 50.0;
        st.rnn.as_mut().unwrap().w_out[(3, 0)] = 3.0;
        assert_eq!(st.l1_norm(), 5.0);
    }
}
