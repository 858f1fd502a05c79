use super::config::AdamConfig;
use crate::error::{Error, Result};
use crate::models::ModelState;
use crate::numerics::Matrix;

/// Adam moments, one pair per parameter block of [`ModelState::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(state: &ModelState) -> Self {
        let zeros: Vec<Matrix> = state
            .params()
            .iter()
            .map(|(_, p)| Matrix::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// Scales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Option<Matrix>], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flatten()
        .map(|g| g.norm_sq())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for g in grads.iter_mut().flatten() {
            *g = g.scale(k);
        }
    }
    norm
}

/// One optimiser step: global-norm clipping, decoupled weight decay
/// `θ ← θ(1 − η·λ_w)`, then Adam. Blocks whose gradient is `None` are frozen.
/// Returns the pre-clipping gradient norm.
pub fn adam_step(
    state: &mut ModelState,
    opt: &mut OptimizerState,
    mut grads: Vec<Option<Matrix>>,
    lr: f64,
    weight_decay: f64,
    clip_norm: f64,
    cfg: &AdamConfig,
) -> Result<f64> {
    for (i, g) in grads.iter().enumerate() {
        if let Some(g) = g {
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(format!("block {i}")));
            }
        }
    }
    let norm = clip_global_norm(&mut grads, clip_norm);
    opt.t += 1;
    let t = opt.t as i32;
    let (c1, c2) = if cfg.raw_adam {
        (1.0, 1.0)
    } else {
        (1.0 - cfg.beta1.powi(t), 1.0 - cfg.beta2.powi(t))
    };
    let decay = 1.0 - lr * weight_decay;
    for (i, ((_, p), g)) in state.params_mut().into_iter().zip(&grads).enumerate() {
        let Some(g) = g else { continue };
        let m = opt.m[i].data_mut();
        let v = opt.v[i].data_mut();
        for (k, (theta, gk)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
            let mhat = m[k] / c1;
            let vhat = v[k] / c2;
            if weight_decay != 0.0 {
                *theta *= decay;
            }
            *theta -= lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ArchType, ModelSpec};

    fn scalar_state(w: f64) -> ModelState {
        ModelState {
            lem: Some(Matrix::filled(1, 1, w)),
            rnn: None,
            kf: None,
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut st = scalar_state(0.5);
        let mut opt = OptimizerState::new(&st);
        let g = vec![Some(Matrix::filled(1, 1, 1.0))];
        adam_step(&mut st, &mut opt, g, 1e-3, 0.0, 5.0, &AdamConfig::default()).unwrap();
        let delta = st.lem.unwrap()[(0, 0)] - 0.5;
        assert!((delta + 1e-3).abs() < 1e-6);
    }

    #[test]
    fn clipping_halves() {
        let mut g = vec![Some(Matrix::from_vec(1, 2, vec![6.0, 8.0]).unwrap())];
        let n = clip_global_norm(&mut g, 5.0);
        assert_eq!(n, 10.0);
        assert_eq!(g[0].as_ref().unwrap().data(), &[3.0, 4.0]);
        let mut small = vec![Some(Matrix::filled(1, 1, 0.1))];
        clip_global_norm(&mut small, 5.0);
        assert_eq!(small[0].as_ref().unwrap()[(0, 0)], 0.1);
    }

    #[test]
    fn zero_gradient_only_counts() {
        let spec = ModelSpec::new(ArchType::LemRnn, 4, 3);
        let mut st = crate::models::init_weights(&spec, &mut crate::numerics::RngState::new(1), None).unwrap();
        let before = st.clone();
        let mut opt = OptimizerState::new(&st);
        let g = st
            .params()
            .iter()
            .map(|(_, p)| Some(Matrix::zeros(p.rows(), p.cols())))
            .collect();
        adam_step(&mut st, &mut opt, g, 1e-2, 0.0, 5.0, &AdamConfig::default()).unwrap();
        assert_eq!(st, before);
        assert_eq!(opt.t, 1);
    }

    #[test]
    fn decoupled_decay() {
        let mut st = scalar_state(2.0);
        let mut opt = OptimizerState::new(&st);
        adam_step(&mut st, &mut opt, vec![Some(Matrix::zeros(1, 1))], 0.1, 0.5, 5.0, &AdamConfig::default()).unwrap();
        assert!((st.lem.unwrap()[(0, 0)] - 2.0 * 0.95).abs() < 1e-15);
    }

    #[test]
    fn frozen_blocks_untouched() {
        let mut st = scalar_state(2.0);
        let mut opt = OptimizerState::new(&st);
        adam_step(&mut st, &mut opt, vec![None], 0.1, 0.5, 5.0, &AdamConfig::default()).unwrap();
        assert_eq!(st.lem.unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn non_finite_rejected() {
        let mut st = scalar_state(2.0);
        let mut opt = OptimizerState::new(&st);
        let r = adam_step(&mut st, &mut opt, vec![Some(Matrix::filled(1, 1, f64::NAN))], 0.1, 0.0, 5.0, &AdamConfig::default());
        assert!(matches!(r, Err(Error::NonFiniteGradient(_))));
    }

    #[test]
    fn raw_adam_differs_early() {
        let cfg = AdamConfig {
            raw_adam: true,
            ..AdamConfig::default()
        };
        let mut st = scalar_state(0.0);
        let mut opt = OptimizerState::new(&st);
        adam_step(&mut st, &mut opt, vec![Some(Matrix::filled(1, 1, 1.0))], 1e-3, 0.0, 5.0, &cfg).unwrap();
        // m = 0.1, v = 0.001 -> step = 0.1/sqrt(0.001)
        let want = -1e-3 * 0.1 / (0.001f64.sqrt() + 1e-8);
        assert!((st.lem.unwrap()[(0, 0)] - want).abs() < 1e-15);
    }
}
