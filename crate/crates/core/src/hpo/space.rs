use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ArchType;

/// Domain of one hyperparameter. Values are carried as `f64`; integers and
/// categorical entries are exact in that representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Int { lo: i64, hi: i64 },
    Categorical(Vec<f64>),
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Domain::Int { lo, hi } => x.fract() == 0.0 && x >= *lo as f64 && x <= *hi as f64,
            Domain::Categorical(v) => v.contains(&x),
            Domain::LogUniform { lo, hi } | Domain::Uniform { lo, hi } => x >= *lo && x <= *hi,
        }
    }

    /// Single admissible value, if the domain is collapsed to a point.
    pub fn point(&self) -> Option<f64> {
        match self {
            Domain::Int { lo, hi } if lo == hi => Some(*lo as f64),
            Domain::Categorical(v) if v.len() == 1 => Some(v[0]),
            Domain::LogUniform { lo, hi } | Domain::Uniform { lo, hi } if lo == hi => Some(*lo),
            _ => None,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Domain::Int { lo, hi } => lo <= hi,
            Domain::Categorical(v) => !v.is_empty() && v.iter().all(|x| x.is_finite()),
            Domain::LogUniform { lo, hi } => *lo > 0.0 && lo <= hi && hi.is_finite(),
            Domain::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid domain for `{name}`: {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub domain: Domain,
}

/// Ordered list of dimensions; a point is a `Vec<f64>` in the same order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

pub type Point = Vec<f64>;

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        for d in &dims {
            d.domain.validate(&d.name)?;
        }
        Ok(Self { dims })
    }

    /// The full tuning space: recurrent size, sequence length, window sizes,
    /// epochs, learning rates, penalties, OLS start, batch size, clipping, dropout.
    pub fn full() -> Self {
        let d = |name: &str, domain| Dimension {
            name: name.into(),
            domain,
        };
        use Domain::*;
        Self {
            dims: vec![
                d("hidden", Int { lo: 1, hi: 128 }),
                d("seq_len", Int { lo: 1, hi: 7 }),
                d("init_days", Int { lo: 30, hi: 730 }),
                d("update_days", Int { lo: 2, hi: 365 }),
                d("epochs_init", Categorical(vec![10.0, 20.0, 50.0, 100.0])),
                d("epochs_all", Categorical(vec![5.0, 10.0, 20.0, 50.0])),
                d("lr_init", LogUniform { lo: 1e-5, hi: 1e-2 }),
                d("lr_all", LogUniform { lo: 1e-4, hi: 1e-2 }),
                d("weight_decay_init", LogUniform { lo: 1e-8, hi: 1e-2 }),
                d("weight_decay_all", LogUniform { lo: 1e-8, hi: 1e-2 }),
                d("l1_init", LogUniform { lo: 1e-6, hi: 1e-1 }),
                d("l1_all", LogUniform { lo: 1e-6, hi: 1e-1 }),
                d("ols_alpha", Uniform { lo: 0.0, hi: 2.0 }),
                d("use_ols", Categorical(vec![0.0, 1.0])),
                d("batch_size", Categorical(vec![8.0, 16.0, 32.0, 64.0])),
                d("clip_norm", Uniform { lo: 0.1, hi: 10.0 }),
                d("dropout", Uniform { lo: 0.0, hi: 0.5 }),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    /// Replaces the domain of `name`.
    pub fn with_domain(mut self, name: &str, domain: Domain) -> Result<Self> {
        domain.validate(name)?;
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("unknown hyperparameter `{name}`")))?;
        self.dims[i].domain = domain;
        Ok(self)
    }

    /// Collapses the dimensions that `arch` does not use to their default
    /// value, so they are never sampled and cannot affect a trial.
    pub fn for_arch(&self, arch: ArchType) -> Self {
        let defaults = HyperParams::default().to_map();
        let mut masked: Vec<&str> = Vec::new();
        if !arch.has_lem() {
            masked.extend(["ols_alpha", "use_ols"]);
        }
        if !arch.has_recurrent() {
            masked.extend(["hidden", "seq_len", "dropout"]);
        }
        let mut out = self.clone();
        for d in &mut out.dims {
            if masked.contains(&d.name.as_str()) {
                let v = defaults[d.name.as_str()];
                d.domain = match d.domain {
                    Domain::Int { .. } => Domain::Int {
                        lo: v as i64,
                        hi: v as i64,
                    },
                    _ => Domain::Categorical(vec![v]),
                };
            }
        }
        out
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dims.len() && self.dims.iter().zip(p).all(|(d, x)| d.domain.contains(*x))
    }

    pub fn named(&self, p: &[f64]) -> BTreeMap<String, f64> {
        self.dims
            .iter()
            .zip(p)
            .map(|(d, x)| (d.name.clone(), *x))
            .collect()
    }
}

/// Integers without a decimal point, reals in shortest round-trip form.
pub(crate) fn format_param(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// One tuned configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub hidden: usize,
    pub seq_len: usize,
    pub init_days: usize,
    pub update_days: usize,
    pub epochs_init: usize,
    pub epochs_all: usize,
    pub lr_init: f64,
    pub lr_all: f64,
    pub weight_decay_init: f64,
    pub weight_decay_all: f64,
    pub l1_init: f64,
    pub l1_all: f64,
    pub ols_alpha: f64,
    pub use_ols: bool,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub dropout: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            hidden: 16,
            seq_len: 1,
            init_days: 365,
            update_days: 180,
            epochs_init: 50,
            epochs_all: 10,
            lr_init: 1e-3,
            lr_all: 1e-3,
            weight_decay_init: 1e-6,
            weight_decay_all: 1e-6,
            l1_init: 1e-5,
            l1_all: 1e-5,
            ols_alpha: 1.0,
            use_ols: true,
            batch_size: 32,
            clip_norm: 5.0,
            dropout: 0.0,
        }
    }
}

impl HyperParams {
    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("hidden", self.hidden as f64),
            ("seq_len", self.seq_len as f64),
            ("init_days", self.init_days as f64),
            ("update_days", self.update_days as f64),
            ("epochs_init", self.epochs_init as f64),
            ("epochs_all", self.epochs_all as f64),
            ("lr_init", self.lr_init),
            ("lr_all", self.lr_all),
            ("weight_decay_init", self.weight_decay_init),
            ("weight_decay_all", self.weight_decay_all),
            ("l1_init", self.l1_init),
            ("l1_all", self.l1_all),
            ("ols_alpha", self.ols_alpha),
            ("use_ols", if self.use_ols { 1.0 } else { 0.0 }),
            ("batch_size", self.batch_size as f64),
            ("clip_norm", self.clip_norm),
            ("dropout", self.dropout),
        ])
    }

    /// Reads the named dimensions of `p`; anything the space lacks keeps its default.
    pub fn from_point(space: &SearchSpace, p: &[f64]) -> Self {
        let mut h = HyperParams::default();
        for (d, &x) in space.dims.iter().zip(p) {
            let u = x.round().max(0.0) as usize;
            match d.name.as_str() {
                "hidden" => h.hidden = u,
                "seq_len" => h.seq_len = u,
                "init_days" => h.init_days = u,
                "update_days" => h.update_days = u,
                "epochs_init" => h.epochs_init = u,
                "epochs_all" => h.epochs_all = u,
                "lr_init" => h.lr_init = x,
                "lr_all" => h.lr_all = x,
                "weight_decay_init" => h.weight_decay_init = x,
                "weight_decay_all" => h.weight_decay_all = x,
                "l1_init" => h.l1_init = x,
                "l1_all" => h.l1_all = x,
                "ols_alpha" => h.ols_alpha = x,
                "use_ols" => h.use_ols = x != 0.0,
                "batch_size" => h.batch_size = u,
                "clip_norm" => h.clip_norm = x,
                "dropout" => h.dropout = x,
                _ => {}
            }
        }
        h
    }

    /// `key=value` pairs joined by `;`.
    pub fn to_kv_string(&self) -> String {
        let mut parts = Vec::new();
        for (k, v) in self.to_map() {
            parts.push(format!("{k}={}", format_param(v)));
        }
        parts.join(";")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}
