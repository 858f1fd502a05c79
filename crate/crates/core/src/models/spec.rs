use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six branch combinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchType {
    Rnn,
    Kf,
    Lem,
    LemRnn,
    KfRnn,
    LemKfRnn,
}

impl ArchType {
    pub const ALL: [ArchType; 6] = [
        ArchType::Rnn,
        ArchType::Kf,
        ArchType::Lem,
        ArchType::LemRnn,
        ArchType::KfRnn,
        ArchType::LemKfRnn,
    ];

    pub fn has_lem(self) -> bool {
        matches!(self, ArchType::Lem | ArchType::LemRnn | ArchType::LemKfRnn)
    }

    pub fn has_rnn(self) -> bool {
        matches!(
            self,
            ArchType::Rnn | ArchType::LemRnn | ArchType::KfRnn | ArchType::LemKfRnn
        )
    }

    pub fn has_kf(self) -> bool {
        matches!(self, ArchType::Kf | ArchType::KfRnn | ArchType::LemKfRnn)
    }

    pub fn has_recurrent(self) -> bool {
        self.has_rnn() || self.has_kf()
    }

    pub fn branch_count(self) -> usize {
        self.has_lem() as usize + self.has_rnn() as usize + self.has_kf() as usize
    }

    /// Command-line / config spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            ArchType::Rnn => "rnn",
            ArchType::Kf => "kf",
            ArchType::Lem => "lem",
            ArchType::LemRnn => "lem-rnn",
            ArchType::KfRnn => "kf-rnn",
            ArchType::LemKfRnn => "lem-kf-rnn",
        }
    }

    /// Display name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            ArchType::Rnn => "RNN",
            ArchType::Kf => "KF",
            ArchType::Lem => "LEM",
            ArchType::LemRnn => "LEM_RNN",
            ArchType::KfRnn => "KF_RNN",
            ArchType::LemKfRnn => "LEM_KF_RNN",
        }
    }
}

impl fmt::Display for ArchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ArchType::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown architecture `{s}`")))
    }
}

/// Shape and structural options of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: ArchType,
    /// Hidden size `H` of each recurrent branch.
    pub hidden: usize,
    /// Sequence length `L` in days.
    pub seq_len: usize,
    pub dropout: f64,
    /// Initialise the expert block from least squares.
    pub use_ols: bool,
    /// Scale `α` applied to the least-squares coefficients.
    pub ols_alpha: f64,
    /// Recurrent input width `D`.
    pub input_dim: usize,
    /// Per-hour expert design width `p` (intercept included).
    pub linear_width: usize,
    /// Keep expert coefficients fixed during gradient training.
    #[serde(default)]
    pub freeze_lem: bool,
}

impl ModelSpec {
    pub fn new(arch: ArchType, input_dim: usize, linear_width: usize) -> Self {
        Self {
            arch,
            hidden: 16,
            seq_len: 1,
            dropout: 0.0,
            use_ols: arch.has_lem(),
            ols_alpha: 1.0,
            input_dim,
            linear_width,
            freeze_lem: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=128).contains(&self.hidden) {
            return bad(format!("hidden size {} outside [1, 128]", self.hidden));
        }
        if !(1..=7).contains(&self.seq_len) {
            return bad(format!("sequence length {} outside [1, 7]", self.seq_len));
        }
        if !(0.0..=0.5).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 0.5]", self.dropout));
        }
        if !(0.0..=2.0).contains(&self.ols_alpha) {
            return bad(format!("OLS scale {} outside [0, 2]", self.ols_alpha));
        }
        if self.input_dim == 0 || self.linear_width == 0 {
            return bad("feature dimensions must be positive".into());
        }
        Ok(())
    }

    /// Days of history consumed by one sample (the recurrent sequence), or 1.
    pub fn lookback(&self) -> usize {
        if self.arch.has_recurrent() {
            self.seq_len
        } else {
            1
        }
    }
}
