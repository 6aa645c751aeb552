use serde::{Deserialize, Serialize};

use crate::exact::{OracleOptions, DEFAULT_CAP};

/// How a probability is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Mode {
    /// Full enumeration, limited to `cap` edges.
    Exact { cap: usize },
    /// Sample streams `0..samples` of `seed`, Wilson intervals at `level`.
    MonteCarlo { samples: u64, seed: u64, level: f64 },
}

impl Mode {
    pub fn exact() -> Self {
        Mode::Exact { cap: DEFAULT_CAP }
    }

    pub fn monte_carlo(samples: u64, seed: u64, level: f64) -> Self {
        Mode::MonteCarlo {
            samples,
            seed,
            level,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Mode::Exact { .. } => "exact",
            Mode::MonteCarlo { .. } => "monte-carlo",
        }
    }

    pub(crate) fn oracle(&self) -> OracleOptions {
        match self {
            Mode::Exact { cap } => OracleOptions::with_cap(*cap),
            Mode::MonteCarlo { .. } => OracleOptions::default(),
        }
    }

    pub fn samples(&self) -> Option<u64> {
        match self {
            Mode::MonteCarlo { samples, .. } => Some(*samples),
            Mode::Exact { .. } => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Mode::MonteCarlo { seed, .. } => Some(*seed),
            Mode::Exact { .. } => None,
        }
    }
}
