//! Experiment configuration: everything that determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// A run is fully determined by its config and the tool version. Every field
/// is optional here; commands fall back to their own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// `zd` or `tree`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    /// Dimension for `zd`, degree for `tree`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    /// Inhomogeneous edge parameters in canonical edge order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `exact` or `mc`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_ref_provenance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    /// Transcript index dumped by `couple` in Monte Carlo mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<u64>,
    /// `selftest`: also run the Monte Carlo criteria.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full: Option<bool>,
    /// Exit code for inconclusive verdicts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive_exit: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($self:ident, $base:ident, $($field:ident),*) => {
        ExperimentConfig { $($field: $self.$field.or($base.$field)),* }
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: ExperimentConfig) -> ExperimentConfig {
        overlay!(
            self,
            base,
            command,
            graph,
            dim,
            radius,
            n,
            m,
            i,
            p,
            p_grid,
            n_grid,
            params,
            samples,
            seed,
            mode,
            level,
            cap,
            check,
            variant,
            floor,
            pc_ref,
            pc_ref_provenance,
            grid_x,
            grid_a,
            a_max,
            transcript,
            full,
            inconclusive_exit,
            out
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_self() {
        let file = ExperimentConfig {
            p: Some(0.3),
            n: Some(4),
            ..Default::default()
        };
        let cli = ExperimentConfig {
            p: Some(0.5),
            ..Default::default()
        };
        let merged = cli.over(file);
        assert_eq!(merged.p, Some(0.5));
        assert_eq!(merged.n, Some(4));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"radiuss": 3}"#).is_err());
    }
}
