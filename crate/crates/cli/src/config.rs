//! Run configuration, read from a flat TOML file.
//!
//! Relative `fcidump_path` values are resolved against the directory holding
//! the config file; `output_dir` is taken relative to the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ssvqd_core::drivers::{DeflationConfig, OptimizerConfig, SAWeights, ThetaSolver};
use ssvqd_core::optim::ThetaOptimizer;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    NelderMead,
    Coordinate,
    ExactSector,
}

fn default_states() -> usize {
    1
}
fn default_beta() -> f64 {
    15.0
}
fn default_eta() -> f64 {
    1e-3
}
fn default_inner_steps() -> usize {
    100
}
fn default_inner_tol() -> f64 {
    1e-7
}
fn default_inner_cycles() -> usize {
    200
}
fn default_method() -> ThetaMethod {
    ThetaMethod::NelderMead
}
fn default_budget() -> usize {
    2000
}
fn default_step() -> f64 {
    0.1
}
fn default_theta_tol() -> f64 {
    1e-9
}
fn default_outer_tol() -> f64 {
    1e-4
}
fn default_max_outer() -> usize {
    50
}
fn default_reps() -> usize {
    2
}
fn default_fci_tol() -> f64 {
    1e-8
}
fn default_overlap_tol() -> f64 {
    1e-8
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub fcidump_path: Option<PathBuf>,
    /// Size `N` of the active space in spin orbitals.
    #[serde(default)]
    pub n_active_spin_orbitals: Option<usize>,
    #[serde(default = "default_states")]
    pub n_states: usize,
    /// State-averaging and reporting weights; defaults to `K, K-1, …, 1`.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default = "default_beta")]
    pub default_beta: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Orbital steps between overlap-gradient refreshes.
    #[serde(default = "default_inner_steps")]
    pub inner_steps: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_inner_cycles")]
    pub max_inner_cycles: usize,
    #[serde(default = "default_method")]
    pub theta_optimizer: ThetaMethod,
    #[serde(default = "default_budget")]
    pub theta_budget: usize,
    /// Initial simplex size for Nelder–Mead.
    #[serde(default = "default_step")]
    pub theta_step: f64,
    /// Sweep tolerance for the coordinate method.
    #[serde(default = "default_theta_tol")]
    pub theta_tol: f64,
    /// Extra random-start runs of the coordinate method per θ phase.
    #[serde(default)]
    pub theta_restarts: usize,
    #[serde(default = "default_outer_tol")]
    pub outer_tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default)]
    pub reverse_overlap_gradient: bool,
    /// Trotter repetitions of the UCCSD circuit.
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// 1-based spatial columns of the padded identity, one list per state.
    /// States without an entry start from the plain padded identity.
    #[serde(default)]
    pub per_state_init: Vec<Vec<usize>>,
    /// Start states without a `per_state_init` entry from random orbitals.
    #[serde(default)]
    pub random_init: bool,
    #[serde(default)]
    pub seed: u64,
    /// Report `energy` fields with the core/nuclear constant included.
    #[serde(default)]
    pub include_core_energy: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Number of full-space FCI roots to compute as a reference; defaults to
    /// `n_states`, 0 disables.
    #[serde(default)]
    pub fci_roots: Option<usize>,
    #[serde(default = "default_fci_tol")]
    pub fci_tol: f64,
    #[serde(default = "default_overlap_tol")]
    pub overlap_report_tol: f64,
    /// Random instances per check suite; defaults to 100 for `gradcheck` and
    /// 200 for `overlap-check`.
    #[serde(default)]
    pub check_instances: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// Read a config file and resolve its FCIDUMP path.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(p) = &cfg.fcidump_path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.fcidump_path = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn fcidump(&self) -> Result<&Path, RunError> {
        self.fcidump_path.as_deref().ok_or_else(|| invalid("`fcidump_path` is required"))
    }

    pub fn fci_root_count(&self) -> usize {
        self.fci_roots.unwrap_or(self.n_states)
    }

    pub fn weights(&self) -> Result<SAWeights, RunError> {
        let w = match &self.weights {
            Some(w) => SAWeights::new(w.clone()).map_err(|e| invalid(e.to_string()))?,
            None => SAWeights::descending(self.n_states),
        };
        if w.w.len() != self.n_states {
            return Err(invalid(format!("{} weights for {} states", w.w.len(), self.n_states)));
        }
        Ok(w)
    }

    pub fn deflation(&self) -> DeflationConfig {
        DeflationConfig {
            betas: self.betas.clone(),
            default_beta: self.default_beta,
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        let theta = match self.theta_optimizer {
            ThetaMethod::NelderMead => ThetaSolver::Ansatz {
                optimizer: ThetaOptimizer::NelderMead {
                    budget: self.theta_budget,
                    initial_step: self.theta_step,
                },
            },
            ThetaMethod::Coordinate => ThetaSolver::Ansatz {
                optimizer: ThetaOptimizer::Coordinate {
                    budget: self.theta_budget,
                    tol: self.theta_tol,
                    restarts: self.theta_restarts,
                    seed: self.seed,
                },
            },
            ThetaMethod::ExactSector => ThetaSolver::ExactSector,
        };
        OptimizerConfig {
            eta: self.eta,
            inner_steps: self.inner_steps,
            inner_tol: self.inner_tol,
            max_inner_cycles: self.max_inner_cycles,
            theta,
            outer_tol: self.outer_tol,
            max_outer: self.max_outer,
            reverse_overlap_gradient: self.reverse_overlap_gradient,
        }
    }

    /// Checks that do not need the integrals.
    pub fn validate(&self) -> Result<(), RunError> {
        if self.n_states == 0 {
            return Err(invalid("`n_states` must be at least 1"));
        }
        if self.reps == 0 {
            return Err(invalid("`reps` must be at least 1"));
        }
        if self.theta_budget == 0 {
            return Err(invalid("`theta_budget` must be at least 1"));
        }
        if !(self.theta_step > 0.0) || !(self.theta_tol > 0.0) || !(self.fci_tol > 0.0) {
            return Err(invalid("`theta_step`, `theta_tol` and `fci_tol` must be positive"));
        }
        if self.per_state_init.len() > self.n_states {
            return Err(invalid(format!(
                "{} per-state initialisations for {} states",
                self.per_state_init.len(),
                self.n_states
            )));
        }
        self.weights()?;
        self.deflation().validate().map_err(|e| invalid(e.to_string()))?;
        self.optimizer().validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Checks against the loaded integrals; returns the active spatial count.
    pub fn validate_active_space(&self, m_spatial: usize) -> Result<usize, RunError> {
        let n_spin = self
            .n_active_spin_orbitals
            .ok_or_else(|| invalid("`n_active_spin_orbitals` is required"))?;
        if n_spin == 0 || n_spin % 2 != 0 {
            return Err(invalid(format!("`n_active_spin_orbitals` must be even and nonzero (got {n_spin})")));
        }
        if n_spin > 2 * m_spatial {
            return Err(invalid(format!(
                "{n_spin} active spin orbitals exceed the {} available",
                2 * m_spatial
            )));
        }
        let n = n_spin / 2;
        for (k, cols) in self.per_state_init.iter().enumerate() {
            if cols.len() != n {
                return Err(invalid(format!("state {} init lists {} columns, expected {n}", k + 1, cols.len())));
            }
            let mut seen = vec![false; m_spatial];
            for &c in cols {
                if c == 0 || c > m_spatial {
                    return Err(invalid(format!("state {} init column {c} outside 1..={m_spatial}", k + 1)));
                }
                if std::mem::replace(&mut seen[c - 1], true) {
                    return Err(invalid(format!("state {} init repeats column {c}", k + 1)));
                }
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_experimental_settings() {
        let c = RunConfig::default();
        assert_eq!(c.eta, 1e-3);
        assert_eq!(c.inner_steps, 100);
        assert_eq!(c.default_beta, 15.0);
        assert_eq!(c.theta_optimizer, ThetaMethod::NelderMead);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("n_state = 2").is_err());
    }

    #[test]
    fn active_space_checks() {
        let mut c = RunConfig::from_toml("n_active_spin_orbitals = 8\nn_states = 2\nper_state_init = [[1,2,3,5]]").unwrap();
        assert_eq!(c.validate_active_space(19).unwrap(), 4);
        assert!(c.validate_active_space(4).is_err());
        c.per_state_init = vec![vec![1, 2, 2, 3]];
        assert!(c.validate_active_space(19).is_err());
        c.per_state_init = vec![vec![0, 1, 2, 3]];
        assert!(c.validate_active_space(19).is_err());
        c.n_active_spin_orbitals = Some(7);
        assert!(c.validate_active_space(19).is_err());
    }

    #[test]
    fn weights_must_match_the_state_count() {
        let c = RunConfig::from_toml("n_states = 3\nweights = [2.0, 1.0]").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_toml("n_states = 2\nweights = [0.0, 0.0]").unwrap();
        assert!(c.validate().is_err());
    }
}
