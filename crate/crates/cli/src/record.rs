//! Persisted result records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use ssvqd_core::checks::CheckReport;
use ssvqd_core::drivers::{IterationRecord, SaIterationRecord};

use crate::{RunConfig, RunError};

#[derive(Debug, Clone, Serialize)]
pub struct SystemInfo {
    pub m_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i64,
    pub e_core: f64,
    pub n_active_spin_orbitals: Option<usize>,
    pub n_active_determinants: Option<usize>,
    pub n_parameters: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FciSummary {
    pub energies_electronic: Vec<f64>,
    pub energies_total: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSummary {
    /// 1-based state number.
    pub state: usize,
    /// Electronic or total, following `include_core_energy`.
    pub energy: f64,
    pub energy_electronic: f64,
    pub energy_total: f64,
    pub fci_energy_electronic: Option<f64>,
    pub abs_error: Option<f64>,
    pub relative_error: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Squared overlaps with the lower states.
    pub final_overlaps: Vec<f64>,
    pub overlaps_within_tol: bool,
    /// Squared overlaps with each computed FCI root.
    pub fci_overlaps: Vec<f64>,
    pub theta: Vec<f64>,
    /// Orbital block, row-major (`m` rows of `n`).
    pub orbitals: Vec<Vec<f64>>,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedSummary {
    pub weights: Vec<f64>,
    pub energy_electronic: f64,
    pub energy_total: f64,
    pub fci_energy_electronic: Option<f64>,
    pub abs_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub command: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fci: Option<FciSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted: Option<WeightedSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub savqd_trace: Vec<SaIterationRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckReport>,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Wall times in seconds; the only run-to-run varying section.
    pub timing: BTreeMap<String, f64>,
}

impl ResultRecord {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            system: None,
            fci: None,
            states: Vec::new(),
            weighted: None,
            savqd_trace: Vec::new(),
            checks: Vec::new(),
            converged: true,
            warnings: Vec::new(),
            timing: BTreeMap::new(),
        }
    }

    /// Write `summary.json` and the CSV tables into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        std::fs::create_dir_all(dir)?;
        let file = std::fs::File::create(dir.join("summary.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        if let Some(fci) = &self.fci {
            let mut w = csv::Writer::from_path(dir.join("fci.csv"))?;
            w.write_record(["root", "energy_electronic", "energy_total", "residual_norm"])?;
            for (i, e) in fci.energies_electronic.iter().enumerate() {
                w.write_record([
                    (i + 1).to_string(),
                    e.to_string(),
                    fci.energies_total[i].to_string(),
                    fci.residual_norms[i].to_string(),
                ])?;
            }
            w.flush()?;
        }
        for s in &self.states {
            let mut w = csv::Writer::from_path(dir.join(format!("state_{}.csv", s.state)))?;
            let mut header = vec![
                "iteration".to_string(),
                "energy_electronic".into(),
                "delta".into(),
                "abs_error".into(),
            ];
            header.extend((1..s.state).map(|j| format!("overlap_{j}")));
            header.extend(["theta_evaluations".into(), "orbital_steps".into()]);
            w.write_record(&header)?;
            for r in &s.trace {
                let mut row = vec![
                    r.iteration.to_string(),
                    r.energy.to_string(),
                    r.delta.to_string(),
                    s.fci_energy_electronic.map_or(String::new(), |f| (r.energy - f).abs().to_string()),
                ];
                row.extend(r.overlaps.iter().map(|o| o.to_string()));
                row.extend([r.theta_evaluations.to_string(), r.orbital_steps.to_string()]);
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        if !self.savqd_trace.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("savqd_trace.csv"))?;
            w.write_record(["iteration", "weighted_energy", "delta", "theta_evaluations", "orbital_steps"])?;
            for r in &self.savqd_trace {
                w.write_record([
                    r.iteration.to_string(),
                    r.weighted_energy.to_string(),
                    r.delta.to_string(),
                    r.theta_evaluations.to_string(),
                    r.orbital_steps.to_string(),
                ])?;
            }
            w.flush()?;
        }
        if !self.checks.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("checks.csv"))?;
            w.write_record(["name", "instances", "max_error", "tolerance", "passed"])?;
            for c in &self.checks {
                w.write_record([
                    c.name.clone(),
                    c.instances.to_string(),
                    c.max_error.to_string(),
                    c.tolerance.to_string(),
                    c.passed.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}
