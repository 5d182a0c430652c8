//! Subcommand execution.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssvqd_core::checks;
use ssvqd_core::drivers::{
    solve_savqd, solve_state_ssvqd, weighted_sum_report, ActiveSpace, IterationRecord, SAWeights, StateInit,
    StateSolution,
};
use ssvqd_core::fci::{build_basis, fci_overlap_with_active, lowest_eigenpairs, DeterminantBasis, EigenResult};
use ssvqd_core::oracle::random_orthonormal;
use ssvqd_core::orbopt::PartialUnitary;
use ssvqd_core::{parse_fcidump, MolecularIntegrals};

use crate::record::{FciSummary, ResultRecord, StateSummary, SystemInfo, WeightedSummary};
use crate::{RunConfig, RunError, EXIT_INVARIANT, EXIT_NOT_CONVERGED, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fci,
    Ssvqd,
    Savqd,
    Gradcheck,
    OverlapCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fci => "fci",
            Command::Ssvqd => "ssvqd",
            Command::Savqd => "savqd",
            Command::Gradcheck => "gradcheck",
            Command::OverlapCheck => "overlap-check",
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub record: ResultRecord,
    pub exit_code: i32,
}

/// Run one subcommand and write its record into `output_dir`. A record is
/// written even when the run does not converge or fails a final invariant
/// check; the exit code tells the two apart.
pub fn execute(command: Command, config: &RunConfig, output_dir: &Path) -> Result<Outcome, RunError> {
    config.validate()?;
    let start = Instant::now();
    let mut record = ResultRecord::new(command.name(), config);
    let mut exit_code = match command {
        Command::Fci => run_fci(config, &mut record)?,
        Command::Ssvqd => run_ssvqd(config, &mut record)?,
        Command::Savqd => run_savqd(config, &mut record)?,
        Command::Gradcheck | Command::OverlapCheck => run_checks(command, config, &mut record)?,
    };
    if exit_code == EXIT_OK && !record.converged {
        exit_code = EXIT_NOT_CONVERGED;
    }
    record.timing.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    record.write(output_dir)?;
    info!("wrote {}", output_dir.join("summary.json").display());
    Ok(Outcome { record, exit_code })
}

fn load_integrals(config: &RunConfig) -> Result<MolecularIntegrals, RunError> {
    let path = config.fcidump()?;
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))?;
    Ok(parse_fcidump(&text)?)
}

fn system_info(ints: &MolecularIntegrals) -> SystemInfo {
    SystemInfo {
        m_spatial: ints.m_spatial,
        n_electrons: ints.n_electrons,
        ms2: ints.ms2,
        e_core: ints.e_core,
        n_active_spin_orbitals: None,
        n_active_determinants: None,
        n_parameters: None,
    }
}

struct Reference {
    basis: DeterminantBasis,
    result: EigenResult,
}

fn reference(
    electronic: &MolecularIntegrals,
    e_core: f64,
    roots: usize,
    config: &RunConfig,
    record: &mut ResultRecord,
) -> Result<Option<Reference>, RunError> {
    if roots == 0 {
        return Ok(None);
    }
    let t = Instant::now();
    let basis = build_basis(2 * electronic.m_spatial, electronic.n_alpha(), electronic.n_beta())?;
    if roots > basis.len() {
        return Err(RunError::Config(format!(
            "{roots} FCI roots requested but the sector has {} determinants",
            basis.len()
        )));
    }
    let result = lowest_eigenpairs(electronic, &basis, roots, config.fci_tol)?;
    record.timing.insert("fci_seconds".into(), t.elapsed().as_secs_f64());
    record.fci = Some(FciSummary {
        energies_electronic: result.energies.clone(),
        energies_total: result.energies.iter().map(|e| e + e_core).collect(),
        residual_norms: result.residual_norms.clone(),
        iterations: result.iterations,
    });
    Ok(Some(Reference { basis, result }))
}

fn weighted(
    energies: &[f64],
    weights: &SAWeights,
    e_core: f64,
    fci: Option<&Reference>,
) -> Result<WeightedSummary, RunError> {
    let e = weighted_sum_report(energies, weights)?;
    let wsum: f64 = weights.w.iter().sum();
    let reference = match fci {
        Some(r) if r.result.energies.len() >= energies.len() => {
            Some(weighted_sum_report(&r.result.energies[..energies.len()], weights)?)
        }
        _ => None,
    };
    Ok(WeightedSummary {
        weights: weights.w.clone(),
        energy_electronic: e,
        energy_total: e + wsum * e_core,
        fci_energy_electronic: reference,
        abs_error: reference.map(|r| (e - r).abs()),
    })
}

fn run_fci(config: &RunConfig, record: &mut ResultRecord) -> Result<i32, RunError> {
    let ints = load_integrals(config)?;
    record.system = Some(system_info(&ints));
    let roots = match config.fci_root_count() {
        0 => config.n_states,
        k => k,
    };
    let fci = reference(&ints.electronic(), ints.e_core, roots, config, record)?.expect("at least one root");
    if roots >= config.n_states {
        let energies = fci.result.energies[..config.n_states].to_vec();
        let mut w = weighted(&energies, &config.weights()?, ints.e_core, None)?;
        w.fci_energy_electronic = Some(w.energy_electronic);
        w.abs_error = Some(0.0);
        record.weighted = Some(w);
    }
    Ok(EXIT_OK)
}

fn initial_orbitals(config: &RunConfig, state: usize, m: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<PartialUnitary, RunError> {
    if let Some(cols) = config.per_state_init.get(state) {
        let zero_based: Vec<usize> = cols.iter().map(|c| c - 1).collect();
        return Ok(PartialUnitary::from_columns(m, &zero_based)?);
    }
    if config.random_init {
        return Ok(PartialUnitary::new(random_orthonormal(rng, m, n))?);
    }
    Ok(PartialUnitary::padded_identity(m, n))
}

fn state_summary(
    config: &RunConfig,
    e_core: f64,
    s: &StateSolution,
    trace: Vec<IterationRecord>,
    fci: Option<&Reference>,
) -> Result<StateSummary, RunError> {
    let reference = fci.and_then(|r| r.result.energies.get(s.index).copied());
    let fci_overlaps = match fci {
        Some(r) => r
            .result
            .vectors
            .iter()
            .map(|v| fci_overlap_with_active(v, &r.basis, &s.u, &s.psi).map(|o| o * o))
            .collect::<ssvqd_core::Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let final_overlaps = trace.last().map_or_else(Vec::new, |r| r.overlaps.clone());
    let total = s.energy + e_core;
    Ok(StateSummary {
        state: s.index + 1,
        energy: if config.include_core_energy { total } else { s.energy },
        energy_electronic: s.energy,
        energy_total: total,
        fci_energy_electronic: reference,
        abs_error: reference.map(|r| (s.energy - r).abs()),
        relative_error: reference.map(|r| ((s.energy - r) / r).abs()),
        converged: s.converged,
        iterations: trace.len(),
        overlaps_within_tol: final_overlaps.iter().all(|o| *o < config.overlap_report_tol),
        final_overlaps,
        fci_overlaps,
        theta: s.theta.0.clone(),
        orbitals: s.u.block.row_iter().map(|r| r.iter().copied().collect()).collect(),
        trace,
    })
}

/// Feasibility of the returned orbitals and normalisation of the states.
fn check_solutions(states: &[StateSolution], record: &mut ResultRecord) -> i32 {
    let mut code = EXIT_OK;
    for s in states {
        let dev = s.u.orthonormality_deviation();
        let norm = s.psi.norm();
        if dev > 1e-8 || (norm - 1.0).abs() > 1e-8 {
            let msg = format!(
                "state {}: orbital orthonormality deviation {dev:e}, state norm {norm}",
                s.index + 1
            );
            warn!("{msg}");
            record.warnings.push(msg);
            code = EXIT_INVARIANT;
        }
    }
    code
}

fn prepare<'a>(
    config: &RunConfig,
    ints: &'a MolecularIntegrals,
    e_core: f64,
    record: &mut ResultRecord,
) -> Result<(ActiveSpace<'a>, usize), RunError> {
    let n = config.validate_active_space(ints.m_spatial)?;
    let space = ActiveSpace::new(ints, 2 * n, config.reps)?;
    let mut info = system_info(ints);
    info.e_core = e_core;
    info.n_active_spin_orbitals = Some(2 * n);
    info.n_active_determinants = Some(space.basis.len());
    info.n_parameters = Some(space.circuit.n_params());
    record.system = Some(info);
    Ok((space, n))
}

fn run_ssvqd(config: &RunConfig, record: &mut ResultRecord) -> Result<i32, RunError> {
    let full = load_integrals(config)?;
    let e_core = full.e_core;
    let ints = full.electronic();
    let (space, n) = prepare(config, &ints, e_core, record)?;
    let fci = reference(&ints, e_core, config.fci_root_count(), config, record)?;
    let (deflation, optimizer) = (config.deflation(), config.optimizer());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut states: Vec<StateSolution> = Vec::new();
    for k in 0..config.n_states {
        let init = StateInit {
            u: initial_orbitals(config, k, ints.m_spatial, n, &mut rng)?,
            theta: None,
        };
        let t = Instant::now();
        let s = solve_state_ssvqd(&space, &states, &init, &deflation, &optimizer)?;
        record.timing.insert(format!("state_{}_seconds", k + 1), t.elapsed().as_secs_f64());
        info!(
            "state {}: E = {:.8} after {} iterations (converged: {})",
            k + 1,
            s.energy,
            s.trace.len(),
            s.converged
        );
        if !s.converged {
            record.warnings.push(format!("state {} did not converge", k + 1));
        }
        states.push(s);
    }
    for s in &states {
        record.states.push(state_summary(config, e_core, s, s.trace.clone(), fci.as_ref())?);
    }
    let energies: Vec<f64> = states.iter().map(|s| s.energy).collect();
    record.weighted = Some(weighted(&energies, &config.weights()?, e_core, fci.as_ref())?);
    record.converged = states.iter().all(|s| s.converged);
    Ok(check_solutions(&states, record))
}

fn run_savqd(config: &RunConfig, record: &mut ResultRecord) -> Result<i32, RunError> {
    let full = load_integrals(config)?;
    let e_core = full.e_core;
    let ints = full.electronic();
    let (space, n) = prepare(config, &ints, e_core, record)?;
    let fci = reference(&ints, e_core, config.fci_root_count(), config, record)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let u0 = initial_orbitals(config, 0, ints.m_spatial, n, &mut rng)?;
    let weights = config.weights()?;
    let t = Instant::now();
    let sol = solve_savqd(&space, &u0, &weights, &config.deflation(), &config.optimizer())?;
    record.timing.insert("solve_seconds".into(), t.elapsed().as_secs_f64());
    if !sol.converged {
        record.warnings.push("state-averaged iteration did not converge".into());
    }
    for s in &sol.states {
        let mut prev = f64::NAN;
        let trace = sol
            .trace
            .iter()
            .map(|r| {
                let e = r.energies[s.index];
                let delta = if prev.is_nan() { f64::INFINITY } else { (e - prev).abs() };
                prev = e;
                IterationRecord {
                    iteration: r.iteration,
                    energy: e,
                    delta,
                    objective: r.weighted_energy,
                    overlaps: r.overlaps[s.index].clone(),
                    theta_evaluations: r.theta_evaluations,
                    orbital_steps: r.orbital_steps,
                }
            })
            .collect();
        record.states.push(state_summary(config, e_core, s, trace, fci.as_ref())?);
    }
    let energies: Vec<f64> = sol.states.iter().map(|s| s.energy).collect();
    record.weighted = Some(weighted(&energies, &weights, e_core, fci.as_ref())?);
    record.savqd_trace = sol.trace.clone();
    record.converged = sol.converged;
    Ok(check_solutions(&sol.states, record))
}

fn run_checks(command: Command, config: &RunConfig, record: &mut ResultRecord) -> Result<i32, RunError> {
    let t = Instant::now();
    record.checks = match command {
        Command::Gradcheck => checks::gradient_suites(config.seed, config.check_instances.unwrap_or(100))?,
        _ => checks::exterior_suites(config.seed, config.check_instances.unwrap_or(200))?,
    };
    record.timing.insert("checks_seconds".into(), t.elapsed().as_secs_f64());
    for c in &record.checks {
        info!(
            "{}: max error {:.3e} (tolerance {:.0e}) {}",
            c.name,
            c.max_error,
            c.tolerance,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    if record.checks.iter().all(|c| c.passed) {
        Ok(EXIT_OK)
    } else {
        record.warnings.push("at least one check failed".into());
        Ok(EXIT_INVARIANT)
    }
}
