//! State-specific and state-averaged orbital-optimised deflation solvers.
//!
//! A two-step iteration first optimises the circuit parameters θ at fixed
//! orbitals (the deflated objective is evaluated exactly in the active sector)
//! and then the orbital block at fixed θ (classically, from measured RDMs).

use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_ansatz, build_uccsd, AnsatzCircuit, ThetaVector};
use crate::error::{Error, Result};
use crate::fci::{sorted_eigen, DeterminantBasis, SectorHamiltonian};
use crate::fockspace::{apply_exterior_transform, hf_reference, FockVector, LinearOrbitalMap};
use crate::hamio::MolecularIntegrals;
use crate::optim::ThetaOptimizer;
use crate::orbopt::{
    measure_rdms, overlap, overlap_gradient, projected_gd_step, OrbitalEnergy, PartialUnitary, RDMPair,
};

/// The active space shared by every state of a run.
#[derive(Debug, Clone)]
pub struct ActiveSpace<'a> {
    /// Integrals over all `m` spatial orbitals.
    pub ints: &'a MolecularIntegrals,
    pub n_spatial: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub circuit: AnsatzCircuit,
    pub reference: FockVector,
    /// Determinants of the active sector.
    pub basis: DeterminantBasis,
}

impl<'a> ActiveSpace<'a> {
    pub fn new(ints: &'a MolecularIntegrals, n_spin_orbitals: usize, reps: usize) -> Result<Self> {
        if n_spin_orbitals % 2 != 0 || n_spin_orbitals == 0 {
            return Err(Error::InvalidConfig(format!(
                "active space needs an even, nonzero spin-orbital count (got {n_spin_orbitals})"
            )));
        }
        let n = n_spin_orbitals / 2;
        if n > ints.m_spatial {
            return Err(Error::InvalidConfig(format!(
                "{n} active spatial orbitals exceed the {} available",
                ints.m_spatial
            )));
        }
        let (na, nb) = (ints.n_alpha(), ints.n_beta());
        Ok(Self {
            ints,
            n_spatial: n,
            n_alpha: na,
            n_beta: nb,
            circuit: build_uccsd(n_spin_orbitals, na, nb, reps)?,
            reference: hf_reference(n_spin_orbitals, na, nb)?,
            basis: DeterminantBasis::new(n_spin_orbitals, na, nb)?,
        })
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    /// Electronic energy `⟨ψ| H̃(u) |ψ⟩` via the RDMs.
    pub fn energy(&self, u: &PartialUnitary, psi: &FockVector) -> Result<f64> {
        let rdms = measure_rdms(psi);
        OrbitalEnergy::new(self.ints, &rdms)?.energy(&u.block)
    }

    /// Dense electronic Hamiltonian of the active sector in the basis `u`.
    fn sector_hamiltonian(&self, u: &PartialUnitary) -> Result<DMatrix<f64>> {
        let active = self.ints.rotated(&u.block).electronic();
        Ok(SectorHamiltonian::new(&active, &self.basis)?.to_dense())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflationConfig {
    /// `betas[j]` penalises overlap with lower state `j`; missing entries use
    /// `default_beta`.
    pub betas: Vec<f64>,
    pub default_beta: f64,
}

impl Default for DeflationConfig {
    fn default() -> Self {
        Self {
            betas: Vec::new(),
            default_beta: 15.0,
        }
    }
}

impl DeflationConfig {
    pub fn beta(&self, j: usize) -> f64 {
        self.betas.get(j).copied().unwrap_or(self.default_beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.default_beta > 0.0) || self.betas.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidConfig("penalty weights must be positive".into()));
        }
        Ok(())
    }
}

/// How θ is chosen at fixed orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSolver {
    /// Minimise over the ansatz parameters with a derivative-free method.
    Ansatz { optimizer: ThetaOptimizer },
    /// Replace the circuit by the exact minimiser of the deflated objective
    /// over the whole active sector.
    ExactSector,
}

impl Default for ThetaSolver {
    fn default() -> Self {
        ThetaSolver::Ansatz {
            optimizer: ThetaOptimizer::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub eta: f64,
    /// Projected-gradient steps between overlap-gradient refreshes.
    pub inner_steps: usize,
    /// Stop an orbital phase once one refresh cycle changes the objective by less.
    pub inner_tol: f64,
    pub max_inner_cycles: usize,
    pub theta: ThetaSolver,
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Descend on `E - Σ β O` instead of `E + Σ β O` in the orbital phase.
    pub reverse_overlap_gradient: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            inner_steps: 100,
            inner_tol: 1e-7,
            max_inner_cycles: 200,
            theta: ThetaSolver::default(),
            outer_tol: 1e-4,
            max_outer: 50,
            reverse_overlap_gradient: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if self.inner_steps == 0 {
            return Err(Error::InvalidConfig("inner step count must be at least 1".into()));
        }
        if !(self.outer_tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Electronic energy after the orbital phase, Hartree.
    pub energy: f64,
    pub delta: f64,
    /// Deflated objective after the orbital phase.
    pub objective: f64,
    /// `|⟨Ψ_j|U(u_jᵀu)|Ψ⟩|²` for each lower state.
    pub overlaps: Vec<f64>,
    pub theta_evaluations: usize,
    pub orbital_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSolution {
    pub index: usize,
    pub theta: ThetaVector,
    pub u: PartialUnitary,
    pub psi: FockVector,
    pub energy: f64,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
}

impl StateSolution {
    pub fn final_overlaps(&self) -> &[f64] {
        self.trace.last().map(|r| r.overlaps.as_slice()).unwrap_or(&[])
    }
}

/// Starting point of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateInit {
    pub u: PartialUnitary,
    pub theta: Option<ThetaVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SAWeights {
    pub w: Vec<f64>,
}

impl SAWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidConfig(format!("weights must be positive, got {w:?}")));
        }
        Ok(Self { w })
    }

    /// `K, K-1, …, 1`
    pub fn descending(k: usize) -> Self {
        Self {
            w: (1..=k).rev().map(|x| x as f64).collect(),
        }
    }
}

/// `Σ w_k E_k`
pub fn weighted_sum_report(energies: &[f64], weights: &SAWeights) -> Result<f64> {
    if energies.len() != weights.w.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} energies but {} weights",
            energies.len(),
            weights.w.len()
        )));
    }
    Ok(energies.iter().zip(&weights.w).map(|(e, w)| e * w).sum())
}

/// A lower state seen from the current orbitals.
struct Lower<'s> {
    u: &'s PartialUnitary,
    psi: &'s FockVector,
    beta: f64,
}

fn lowers<'s>(lower: &'s [StateSolution], deflation: &DeflationConfig) -> Vec<Lower<'s>> {
    lower
        .iter()
        .enumerate()
        .map(|(j, s)| Lower {
            u: &s.u,
            psi: &s.psi,
            beta: deflation.beta(j),
        })
        .collect()
}

fn overlaps_sq(lower: &[Lower], u: &PartialUnitary, psi: &FockVector) -> Result<Vec<f64>> {
    lower
        .iter()
        .map(|l| overlap(l.u, u, l.psi, psi).map(|o| o * o))
        .collect()
}

/// `F_k = E(θ, u) + Σ_j β_j |⟨Ψ_j|U(u_jᵀu)|Ψ(θ)⟩|²`
pub fn vqd_objective(
    space: &ActiveSpace,
    theta: &ThetaVector,
    u: &PartialUnitary,
    lower: &[StateSolution],
    deflation: &DeflationConfig,
) -> Result<f64> {
    let psi = apply_ansatz(&space.circuit, theta, &space.reference)?;
    let e = space.energy(u, &psi)?;
    let l = lowers(lower, deflation);
    let o = overlaps_sq(&l, u, &psi)?;
    Ok(e + l.iter().zip(o).map(|(l, o)| l.beta * o).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaOutcome {
    pub theta: ThetaVector,
    pub psi: FockVector,
    pub objective: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    pub history: Vec<f64>,
}

/// The deflated θ problem at fixed `u`, reduced to the active sector.
struct SectorProblem {
    h: DMatrix<f64>,
    penalties: Vec<(f64, Vec<f64>)>,
}

impl SectorProblem {
    fn new(space: &ActiveSpace, u: &PartialUnitary, lower: &[Lower]) -> Result<Self> {
        let h = space.sector_hamiltonian(u)?;
        let penalties = lower
            .iter()
            .map(|l| {
                // ⟨Ψ_j|U(u_jᵀu)|ψ⟩ = ⟨U(uᵀu_j)Ψ_j|ψ⟩
                let map = LinearOrbitalMap::new(u.spin_form().transpose() * l.u.spin_form());
                let phi = apply_exterior_transform(&map, l.psi)?;
                Ok((l.beta, space.basis.gather(&phi)?))
            })
            .collect::<Result<_>>()?;
        Ok(Self { h, penalties })
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut e = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.h[(i, j)] * x[j];
            }
            e += x[i] * row;
        }
        for (beta, phi) in &self.penalties {
            let o: f64 = phi.iter().zip(x).map(|(a, b)| a * b).sum();
            e += beta * o * o;
        }
        e
    }

    fn exact(&self) -> Vec<f64> {
        let mut m = self.h.clone();
        for (beta, phi) in &self.penalties {
            let p = nalgebra::DVector::from_column_slice(phi);
            m += &p * p.transpose() * *beta;
        }
        let (_, vecs) = sorted_eigen(&m);
        let mut x: Vec<f64> = vecs.column(0).iter().copied().collect();
        let imax = x
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if v.abs() > x[b].abs() + 1e-12 { i } else { b });
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }
}

fn optimize_theta_inner(
    space: &ActiveSpace,
    u: &PartialUnitary,
    lower: &[Lower],
    theta0: &ThetaVector,
    solver: &ThetaSolver,
) -> Result<ThetaOutcome> {
    let problem = SectorProblem::new(space, u, lower)?;
    match solver {
        ThetaSolver::ExactSector => {
            let x = problem.exact();
            let value = problem.value(&x);
            Ok(ThetaOutcome {
                theta: ThetaVector(Vec::new()),
                psi: space.basis.scatter(&x),
                objective: value,
                evaluations: 1,
                budget_exhausted: false,
                history: vec![value],
            })
        }
        ThetaSolver::Ansatz { optimizer } => {
            if theta0.len() != space.circuit.n_params() {
                return Err(Error::ShapeMismatch(format!(
                    "initial θ has {} entries, circuit has {}",
                    theta0.len(),
                    space.circuit.n_params()
                )));
            }
            let mut work = space.reference.clone();
            let f = |t: &[f64]| {
                work.amps.copy_from_slice(&space.reference.amps);
                for (i, &a) in t.iter().enumerate() {
                    space.circuit.apply_factor(i, a, &mut work);
                }
                let x: Vec<f64> = space.basis.dets.iter().map(|d| work.amps[d.0 as usize]).collect();
                problem.value(&x)
            };
            let out = optimizer.minimize(f, &theta0.0);
            let theta = ThetaVector(out.x);
            let psi = apply_ansatz(&space.circuit, &theta, &space.reference)?;
            Ok(ThetaOutcome {
                theta,
                psi,
                objective: out.value,
                evaluations: out.evaluations,
                budget_exhausted: out.budget_exhausted,
                history: out.history,
            })
        }
    }
}

/// Minimise the deflated objective over θ with `u` frozen, warm-started from `theta0`.
pub fn optimize_theta(
    space: &ActiveSpace,
    u: &PartialUnitary,
    lower: &[StateSolution],
    theta0: &ThetaVector,
    deflation: &DeflationConfig,
    config: &OptimizerConfig,
) -> Result<ThetaOutcome> {
    optimize_theta_inner(space, u, &lowers(lower, deflation), theta0, &config.theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalOutcome {
    pub u: PartialUnitary,
    /// Deflated objective at the returned `u`.
    pub objective: f64,
    pub steps: usize,
    pub cycles: usize,
    /// Energy before every step, followed by the final energy.
    pub energies: Vec<f64>,
    /// Set when an orthonormalisation failed and the phase stopped early.
    pub warning: Option<String>,
}

fn optimize_orbitals_inner(
    space: &ActiveSpace,
    psi: &FockVector,
    u_init: &PartialUnitary,
    lower: &[Lower],
    config: &OptimizerConfig,
) -> Result<OrbitalOutcome> {
    let rdms = measure_rdms(psi);
    let energy = OrbitalEnergy::new(space.ints, &rdms)?;
    let penalty = |v: &PartialUnitary| -> Result<f64> {
        Ok(overlaps_sq(lower, v, psi)?
            .iter()
            .zip(lower)
            .map(|(o, l)| l.beta * o)
            .sum())
    };
    let sign = if config.reverse_overlap_gradient { -1.0 } else { 1.0 };
    let mut v = u_init.clone();
    let mut f_prev = energy.energy(&v.block)? + penalty(&v)?;
    let mut energies = Vec::new();
    let mut steps = 0;
    let mut cycles = 0;
    let mut warning = None;
    'cycles: for _ in 0..config.max_inner_cycles {
        cycles += 1;
        let mut frozen = DMatrix::zeros(v.m_spatial(), v.n_spatial());
        for l in lower {
            frozen += overlap_gradient(l.u, &v, l.psi, psi)? * (sign * l.beta);
        }
        let mut f_cur = energy.energy(&v.block)? + sign * penalty(&v)?;
        for s in 0..config.inner_steps {
            let (e, g) = energy.energy_and_gradient(&v.block)?;
            let next = match projected_gd_step(&v, &(g + &frozen), config.eta) {
                Ok(next) => next,
                Err(err) => {
                    warn!("orbital step failed ({err}); keeping the last feasible orbitals");
                    warning = Some(err.to_string());
                    break 'cycles;
                }
            };
            let f_next = energy.energy(&next.block)? + sign * penalty(&next)?;
            // The frozen overlap gradients have gone stale: refresh them early.
            if s > 0 && f_next > f_cur {
                break;
            }
            energies.push(e);
            v = next;
            f_cur = f_next;
            steps += 1;
        }
        let f = energy.energy(&v.block)? + penalty(&v)?;
        let change = (f - f_prev).abs();
        f_prev = f;
        if change < config.inner_tol {
            break;
        }
    }
    energies.push(energy.energy(&v.block)?);
    Ok(OrbitalOutcome {
        objective: energy.energy(&v.block)? + penalty(&v)?,
        u: v,
        steps,
        cycles,
        energies,
        warning,
    })
}

/// Projected gradient descent on the orbitals with θ frozen. Overlap
/// gradients are refreshed every `inner_steps` steps and held fixed between,
/// except that a cycle ends early once a step would raise the objective.
pub fn optimize_orbitals(
    space: &ActiveSpace,
    psi: &FockVector,
    u_init: &PartialUnitary,
    lower: &[StateSolution],
    deflation: &DeflationConfig,
    config: &OptimizerConfig,
) -> Result<OrbitalOutcome> {
    optimize_orbitals_inner(space, psi, u_init, &lowers(lower, deflation), config)
}

fn check_init(space: &ActiveSpace, u: &PartialUnitary) -> Result<()> {
    if u.m_spatial() != space.ints.m_spatial || u.n_spatial() != space.n_spatial {
        return Err(Error::ShapeMismatch(format!(
            "initial orbitals are {}x{}, expected {}x{}",
            u.m_spatial(),
            u.n_spatial(),
            space.ints.m_spatial,
            space.n_spatial
        )));
    }
    Ok(())
}

fn initial_state(space: &ActiveSpace, theta: &ThetaVector, solver: &ThetaSolver) -> Result<FockVector> {
    match solver {
        ThetaSolver::ExactSector => Ok(space.reference.clone()),
        ThetaSolver::Ansatz { .. } => apply_ansatz(&space.circuit, theta, &space.reference),
    }
}

/// Solve state `k` (0-based, `lower.len() == k`) by alternating θ and orbital phases.
pub fn solve_state_ssvqd(
    space: &ActiveSpace,
    lower: &[StateSolution],
    init: &StateInit,
    deflation: &DeflationConfig,
    config: &OptimizerConfig,
) -> Result<StateSolution> {
    config.validate()?;
    deflation.validate()?;
    check_init(space, &init.u)?;
    let k = lower.len();
    let l = lowers(lower, deflation);
    let mut theta = match (&init.theta, &config.theta) {
        (_, ThetaSolver::ExactSector) => ThetaVector(Vec::new()),
        (Some(t), _) => t.clone(),
        (None, _) => space.circuit.zero_theta(),
    };
    let mut u = init.u.clone();
    let mut psi = initial_state(space, &theta, &config.theta)?;
    let mut e_prev = space.energy(&u, &psi)?;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_outer {
        let t = optimize_theta_inner(space, &u, &l, &theta, &config.theta)?;
        if t.budget_exhausted {
            debug!("state {k}: θ budget exhausted at iteration {iteration}");
        }
        theta = t.theta;
        psi = t.psi;
        let orb = optimize_orbitals_inner(space, &psi, &u, &l, config)?;
        u = orb.u;
        let energy = space.energy(&u, &psi)?;
        let overlaps = overlaps_sq(&l, &u, &psi)?;
        let delta = (energy - e_prev).abs();
        debug!("state {k} iteration {iteration}: E = {energy:.10} |dE| = {delta:.3e}");
        trace.push(IterationRecord {
            iteration,
            energy,
            delta,
            objective: orb.objective,
            overlaps,
            theta_evaluations: t.evaluations,
            orbital_steps: orb.steps,
        });
        e_prev = energy;
        if delta < config.outer_tol {
            converged = true;
            break;
        }
    }
    for (j, s) in lower.iter().enumerate() {
        if deflation.beta(j) <= e_prev - s.energy {
            warn!(
                "penalty {} for state {j} does not exceed the gap {:.4} to state {k}",
                deflation.beta(j),
                e_prev - s.energy
            );
        }
    }
    Ok(StateSolution {
        index: k,
        theta,
        u,
        psi,
        energy: e_prev,
        trace,
        converged,
    })
}

/// Solve the lowest `inits.len()` states one after another.
pub fn solve_ssvqd(
    space: &ActiveSpace,
    inits: &[StateInit],
    deflation: &DeflationConfig,
    config: &OptimizerConfig,
) -> Result<Vec<StateSolution>> {
    let mut out: Vec<StateSolution> = Vec::with_capacity(inits.len());
    for init in inits {
        let s = solve_state_ssvqd(space, &out, init, deflation, config)?;
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaIterationRecord {
    pub iteration: usize,
    pub weighted_energy: f64,
    pub delta: f64,
    pub energies: Vec<f64>,
    /// `overlaps[s][j]`: squared overlap of state `s` with state `j < s`.
    pub overlaps: Vec<Vec<f64>>,
    pub theta_evaluations: usize,
    pub orbital_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavqdSolution {
    pub states: Vec<StateSolution>,
    pub u: PartialUnitary,
    pub weighted_energy: f64,
    pub trace: Vec<SaIterationRecord>,
    pub converged: bool,
}

/// State-averaged scheme: VQD sweep in one shared basis, then projected
/// gradient descent on `Σ w_k E_k(u)` from the measured RDMs.
pub fn solve_savqd(
    space: &ActiveSpace,
    u_init: &PartialUnitary,
    weights: &SAWeights,
    deflation: &DeflationConfig,
    config: &OptimizerConfig,
) -> Result<SavqdSolution> {
    config.validate()?;
    deflation.validate()?;
    check_init(space, u_init)?;
    let k_states = weights.w.len();
    let mut u = u_init.clone();
    let mut thetas: Vec<ThetaVector> = vec![
        match config.theta {
            ThetaSolver::ExactSector => ThetaVector(Vec::new()),
            ThetaSolver::Ansatz { .. } => space.circuit.zero_theta(),
        };
        k_states
    ];
    let mut psis: Vec<FockVector> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut weighted = f64::NAN;
    let mut energies = vec![f64::NAN; k_states];
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_outer {
        psis.clear();
        let mut evaluations = 0;
        for s in 0..k_states {
            let l: Vec<Lower> = psis
                .iter()
                .enumerate()
                .map(|(j, p)| Lower {
                    u: &u,
                    psi: p,
                    beta: deflation.beta(j),
                })
                .collect();
            let t = optimize_theta_inner(space, &u, &l, &thetas[s], &config.theta)?;
            evaluations += t.evaluations;
            thetas[s] = t.theta;
            psis.push(t.psi);
        }
        let rdms: Vec<RDMPair> = psis.iter().map(measure_rdms).collect();
        let parts: Vec<(f64, &RDMPair)> = weights.w.iter().copied().zip(rdms.iter()).collect();
        let objective = OrbitalEnergy::weighted(space.ints, &parts)?;
        let mut f_prev = objective.energy(&u.block)?;
        let mut steps = 0;
        'cycles: for _ in 0..config.max_inner_cycles {
            for _ in 0..config.inner_steps {
                let g = objective.gradient(&u.block)?;
                match projected_gd_step(&u, &g, config.eta) {
                    Ok(next) => u = next,
                    Err(err) => {
                        warn!("orbital step failed ({err}); keeping the last feasible orbitals");
                        break 'cycles;
                    }
                }
                steps += 1;
            }
            let f = objective.energy(&u.block)?;
            let change = (f - f_prev).abs();
            f_prev = f;
            if change < config.inner_tol {
                break;
            }
        }
        for (s, r) in rdms.iter().enumerate() {
            energies[s] = OrbitalEnergy::new(space.ints, r)?.energy(&u.block)?;
        }
        weighted = weighted_sum_report(&energies, weights)?;
        let delta = prev.map_or(f64::INFINITY, |p| (weighted - p).abs());
        debug!("SA iteration {iteration}: weighted E = {weighted:.10} |dE| = {delta:.3e}");
        trace.push(SaIterationRecord {
            iteration,
            weighted_energy: weighted,
            delta,
            energies: energies.clone(),
            overlaps: psis
                .iter()
                .enumerate()
                .map(|(s, p)| psis[..s].iter().map(|q| q.dot(p).powi(2)).collect())
                .collect(),
            theta_evaluations: evaluations,
            orbital_steps: steps,
        });
        if delta < config.outer_tol {
            converged = true;
            break;
        }
        prev = Some(weighted);
    }

    let mut states = Vec::with_capacity(psis.len());
    for (s, psi) in psis.iter().enumerate() {
        let overlaps = trace.last().map_or_else(Vec::new, |r| r.overlaps[s].clone());
        let record = trace.last().map(|r: &SaIterationRecord| IterationRecord {
            iteration: r.iteration,
            energy: energies[s],
            delta: r.delta,
            objective: r.weighted_energy,
            overlaps,
            theta_evaluations: r.theta_evaluations,
            orbital_steps: r.orbital_steps,
        });
        states.push(StateSolution {
            index: s,
            theta: thetas[s].clone(),
            u: u.clone(),
            psi: psi.clone(),
            energy: energies[s],
            trace: record.into_iter().collect(),
            converged,
        });
    }
    Ok(SavqdSolution {
        states,
        u,
        weighted_energy: weighted,
        trace,
        converged,
    })
}
