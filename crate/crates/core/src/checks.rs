//! Randomised verification suites: analytic gradients against finite
//! differences, and exterior-algebra identities against brute-force
//! constructions. Each suite is deterministic given its seed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fockspace::{
    apply_annihilator, apply_creator, apply_exterior_transform, transition_matrix, FockVector, LinearOrbitalMap,
};
use crate::linalg::combinations;
use crate::oracle::{
    central_difference, creator_expansion_transform, random_integrals, random_k_form, random_matrix,
    random_orthonormal, random_sector_state, relative_error,
};
use crate::orbopt::{measure_rdms, overlap, overlap_gradient, spin_block, OrbitalEnergy, PartialUnitary};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckReport {
    fn new(name: &str, instances: usize, max_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            instances,
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error < tolerance,
        }
    }
}

/// Rotated-energy gradient vs central differences on `m = 6`, `n = 3` instances.
pub fn energy_gradient_suite(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (6, 3);
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let (na, nb) = [(1, 1), (2, 1), (2, 2)][t % 3];
        let ints = random_integrals(&mut rng, m, na + nb, na as i64 - nb as i64, 0.5);
        let psi = random_sector_state(&mut rng, 2 * n, na, nb);
        let b = random_orthonormal(&mut rng, m, n);
        let energy = OrbitalEnergy::new(&ints, &measure_rdms(&psi))?;
        let g = energy.gradient(&b)?;
        let fd = central_difference(|x| energy.energy(x).unwrap(), &b, FD_STEP);
        worst = worst.max(relative_error(&g, &fd, 1e-8));
    }
    Ok(CheckReport::new("rotated energy gradient", instances, worst, FD_TOL))
}

/// Gradient of `|⟨Ψ_j|U(u_jᵀu_k)|Ψ_k⟩|²` vs central differences.
pub fn overlap_gradient_suite(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (6, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let uj = PartialUnitary::new(random_orthonormal(&mut rng, m, n))?;
        let uk = PartialUnitary::new(random_orthonormal(&mut rng, m, n))?;
        let pj = random_sector_state(&mut rng, 2 * n, 1, 1);
        let pk = random_sector_state(&mut rng, 2 * n, 1, 1);
        let g = overlap_gradient(&uj, &uk, &pj, &pk)?;
        let fd = central_difference(
            |x| {
                let u = PartialUnitary { block: x.clone() };
                overlap(&uj, &u, &pj, &pk).unwrap().powi(2)
            },
            &uk.block,
            FD_STEP,
        );
        worst = worst.max(relative_error(&g, &fd, 1e-8));
    }
    Ok(CheckReport::new("overlap gradient", instances, worst, FD_TOL))
}

/// `d⟨w|U(m)|v⟩ = Σ dm_ij ⟨w|a_i† U(m) a_j|v⟩` along random directions.
pub fn derivative_identity_suite(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let cols = 3 + t % 3;
        let rows = cols + t % 2;
        let k = 1 + t % cols.min(3);
        let m = random_matrix(&mut rng, rows, cols) * 0.7;
        let dm = random_matrix(&mut rng, rows, cols);
        let v = random_k_form(&mut rng, cols, k);
        let w = random_k_form(&mut rng, rows, k);
        let tm = transition_matrix(&w, &LinearOrbitalMap::new(m.clone()), &v)?;
        let analytic = dm.component_mul(&tm).sum();
        let value = |x: &DMatrix<f64>| w.dot(&apply_exterior_transform(&LinearOrbitalMap::new(x.clone()), &v).unwrap());
        let fd = (value(&(&m + &dm * FD_STEP)) - value(&(&m - &dm * FD_STEP))) / (2.0 * FD_STEP);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-8));
    }
    Ok(CheckReport::new("operator derivative identity", instances, worst, FD_TOL))
}

/// Canonical anticommutation relations on every basis state for `N ≤ max_n`.
pub fn anticommutation_suite(max_n: usize) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=max_n {
        for bits in 0..1u64 << n {
            let v = FockVector::basis_state(n, bits);
            for i in 0..n {
                for j in 0..n {
                    let mut ac = apply_annihilator(i, &apply_creator(j, &v)?)?;
                    ac.axpy(1.0, &apply_creator(j, &apply_annihilator(i, &v)?)?);
                    if i == j {
                        ac.axpy(-1.0, &v);
                    }
                    let mut aa = apply_annihilator(i, &apply_annihilator(j, &v)?)?;
                    aa.axpy(1.0, &apply_annihilator(j, &apply_annihilator(i, &v)?)?);
                    let mut cc = apply_creator(i, &apply_creator(j, &v)?)?;
                    cc.axpy(1.0, &apply_creator(j, &apply_creator(i, &v)?)?);
                    for x in [&ac, &aa, &cc] {
                        worst = worst.max(x.amps.iter().fold(0.0, |a, b| a.max(b.abs())));
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(CheckReport::new("canonical anticommutation", cases, worst, 1e-15))
}

/// `U(A) U(B) = U(AB)` on random states over all particle numbers.
pub fn functoriality_suite(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let n = 2 + t % 5;
        let a = random_matrix(&mut rng, n, n);
        let b = random_matrix(&mut rng, n, n);
        let mut v = FockVector::zeros(n);
        for x in v.amps.iter_mut() {
            *x = rng.random::<f64>() - 0.5;
        }
        let lhs = apply_exterior_transform(
            &LinearOrbitalMap::new(a.clone()),
            &apply_exterior_transform(&LinearOrbitalMap::new(b.clone()), &v)?,
        )?;
        let rhs = apply_exterior_transform(&LinearOrbitalMap::new(&a * &b), &v)?;
        let scale = rhs.amps.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        let err = lhs.amps.iter().zip(&rhs.amps).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
        worst = worst.max(err / scale);
    }
    Ok(CheckReport::new("exterior functoriality", instances, worst, 1e-12))
}

/// Minor-determinant matrix elements vs the transformed-creator expansion,
/// for every determinant with `k ≤ 3` particles.
pub fn minor_determinant_suite(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let n = 1 + t % 6;
        let m = random_matrix(&mut rng, n, n);
        let map = LinearOrbitalMap::new(m.clone());
        for k in 0..=n.min(3) {
            for bits in combinations(n, k) {
                let v = FockVector::basis_state(n, bits);
                let fast = apply_exterior_transform(&map, &v)?;
                let slow = creator_expansion_transform(&m, &v);
                let scale = slow.amps.iter().fold(1.0f64, |s, x| s.max(x.abs()));
                let err = fast.amps.iter().zip(&slow.amps).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
                worst = worst.max(err / scale);
            }
        }
    }
    Ok(CheckReport::new("minor determinant elements", instances, worst, 1e-12))
}

/// Active-space overlap vs the inner product of both states embedded into
/// the full spin-orbital space.
pub fn embedding_suite(seed: u64, instances: usize) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (6, 3);
    let mut worst: f64 = 0.0;
    for t in 0..instances {
        let (na, nb) = [(1, 1), (2, 1), (1, 2), (2, 2)][t % 4];
        let uj = PartialUnitary::new(random_orthonormal(&mut rng, m, n))?;
        let uk = PartialUnitary::new(random_orthonormal(&mut rng, m, n))?;
        let pj = random_sector_state(&mut rng, 2 * n, na, nb);
        let pk = random_sector_state(&mut rng, 2 * n, na, nb);
        let active = overlap(&uj, &uk, &pj, &pk)?;
        let ej = apply_exterior_transform(&LinearOrbitalMap::new(spin_block(&uj.block)), &pj)?;
        let ek = apply_exterior_transform(&LinearOrbitalMap::new(spin_block(&uk.block)), &pk)?;
        worst = worst.max((active - ej.dot(&ek)).abs());
    }
    Ok(CheckReport::new("overlap embedding", instances, worst, 1e-12))
}

/// Every gradient suite, in a fixed order.
pub fn gradient_suites(seed: u64, instances: usize) -> Result<Vec<CheckReport>> {
    Ok(vec![
        energy_gradient_suite(seed, instances)?,
        overlap_gradient_suite(seed.wrapping_add(1), instances)?,
        derivative_identity_suite(seed.wrapping_add(2), instances)?,
    ])
}

/// Every exterior-algebra suite, in a fixed order.
pub fn exterior_suites(seed: u64, instances: usize) -> Result<Vec<CheckReport>> {
    Ok(vec![
        anticommutation_suite(6)?,
        functoriality_suite(seed, instances)?,
        minor_determinant_suite(seed.wrapping_add(1), instances)?,
        embedding_suite(seed.wrapping_add(2), 50)?,
    ])
}
