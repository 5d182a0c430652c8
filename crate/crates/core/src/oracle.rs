//! Independent reference constructions used to validate the fast paths:
//! random problem instances, a Hamiltonian built from ladder operators,
//! a creation-operator expansion of `U(m)`, polar decomposition and finite
//! differences.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngCore};

use crate::fockspace::{apply_annihilator, apply_creator, FockVector};
use crate::hamio::MolecularIntegrals;
use crate::linalg::combinations;

fn normal<R: RngCore>(rng: &mut R) -> f64 {
    // Box–Muller; one sample per call keeps the stream easy to reason about.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_matrix<R: RngCore>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Random `m × n` matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<R: RngCore>(rng: &mut R, m: usize, n: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, m, n);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.columns(0, n).into_owned()
}

/// Random real integrals with the full permutational symmetry.
pub fn random_integrals<R: RngCore>(rng: &mut R, m: usize, n_electrons: usize, ms2: i64, scale: f64) -> MolecularIntegrals {
    let mut ints = MolecularIntegrals::zeros(m, n_electrons, ms2);
    for i in 0..m {
        for j in 0..=i {
            ints.set_h(i, j, scale * normal(rng));
        }
    }
    for i in 0..m {
        for j in 0..=i {
            for k in 0..m {
                for l in 0..=k {
                    if k * (k + 1) / 2 + l <= i * (i + 1) / 2 + j {
                        ints.set_eri(i, j, k, l, 0.5 * scale * normal(rng));
                    }
                }
            }
        }
    }
    ints
}

/// Normalised random state supported on one `(n_alpha, n_beta)` sector.
pub fn random_sector_state<R: RngCore>(rng: &mut R, n_orbitals: usize, n_alpha: usize, n_beta: usize) -> FockVector {
    let half = n_orbitals / 2;
    let mut v = FockVector::zeros(n_orbitals);
    for a in combinations(half, n_alpha) {
        for b in combinations(half, n_beta) {
            v.amps[(a | b << half) as usize] = normal(rng);
        }
    }
    v.normalized()
}

/// Normalised random state with exactly `k` particles (any spin split).
pub fn random_k_form<R: RngCore>(rng: &mut R, n_orbitals: usize, k: usize) -> FockVector {
    let mut v = FockVector::zeros(n_orbitals);
    for bits in combinations(n_orbitals, k) {
        v.amps[bits as usize] = normal(rng);
    }
    v.normalized()
}

/// `H ψ` with `H = Σ h_pq a_p† a_q + ½ Σ ⟨pq|rs⟩ a_p† a_q† a_s a_r + e_core`
/// over spin orbitals, built term by term from ladder operators.
pub fn ladder_hamiltonian_apply(ints: &MolecularIntegrals, psi: &FockVector) -> FockVector {
    let m = ints.m_spatial;
    let n = 2 * m;
    assert_eq!(psi.n_orbitals, n);
    let spatial = |p: usize| p % m;
    let spin = |p: usize| p / m;
    let mut out = psi.clone();
    out.scale(ints.e_core);
    for q in 0..n {
        let aq = apply_annihilator(q, psi).unwrap();
        for p in 0..n {
            if spin(p) != spin(q) {
                continue;
            }
            let h = ints.h[(spatial(p), spatial(q))];
            if h != 0.0 {
                out.axpy(h, &apply_creator(p, &aq).unwrap());
            }
        }
    }
    for r in 0..n {
        let ar = apply_annihilator(r, psi).unwrap();
        for s in 0..n {
            let asr = apply_annihilator(s, &ar).unwrap();
            for q in 0..n {
                if spin(q) != spin(s) {
                    continue;
                }
                let aqsr = apply_creator(q, &asr).unwrap();
                for p in 0..n {
                    if spin(p) != spin(r) {
                        continue;
                    }
                    // ⟨pq|rs⟩ = (pr|qs)
                    let g = ints.eri(spatial(p), spatial(r), spatial(q), spatial(s));
                    if g != 0.0 {
                        out.axpy(0.5 * g, &apply_creator(p, &aqsr).unwrap());
                    }
                }
            }
        }
    }
    out
}

/// Dense `2^N × 2^N` Fock-space Hamiltonian from [`ladder_hamiltonian_apply`].
pub fn dense_fock_hamiltonian(ints: &MolecularIntegrals) -> DMatrix<f64> {
    let n = 2 * ints.m_spatial;
    let dim = 1usize << n;
    let mut out = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = ladder_hamiltonian_apply(ints, &FockVector::basis_state(n, j as u64));
        for i in 0..dim {
            out[(i, j)] = col.amps[i];
        }
    }
    out
}

/// `U(m) v` expanded through transformed creators: each determinant
/// `a†_{i1} … a†_{ik} |0⟩` maps to `b†_{i1} … b†_{ik} |0⟩` with
/// `b†_i = Σ_j m_ji a†_j`.
pub fn creator_expansion_transform(m: &DMatrix<f64>, v: &FockVector) -> FockVector {
    let rows = m.nrows();
    let mut out = FockVector::zeros(rows);
    for (bits, amp) in v.support() {
        let mut w = FockVector::vacuum(rows);
        let orbs: Vec<usize> = (0..v.n_orbitals).filter(|i| bits >> i & 1 == 1).collect();
        for &i in orbs.iter().rev() {
            let mut next = FockVector::zeros(rows);
            for j in 0..rows {
                let c = m[(j, i)];
                if c != 0.0 {
                    next.axpy(c, &apply_creator(j, &w).unwrap());
                }
            }
            w = next;
        }
        out.axpy(amp, &w);
    }
    out
}

/// `a (aᵀa)^{-1/2}`
pub fn polar_factor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.transpose() * a);
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    a * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

/// Central differences of a scalar function of a matrix argument.
pub fn central_difference<F: FnMut(&DMatrix<f64>) -> f64>(mut f: F, x: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut y = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let x0 = x[(i, j)];
            y[(i, j)] = x0 + h;
            let fp = f(&y);
            y[(i, j)] = x0 - h;
            let fm = f(&y);
            y[(i, j)] = x0;
            g[(i, j)] = (fp - fm) / (2.0 * h);
        }
    }
    g
}

/// `max|a - b| / max(max|b|, floor)`
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).amax() / b.amax().max(floor)
}
