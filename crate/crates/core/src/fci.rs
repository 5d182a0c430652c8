//! Sector-restricted full configuration interaction.
//!
//! Determinants of a fixed `(n_alpha, n_beta)` sector are factored into α and
//! β occupation strings. A determinant's bit mask is `alpha | beta << m`, so
//! sorting by mask orders β strings as the major index: determinant
//! `ib * n_alpha_strings + ia`. The Hamiltonian is applied in the spin-free
//! form `H = Σ k_pq E_pq + ½ Σ (pq|rs) E_pq E_rs` with
//! `k_pq = h_pq - ½ Σ_r (pr|rq)`, which reproduces the Slater–Condon matrix
//! elements with the same ascending-order sign convention as `fockspace`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{FockVector, OccupationIndex};
use crate::hamio::MolecularIntegrals;
use crate::linalg::{binomial, bit_indices, combinations, minor_det};
use crate::orbopt::PartialUnitary;
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantBasis {
    pub n_spin_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub alpha_strings: Vec<u64>,
    pub beta_strings: Vec<u64>,
    pub dets: Vec<OccupationIndex>,
}

impl DeterminantBasis {
    pub fn new(n_spin_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        if n_spin_orbitals % 2 != 0 {
            return Err(Error::InfeasibleSector(format!(
                "odd spin-orbital count {n_spin_orbitals}"
            )));
        }
        let m = n_spin_orbitals / 2;
        if n_alpha > m || n_beta > m || m > 32 {
            return Err(Error::InfeasibleSector(format!(
                "({n_alpha}, {n_beta}) electrons in {m} spatial orbitals"
            )));
        }
        let alpha_strings = combinations(m, n_alpha);
        let beta_strings = combinations(m, n_beta);
        let mut dets = Vec::with_capacity(alpha_strings.len() * beta_strings.len());
        for &b in &beta_strings {
            for &a in &alpha_strings {
                dets.push(OccupationIndex(a | b << m));
            }
        }
        Ok(Self {
            n_spin_orbitals,
            n_alpha,
            n_beta,
            alpha_strings,
            beta_strings,
            dets,
        })
    }

    pub fn m_spatial(&self) -> usize {
        self.n_spin_orbitals / 2
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn expected_len(&self) -> usize {
        binomial(self.m_spatial(), self.n_alpha) * binomial(self.m_spatial(), self.n_beta)
    }

    /// Position of a determinant in the basis.
    pub fn position(&self, det: u64) -> Option<usize> {
        let m = self.m_spatial();
        let mask = (1u64 << m) - 1;
        let ia = self.alpha_strings.binary_search(&(det & mask)).ok()?;
        let ib = self.beta_strings.binary_search(&(det >> m)).ok()?;
        Some(ib * self.alpha_strings.len() + ia)
    }

    /// Restrict a dense Fock vector to this sector's amplitudes.
    pub fn gather(&self, v: &FockVector) -> Result<Vec<f64>> {
        if v.n_orbitals != self.n_spin_orbitals {
            return Err(Error::ShapeMismatch(format!(
                "vector over {} orbitals, basis over {}",
                v.n_orbitals, self.n_spin_orbitals
            )));
        }
        Ok(self.dets.iter().map(|d| v.amps[d.0 as usize]).collect())
    }

    /// Expand sector amplitudes into a dense Fock vector.
    pub fn scatter(&self, x: &[f64]) -> FockVector {
        let mut v = FockVector::zeros(self.n_spin_orbitals);
        for (d, a) in self.dets.iter().zip(x) {
            v.amps[d.0 as usize] = *a;
        }
        v
    }
}

pub fn build_basis(n_spin_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<DeterminantBasis> {
    DeterminantBasis::new(n_spin_orbitals, n_alpha, n_beta)
}

/// `E_pq |I⟩ = sign |target⟩` for one spin string.
#[derive(Debug, Clone, Copy)]
struct StringExcitation {
    target: u32,
    p: u16,
    q: u16,
    sign: f64,
}

fn string_excitations(strings: &[u64], m: usize) -> Vec<Vec<StringExcitation>> {
    strings
        .iter()
        .map(|&s| {
            let mut out = Vec::new();
            for q in bit_indices(s) {
                let removed = s & !(1u64 << q);
                let sign_q = if (s & ((1u64 << q) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                for p in 0..m {
                    if removed >> p & 1 == 1 {
                        continue;
                    }
                    let sign_p =
                        if (removed & ((1u64 << p) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    let t = removed | 1u64 << p;
                    let target = strings.binary_search(&t).expect("string in sector") as u32;
                    out.push(StringExcitation {
                        target,
                        p: p as u16,
                        q: q as u16,
                        sign: sign_p * sign_q,
                    });
                }
            }
            out
        })
        .collect()
}

/// Sparse row-compressed matrix over one spin's strings.
#[derive(Debug, Clone)]
struct StringOperator {
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// The sector Hamiltonian, ready for repeated matrix-vector products.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian<'a> {
    ints: &'a MolecularIntegrals,
    basis: &'a DeterminantBasis,
    exc_alpha: Vec<Vec<StringExcitation>>,
    exc_beta: Vec<Vec<StringExcitation>>,
    same_alpha: StringOperator,
    same_beta: StringOperator,
    diagonal: Vec<f64>,
}

impl<'a> SectorHamiltonian<'a> {
    pub fn new(ints: &'a MolecularIntegrals, basis: &'a DeterminantBasis) -> Result<Self> {
        Self::with_execution(ints, basis, Execution::default())
    }

    pub fn with_execution(
        ints: &'a MolecularIntegrals,
        basis: &'a DeterminantBasis,
        exec: Execution,
    ) -> Result<Self> {
        let m = ints.m_spatial;
        if basis.m_spatial() != m {
            return Err(Error::ShapeMismatch(format!(
                "integrals have {m} spatial orbitals, basis has {}",
                basis.m_spatial()
            )));
        }
        let mut k_eff = ints.h.clone();
        for p in 0..m {
            for q in 0..m {
                let mut acc = 0.0;
                for r in 0..m {
                    acc += ints.eri(p, r, r, q);
                }
                k_eff[(p, q)] -= 0.5 * acc;
            }
        }
        let exc_alpha = string_excitations(&basis.alpha_strings, m);
        let exc_beta = string_excitations(&basis.beta_strings, m);
        let same_alpha = same_spin_operator(exec, ints, &k_eff, &exc_alpha);
        let same_beta = same_spin_operator(exec, ints, &k_eff, &exc_beta);
        let diagonal = basis
            .dets
            .iter()
            .map(|d| determinant_energy(ints, d.0))
            .collect();
        Ok(Self {
            ints,
            basis,
            exc_alpha,
            exc_beta,
            same_alpha,
            same_beta,
            diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_with(Execution::default(), x, y)
    }

    /// `y = H x`, including the constant `e_core` shift.
    pub fn apply_with(&self, exec: Execution, x: &[f64], y: &mut [f64]) {
        let na = self.basis.alpha_strings.len();
        let m = self.ints.m_spatial;
        let mm = m * m;
        let v = &self.ints.v;
        let e_core = self.ints.e_core;
        par::for_each_chunk_mut(exec, y, na, |jb, row| {
            // constant + same-spin α: row(jb) = Hα · x(jb)
            let xrow = &x[jb * na..(jb + 1) * na];
            for (ja, out) in row.iter_mut().enumerate() {
                let mut acc = e_core * xrow[ja];
                let op = &self.same_alpha;
                for e in op.row_start[ja]..op.row_start[ja + 1] {
                    acc += op.vals[e] * xrow[op.cols[e] as usize];
                }
                *out = acc;
            }
            // same-spin β: row(jb) += Σ_L Hβ[jb, L] x(L)
            let op = &self.same_beta;
            for e in op.row_start[jb]..op.row_start[jb + 1] {
                let w = op.vals[e];
                let src = &x[op.cols[e] as usize * na..(op.cols[e] as usize + 1) * na];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
            // opposite-spin: Σ (ab|cd) ⟨Jα|E_ba|Kα⟩⟨Jβ|E_dc|Kβ⟩ x(Kα, Kβ)
            for eb in &self.exc_beta[jb] {
                let src = &x[eb.target as usize * na..(eb.target as usize + 1) * na];
                let cd = eb.p as usize * m + eb.q as usize;
                let w = &v[cd * mm..(cd + 1) * mm];
                for (ja, out) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for ea in &self.exc_alpha[ja] {
                        acc += ea.sign * w[ea.p as usize * m + ea.q as usize] * src[ea.target as usize];
                    }
                    *out += eb.sign * acc;
                }
            }
        });
    }

    /// Dense matrix assembled column by column from [`apply`](Self::apply).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_with(Execution::Sequential, &e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

fn same_spin_operator(
    exec: Execution,
    ints: &MolecularIntegrals,
    k_eff: &DMatrix<f64>,
    exc: &[Vec<StringExcitation>],
) -> StringOperator {
    let n = exc.len();
    let rows = par::map_range(exec, n, |j| {
        let mut dense = vec![0.0; n];
        for e1 in &exc[j] {
            let (a, b) = (e1.p as usize, e1.q as usize);
            dense[e1.target as usize] += k_eff[(a, b)] * e1.sign;
            for e2 in &exc[e1.target as usize] {
                dense[e2.target as usize] +=
                    0.5 * ints.eri(a, b, e2.p as usize, e2.q as usize) * e1.sign * e2.sign;
            }
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|(_, x)| *x != 0.0)
            .map(|(c, x)| (c as u32, x))
            .collect::<Vec<_>>()
    });
    let mut row_start = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_start.push(0);
    for r in rows {
        for (c, x) in r {
            cols.push(c);
            vals.push(x);
        }
        row_start.push(cols.len());
    }
    StringOperator {
        row_start,
        cols,
        vals,
    }
}

/// Diagonal Slater–Condon element `⟨D|H|D⟩`, including `e_core`.
pub fn determinant_energy(ints: &MolecularIntegrals, det: u64) -> f64 {
    let m = ints.m_spatial;
    let mask = (1u64 << m) - 1;
    let alpha = bit_indices(det & mask);
    let beta = bit_indices(det >> m);
    let mut e = ints.e_core;
    for &i in alpha.iter().chain(&beta) {
        e += ints.h[(i, i)];
    }
    for occ in [&alpha, &beta] {
        for &i in occ.iter() {
            for &j in occ.iter() {
                e += 0.5 * (ints.eri(i, i, j, j) - ints.eri(i, j, j, i));
            }
        }
    }
    for &i in &alpha {
        for &j in &beta {
            e += ints.eri(i, i, j, j);
        }
    }
    e
}

/// `y = H x` over the determinant basis.
pub fn hamiltonian_matvec(ints: &MolecularIntegrals, basis: &DeterminantBasis, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != basis.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector length {} != basis size {}",
            x.len(),
            basis.len()
        )));
    }
    let ham = SectorHamiltonian::new(ints, basis)?;
    let mut y = vec![0.0; x.len()];
    ham.apply(x, &mut y);
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending eigenvalues, Hartree (including whatever `e_core` the
    /// integrals carried).
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DavidsonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Subspace is collapsed once it exceeds `restart_factor * k` vectors.
    pub restart_factor: usize,
    /// Energies closer than this are treated as one degenerate cluster when
    /// canonicalising the returned vectors.
    pub degeneracy_tol: f64,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 500,
            restart_factor: 8,
            degeneracy_tol: 1e-7,
        }
    }
}

/// The `k` lowest eigenpairs of the sector Hamiltonian.
pub fn lowest_eigenpairs(
    ints: &MolecularIntegrals,
    basis: &DeterminantBasis,
    k: usize,
    tol: f64,
) -> Result<EigenResult> {
    let ham = SectorHamiltonian::new(ints, basis)?;
    let opts = DavidsonOptions {
        tol,
        ..DavidsonOptions::default()
    };
    davidson(|x, y| ham.apply(x, y), ham.diagonal(), k, &opts)
}

/// Block Davidson iteration with diagonal preconditioning for the `k` lowest
/// eigenpairs of the symmetric operator `apply`.
///
/// Start vectors are unit vectors on the lowest-diagonal entries (ties by
/// index) with a small fixed pseudo-random admixture, so that symmetry blocks
/// not touched by those determinants are still seeded.
pub fn davidson<F>(apply: F, diag: &[f64], k: usize, opts: &DavidsonOptions) -> Result<EigenResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = diag.len();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "requested {k} eigenpairs of a {n}-dimensional operator"
        )));
    }
    let max_sub = (opts.restart_factor * k).max(k + 2).min(n);
    let n_guess = (2 * k).min(n).min(max_sub);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut pending: Vec<Vec<f64>> = Vec::new();
    for &i in order.iter().take(n_guess) {
        let mut v: Vec<f64> = (0..n).map(|_| 1e-4 * (rng.random::<f64>() - 0.5)).collect();
        v[i] += 1.0;
        pending.push(v);
    }

    let mut iterations = 0;
    let mut last_residuals = vec![f64::INFINITY; k];
    loop {
        for mut v in pending.drain(..) {
            if orthonormalize_against(&mut v, &basis) {
                let mut av = vec![0.0; n];
                apply(&v, &mut av);
                basis.push(v);
                images.push(av);
            }
        }
        let dim = basis.len();
        let mut sub = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let x = dot(&basis[i], &images[j]);
                sub[(i, j)] = x;
                sub[(j, i)] = x;
            }
        }
        let (vals, vecs) = sorted_eigen(&sub);
        let nk = k.min(dim);

        let mut ritz = Vec::with_capacity(nk);
        let mut residuals = Vec::with_capacity(nk);
        let mut norms = Vec::with_capacity(nk);
        for r in 0..nk {
            let y = vecs.column(r);
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for (c, (b, ab)) in basis.iter().zip(&images).enumerate() {
                let w = y[c];
                for t in 0..n {
                    x[t] += w * b[t];
                    ax[t] += w * ab[t];
                }
            }
            let res: Vec<f64> = ax.iter().zip(&x).map(|(a, xx)| a - vals[r] * xx).collect();
            norms.push(dot(&res, &res).sqrt());
            residuals.push(res);
            ritz.push(x);
        }
        last_residuals = norms.clone();
        iterations += 1;

        if nk == k && norms.iter().all(|&r| r < opts.tol) {
            let mut result = EigenResult {
                energies: vals.iter().take(k).copied().collect(),
                vectors: ritz,
                residual_norms: norms,
                iterations,
            };
            canonicalize_degenerate(&mut result, opts.degeneracy_tol);
            return Ok(result);
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                iterations,
                residuals: last_residuals,
            });
        }
        if dim == n {
            // The subspace spans everything; Ritz pairs are exact up to
            // rounding, so residuals cannot improve further.
            let mut result = EigenResult {
                energies: vals.iter().take(k).copied().collect(),
                vectors: ritz,
                residual_norms: norms,
                iterations,
            };
            canonicalize_degenerate(&mut result, opts.degeneracy_tol);
            return Ok(result);
        }

        for r in 0..nk {
            if norms[r] < opts.tol {
                continue;
            }
            let t: Vec<f64> = residuals[r]
                .iter()
                .zip(diag)
                .map(|(res, d)| {
                    let mut denom = vals[r] - d;
                    if denom.abs() < 1e-8 {
                        denom = if denom < 0.0 { -1e-8 } else { 1e-8 };
                    }
                    res / denom
                })
                .collect();
            pending.push(t);
        }

        if basis.len() + pending.len() > max_sub {
            // collapse onto the lowest Ritz vectors; corrections follow them
            let keep = (2 * k).min(dim).min(max_sub.saturating_sub(pending.len()).max(k));
            let mut restart = ritz;
            for r in nk..keep {
                let y = vecs.column(r);
                let mut x = vec![0.0; n];
                for (c, b) in basis.iter().enumerate() {
                    let w = y[c];
                    for t in 0..n {
                        x[t] += w * b[t];
                    }
                }
                restart.push(x);
            }
            basis.clear();
            images.clear();
            restart.append(&mut pending);
            pending = restart;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two passes of modified Gram–Schmidt; returns false if `v` is (numerically)
/// in the span of `basis`.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let initial = dot(v, v).sqrt();
    if initial == 0.0 || !initial.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let norm = dot(v, v).sqrt();
    if norm < 1e-10 * initial.max(1.0) || norm < 1e-14 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Symmetric eigendecomposition with eigenvalues ascending.
pub fn sorted_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    best
}

/// Within each cluster of degenerate energies, rotate the vectors so each is
/// pivoted on one dominant determinant, then order the cluster by ascending
/// index of the largest-magnitude determinant. Every vector is sign-fixed so
/// its largest-magnitude amplitude is positive.
fn canonicalize_degenerate(result: &mut EigenResult, tol: f64) {
    let k = result.energies.len();
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && (result.energies[end] - result.energies[start]).abs() < tol {
            end += 1;
        }
        if end - start > 1 {
            let d = end - start;
            let n = result.vectors[start].len();
            let cluster = DMatrix::from_fn(n, d, |i, c| result.vectors[start + c][i]);
            // orthonormal basis of the remaining coefficient subspace
            let mut coeff_basis = DMatrix::<f64>::identity(d, d);
            let mut out: Vec<Vec<f64>> = Vec::new();
            while coeff_basis.ncols() > 0 {
                let current = &cluster * &coeff_basis;
                let mut best_row = 0;
                let mut best = -1.0;
                for i in 0..n {
                    let r = current.row(i).norm();
                    if r > best + 1e-12 {
                        best = r;
                        best_row = i;
                    }
                }
                let w: DVector<f64> = current.row(best_row).transpose() / best;
                let coeff = &coeff_basis * &w;
                out.push((&cluster * &coeff).iter().copied().collect());
                // complement of w within the current coefficient basis
                let dim = w.len();
                let mut cols = vec![w.clone()];
                for e in 0..dim {
                    let mut c = DVector::zeros(dim);
                    c[e] = 1.0;
                    for prev in &cols {
                        let proj = prev.dot(&c);
                        c -= prev * proj;
                    }
                    let nn = c.norm();
                    if nn > 1e-8 && cols.len() < dim {
                        cols.push(c / nn);
                    }
                }
                coeff_basis = if cols.len() == 1 {
                    DMatrix::zeros(d, 0)
                } else {
                    &coeff_basis * DMatrix::from_columns(&cols[1..])
                };
            }
            let mut tagged: Vec<(usize, Vec<f64>)> =
                out.into_iter().map(|v| (argmax_abs(&v), v)).collect();
            tagged.sort_by_key(|(i, _)| *i);
            for (c, (_, v)) in tagged.into_iter().enumerate() {
                result.vectors[start + c] = v;
            }
        }
        start = end;
    }
    for v in result.vectors.iter_mut() {
        let i = argmax_abs(v);
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Amplitudes of `U(u) ψ` over `basis`, where `ψ` lives on `2n` active spin
/// orbitals and `u` is a spin-blocked partial unitary mapping them into the
/// `2m` orbitals of `basis`. Because `u` is block diagonal, each minor splits
/// into an α and a β determinant.
pub fn embed_active_state(
    basis: &DeterminantBasis,
    u: &PartialUnitary,
    psi: &FockVector,
) -> Result<Vec<f64>> {
    let m = basis.m_spatial();
    let n = u.n_spatial();
    if u.m_spatial() != m || psi.n_orbitals != 2 * n {
        return Err(Error::ShapeMismatch(format!(
            "u is {}x{}, basis has {m} spatial orbitals, psi has {} spin orbitals",
            u.m_spatial(),
            n,
            psi.n_orbitals
        )));
    }
    if let Some(sector) = psi.sector(0.0) {
        if sector != (basis.n_alpha, basis.n_beta) {
            return Err(Error::ShapeMismatch(format!(
                "state sector {sector:?} differs from basis sector ({}, {})",
                basis.n_alpha, basis.n_beta
            )));
        }
    }
    let b = &u.block;
    let act_alpha = combinations(n, basis.n_alpha);
    let act_beta = combinations(n, basis.n_beta);
    let minors = |full: &[u64], act: &[u64]| -> DMatrix<f64> {
        let mut scratch = Vec::new();
        DMatrix::from_fn(full.len(), act.len(), |j, i| {
            minor_det(b, &bit_indices(full[j]), &bit_indices(act[i]), &mut scratch)
        })
    };
    let da = minors(&basis.alpha_strings, &act_alpha);
    let db = minors(&basis.beta_strings, &act_beta);
    // psi as an (active β) × (active α) matrix
    let coeffs = DMatrix::from_fn(act_beta.len(), act_alpha.len(), |ib, ia| {
        psi.amps[(act_alpha[ia] | act_beta[ib] << n) as usize]
    });
    let full = &db * coeffs * da.transpose();
    let na = basis.alpha_strings.len();
    let mut out = vec![0.0; basis.len()];
    for ib in 0..basis.beta_strings.len() {
        for ia in 0..na {
            out[ib * na + ia] = full[(ib, ia)];
        }
    }
    Ok(out)
}

/// `⟨fci_vec| U(u) |ψ⟩` for an active-space state `ψ`.
pub fn fci_overlap_with_active(
    fci_vec: &[f64],
    basis: &DeterminantBasis,
    u: &PartialUnitary,
    psi: &FockVector,
) -> Result<f64> {
    if fci_vec.len() != basis.len() {
        return Err(Error::ShapeMismatch(format!(
            "FCI vector length {} != basis size {}",
            fci_vec.len(),
            basis.len()
        )));
    }
    let embedded = embed_active_state(basis, u, psi)?;
    Ok(dot(fci_vec, &embedded))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_sizes() {
        assert_eq!(build_basis(8, 1, 1).unwrap().len(), 16);
        let b = build_basis(40, 2, 2).unwrap();
        assert_eq!(b.len(), 36100);
        assert_eq!(b.len(), b.expected_len());
        assert_eq!(build_basis(38, 2, 2).unwrap().len(), 29241);
        assert!(build_basis(8, 5, 0).is_err());
        assert!(build_basis(7, 1, 1).is_err());
    }

    #[test]
    fn basis_sorted_with_correct_counts() {
        let b = build_basis(10, 2, 1).unwrap();
        assert!(b.dets.windows(2).all(|w| w[0] < w[1]));
        for (i, d) in b.dets.iter().enumerate() {
            assert_eq!(d.spin_counts(5), (2, 1));
            assert_eq!(b.position(d.0), Some(i));
        }
    }

    #[test]
    fn davidson_matches_dense_on_random_matrix() {
        let n = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        a = (&a + a.transpose()) * 0.05;
        for i in 0..n {
            a[(i, i)] += i as f64 * 0.1;
        }
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let res = davidson(
            |x, y| {
                let xv = DVector::from_column_slice(x);
                let yv = &a * xv;
                y.copy_from_slice(yv.as_slice());
            },
            &diag,
            4,
            &DavidsonOptions::default(),
        )
        .unwrap();
        let (vals, _) = sorted_eigen(&a);
        for i in 0..4 {
            assert!((res.energies[i] - vals[i]).abs() < 1e-9);
            assert!(res.residual_norms[i] < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let diag = vec![0.0; 3];
        assert!(davidson(|_, _| {}, &diag, 4, &DavidsonOptions::default()).is_err());
        assert!(davidson(|_, _| {}, &diag, 0, &DavidsonOptions::default()).is_err());
    }
}
