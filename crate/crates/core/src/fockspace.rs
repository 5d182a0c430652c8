//! Occupation-number basis, fermionic ladder operators and the exterior-power
//! extension `U(m)` of a single-particle linear map.
//!
//! A basis state of `N` spin-orbitals is an `N`-bit mask; bit `i` set means
//! orbital `i` is occupied. Orbitals inside a determinant are ordered by
//! ascending index, so the fermionic sign of `a_i` / `a_i†` is `(-1)^{n(i)}`
//! where `n(i)` counts occupied orbitals below `i`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bit_indices, combinations, minor_det};
use crate::par::{self, Execution};

/// Largest orbital count for dense `2^N` storage.
pub const MAX_DENSE_ORBITALS: usize = 24;

/// A Slater determinant as an occupation bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OccupationIndex(pub u64);

impl OccupationIndex {
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_occupied(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn orbitals(self) -> Vec<usize> {
        bit_indices(self.0)
    }

    /// `(n_alpha, n_beta)` for a layout with `n_spatial` orbitals per spin block.
    pub fn spin_counts(self, n_spatial: usize) -> (usize, usize) {
        let mask = (1u64 << n_spatial) - 1;
        (
            (self.0 & mask).count_ones() as usize,
            (self.0 >> n_spatial).count_ones() as usize,
        )
    }
}

/// Fermionic sign `(-1)^{n(i)}` for acting on orbital `i` of `bits`.
#[inline]
pub fn parity_below(bits: u64, i: usize) -> f64 {
    if (bits & ((1u64 << i) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `a_{c0}† a_{c1}† … a_{a1} a_{a0}` to a single determinant, with the
/// annihilators acting first (rightmost first). Returns the resulting
/// determinant and sign, or `None` when the product annihilates it.
pub fn excite(bits: u64, annihilate: &[usize], create: &[usize]) -> Option<(u64, f64)> {
    let mut b = bits;
    let mut sign = 1.0;
    for &i in annihilate {
        if b >> i & 1 == 0 {
            return None;
        }
        sign *= parity_below(b, i);
        b &= !(1u64 << i);
    }
    for &i in create.iter().rev() {
        if b >> i & 1 == 1 {
            return None;
        }
        sign *= parity_below(b, i);
        b |= 1u64 << i;
    }
    Some((b, sign))
}

/// Amplitudes over the full `2^N` occupation basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    pub n_orbitals: usize,
    pub amps: Vec<f64>,
}

impl FockVector {
    pub fn zeros(n_orbitals: usize) -> Self {
        assert!(
            n_orbitals <= MAX_DENSE_ORBITALS,
            "dense Fock storage limited to {MAX_DENSE_ORBITALS} orbitals"
        );
        Self {
            n_orbitals,
            amps: vec![0.0; 1usize << n_orbitals],
        }
    }

    pub fn basis_state(n_orbitals: usize, bits: u64) -> Self {
        let mut v = Self::zeros(n_orbitals);
        v.amps[bits as usize] = 1.0;
        v
    }

    pub fn vacuum(n_orbitals: usize) -> Self {
        Self::basis_state(n_orbitals, 0)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn dot(&self, other: &FockVector) -> f64 {
        assert_eq!(self.n_orbitals, other.n_orbitals);
        self.amps.iter().zip(&other.amps).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &FockVector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += s * b;
        }
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n);
        }
        self
    }

    /// Iterator over `(bits, amplitude)` for nonzero amplitudes.
    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(i, a)| (i as u64, *a))
    }

    /// The single `(n_alpha, n_beta)` sector the support lies in, if any.
    pub fn sector(&self, tol: f64) -> Option<(usize, usize)> {
        let half = self.n_orbitals / 2;
        let mut found = None;
        for (bits, a) in self.support() {
            if a.abs() <= tol {
                continue;
            }
            let s = OccupationIndex(bits).spin_counts(half);
            match found {
                None => found = Some(s),
                Some(prev) if prev != s => return None,
                _ => {}
            }
        }
        found
    }

    /// Expectation of the total particle number.
    pub fn mean_particle_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * a * (i as u64).count_ones() as f64)
            .sum::<f64>()
            / self.dot(self)
    }
}

fn check_orbital(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::OrbitalOutOfRange {
            index: i,
            n_orbitals: n,
        })
    } else {
        Ok(())
    }
}

/// `a_i† v`
pub fn apply_creator(i: usize, v: &FockVector) -> Result<FockVector> {
    check_orbital(i, v.n_orbitals)?;
    let mut out = FockVector::zeros(v.n_orbitals);
    let bit = 1u64 << i;
    for (bits, a) in v.support() {
        if bits & bit == 0 {
            out.amps[(bits | bit) as usize] += parity_below(bits, i) * a;
        }
    }
    Ok(out)
}

/// `a_i v`
pub fn apply_annihilator(i: usize, v: &FockVector) -> Result<FockVector> {
    check_orbital(i, v.n_orbitals)?;
    let mut out = FockVector::zeros(v.n_orbitals);
    let bit = 1u64 << i;
    for (bits, a) in v.support() {
        if bits & bit != 0 {
            out.amps[(bits ^ bit) as usize] += parity_below(bits, i) * a;
        }
    }
    Ok(out)
}

/// A single-particle linear map `m : C^cols → C^rows`, not necessarily unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOrbitalMap {
    pub entries: DMatrix<f64>,
}

impl LinearOrbitalMap {
    pub fn new(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &LinearOrbitalMap) -> LinearOrbitalMap {
        LinearOrbitalMap::new(&self.entries * &other.entries)
    }
}

/// `U(m) v`: each `k`-particle determinant `I` is mapped to
/// `Σ_J det(m[J, I]) |J⟩` over all `k`-subsets `J` of output orbitals.
pub fn apply_exterior_transform(m: &LinearOrbitalMap, v: &FockVector) -> Result<FockVector> {
    apply_exterior_transform_with(Execution::default(), m, v)
}

pub fn apply_exterior_transform_with(
    exec: Execution,
    m: &LinearOrbitalMap,
    v: &FockVector,
) -> Result<FockVector> {
    if m.cols() != v.n_orbitals {
        return Err(Error::ShapeMismatch(format!(
            "map has {} columns but vector has {} orbitals",
            m.cols(),
            v.n_orbitals
        )));
    }
    let rows = m.rows();
    let mut out = FockVector::zeros(rows);

    // Group the input support by particle number.
    let mut by_k: Vec<Vec<(Vec<usize>, f64)>> = vec![Vec::new(); v.n_orbitals + 1];
    for (bits, a) in v.support() {
        by_k[bits.count_ones() as usize].push((bit_indices(bits), a));
    }
    for (k, inputs) in by_k.iter().enumerate() {
        if inputs.is_empty() || k > rows {
            continue;
        }
        let targets = combinations(rows, k);
        let values = par::map_range(exec, targets.len(), |t| {
            let jrows = bit_indices(targets[t]);
            let mut scratch = Vec::with_capacity(k * k);
            let mut acc = 0.0;
            for (icols, a) in inputs {
                acc += minor_det(&m.entries, &jrows, icols, &mut scratch) * a;
            }
            acc
        });
        for (bits, x) in targets.iter().zip(values) {
            out.amps[*bits as usize] = x;
        }
    }
    Ok(out)
}

/// `⟨bra| a_i† U(m) a_q |ket⟩`
pub fn transition_element(
    bra: &FockVector,
    i: usize,
    m: &LinearOrbitalMap,
    q: usize,
    ket: &FockVector,
) -> Result<f64> {
    if bra.n_orbitals != m.rows() {
        return Err(Error::ShapeMismatch(format!(
            "bra has {} orbitals but map has {} rows",
            bra.n_orbitals,
            m.rows()
        )));
    }
    check_orbital(i, bra.n_orbitals)?;
    let reduced = apply_annihilator(q, ket)?;
    let mapped = apply_exterior_transform(m, &reduced)?;
    // ⟨bra|a_i† x⟩ = ⟨a_i bra|x⟩
    Ok(apply_annihilator(i, bra)?.dot(&mapped))
}

/// All `⟨bra| a_l† U(m) a_q |ket⟩` as a `rows × cols` matrix.
pub fn transition_matrix(
    bra: &FockVector,
    m: &LinearOrbitalMap,
    ket: &FockVector,
) -> Result<DMatrix<f64>> {
    if bra.n_orbitals != m.rows() || ket.n_orbitals != m.cols() {
        return Err(Error::ShapeMismatch(format!(
            "map is {}x{} but bra/ket have {}/{} orbitals",
            m.rows(),
            m.cols(),
            bra.n_orbitals,
            ket.n_orbitals
        )));
    }
    let reduced_bras: Vec<FockVector> = (0..m.rows())
        .map(|l| apply_annihilator(l, bra))
        .collect::<Result<_>>()?;
    let mut out = DMatrix::zeros(m.rows(), m.cols());
    for q in 0..m.cols() {
        let reduced = apply_annihilator(q, ket)?;
        if reduced.support().next().is_none() {
            continue;
        }
        let mapped = apply_exterior_transform(m, &reduced)?;
        for (l, rb) in reduced_bras.iter().enumerate() {
            out[(l, q)] = rb.dot(&mapped);
        }
    }
    Ok(out)
}

/// Hartree–Fock determinant occupying the lowest `n_alpha` α and `n_beta` β orbitals.
pub fn hf_reference(n_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<FockVector> {
    if n_orbitals % 2 != 0 {
        return Err(Error::InfeasibleSector(format!(
            "odd spin-orbital count {n_orbitals}"
        )));
    }
    let half = n_orbitals / 2;
    if n_alpha > half || n_beta > half {
        return Err(Error::InfeasibleSector(format!(
            "({n_alpha}, {n_beta}) electrons in {half} spatial orbitals"
        )));
    }
    let bits = ((1u64 << n_alpha) - 1) | (((1u64 << n_beta) - 1) << half);
    Ok(FockVector::basis_state(n_orbitals, bits))
}
