//! Trotterised unitary coupled-cluster singles and doubles.
//!
//! Each factor is `exp(t (G - Gᵀ))` for a spin-orbital excitation `G`. Since
//! `G` maps every determinant it touches to exactly one other determinant,
//! `K = G - Gᵀ` acts on a set of disjoint two-dimensional planes, and the
//! factor is a Givens rotation by `t` on each plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{excite, FockVector, MAX_DENSE_ORBITALS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExcitationKind {
    Single,
    Double,
}

/// `G = a†_{v0} a†_{v1} … a_{o1} a_{o0}` (occupied annihilated first).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExcitationOp {
    pub kind: ExcitationKind,
    pub occupied: Vec<usize>,
    pub virtuals: Vec<usize>,
}

impl ExcitationOp {
    pub fn single(i: usize, a: usize) -> Self {
        Self {
            kind: ExcitationKind::Single,
            occupied: vec![i],
            virtuals: vec![a],
        }
    }

    pub fn double(i: usize, j: usize, a: usize, b: usize) -> Self {
        Self {
            kind: ExcitationKind::Double,
            occupied: vec![i, j],
            virtuals: vec![a, b],
        }
    }

    /// `G|bits⟩ = sign |target⟩`, if nonzero.
    pub fn apply_to(&self, bits: u64) -> Option<(u64, f64)> {
        excite(bits, &self.occupied, &self.virtuals)
    }
}

/// Rotation planes of one factor: `(I, J, s)` with `G|I⟩ = s|J⟩`.
type Planes = Vec<(u32, u32, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCircuit {
    pub n_orbitals: usize,
    /// Unique excitations, in application order within one repetition.
    pub ops: Vec<ExcitationOp>,
    pub reps: usize,
    planes: Vec<Planes>,
}

impl AnsatzCircuit {
    pub fn new(n_orbitals: usize, ops: Vec<ExcitationOp>, reps: usize) -> Result<Self> {
        if reps == 0 {
            return Err(Error::InvalidConfig("ansatz needs at least one repetition".into()));
        }
        if n_orbitals > MAX_DENSE_ORBITALS {
            return Err(Error::InvalidConfig(format!(
                "{n_orbitals} spin orbitals exceed the dense limit {MAX_DENSE_ORBITALS}"
            )));
        }
        for op in &ops {
            if let Some(&i) = op.occupied.iter().chain(&op.virtuals).find(|&&i| i >= n_orbitals) {
                return Err(Error::OrbitalOutOfRange {
                    index: i,
                    n_orbitals,
                });
            }
        }
        let planes = ops
            .iter()
            .map(|op| {
                (0..1u64 << n_orbitals)
                    .filter_map(|bits| {
                        op.apply_to(bits)
                            .map(|(t, s)| (bits as u32, t as u32, s))
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n_orbitals,
            ops,
            reps,
            planes,
        })
    }

    pub fn n_params(&self) -> usize {
        self.reps * self.ops.len()
    }

    pub fn zero_theta(&self) -> ThetaVector {
        ThetaVector(vec![0.0; self.n_params()])
    }

    /// Apply factor `index` (0-based over `n_params`) by angle `t`, in place.
    pub fn apply_factor(&self, index: usize, t: f64, v: &mut FockVector) {
        if t == 0.0 {
            return;
        }
        let (s, c) = t.sin_cos();
        for &(i, j, sign) in &self.planes[index % self.ops.len()] {
            let (ci, cj) = (v.amps[i as usize], v.amps[j as usize]);
            v.amps[i as usize] = c * ci - sign * s * cj;
            v.amps[j as usize] = c * cj + sign * s * ci;
        }
    }
}

/// Circuit parameters, repetition-major: `theta[r * n_ops + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector(pub Vec<f64>);

impl ThetaVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All spin-conserving singles and doubles out of the HF determinant.
pub fn build_uccsd(n_orbitals: usize, n_alpha: usize, n_beta: usize, reps: usize) -> Result<AnsatzCircuit> {
    if reps == 0 {
        return Err(Error::InvalidConfig("ansatz needs at least one repetition".into()));
    }
    if n_orbitals % 2 != 0 {
        return Err(Error::InfeasibleSector(format!("odd spin-orbital count {n_orbitals}")));
    }
    let n = n_orbitals / 2;
    if n_alpha > n || n_beta > n {
        return Err(Error::InfeasibleSector(format!(
            "({n_alpha}, {n_beta}) electrons in {n} spatial orbitals"
        )));
    }
    let occ_a: Vec<usize> = (0..n_alpha).collect();
    let vir_a: Vec<usize> = (n_alpha..n).collect();
    let occ_b: Vec<usize> = (n..n + n_beta).collect();
    let vir_b: Vec<usize> = (n + n_beta..2 * n).collect();
    if vir_a.is_empty() && vir_b.is_empty() {
        return Err(Error::InvalidConfig("no virtual orbitals to excite into".into()));
    }

    let mut ops = Vec::new();
    for (occ, vir) in [(&occ_a, &vir_a), (&occ_b, &vir_b)] {
        for &i in occ.iter() {
            for &a in vir.iter() {
                ops.push(ExcitationOp::single(i, a));
            }
        }
    }
    let pairs = |v: &[usize]| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..v.len() {
            for y in x + 1..v.len() {
                out.push((v[x], v[y]));
            }
        }
        out
    };
    for (occ, vir) in [(&occ_a, &vir_a), (&occ_b, &vir_b)] {
        for (i, j) in pairs(occ) {
            for (a, b) in pairs(vir) {
                ops.push(ExcitationOp::double(i, j, a, b));
            }
        }
    }
    for &i in &occ_a {
        for &j in &occ_b {
            for &a in &vir_a {
                for &b in &vir_b {
                    ops.push(ExcitationOp::double(i, j, a, b));
                }
            }
        }
    }
    ops.sort();
    AnsatzCircuit::new(n_orbitals, ops, reps)
}

/// `Θ(θ) |ref⟩`, factors applied in parameter order.
pub fn apply_ansatz(circuit: &AnsatzCircuit, theta: &ThetaVector, reference: &FockVector) -> Result<FockVector> {
    if theta.len() != circuit.n_params() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters for a circuit with {}",
            theta.len(),
            circuit.n_params()
        )));
    }
    if reference.n_orbitals != circuit.n_orbitals {
        return Err(Error::ShapeMismatch(format!(
            "reference over {} orbitals, circuit over {}",
            reference.n_orbitals, circuit.n_orbitals
        )));
    }
    let mut v = reference.clone();
    for (i, &t) in theta.0.iter().enumerate() {
        circuit.apply_factor(i, t, &mut v);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::hf_reference;

    #[test]
    fn parameter_counts() {
        let c = build_uccsd(4, 1, 1, 1).unwrap();
        assert_eq!(c.ops.len(), 3);
        assert_eq!(c.n_params(), 3);
        let c = build_uccsd(8, 2, 2, 2).unwrap();
        let singles = c.ops.iter().filter(|o| o.kind == ExcitationKind::Single).count();
        assert_eq!(singles, 8);
        assert_eq!(c.ops.len(), 26);
        assert_eq!(c.n_params(), 52);
        assert!(build_uccsd(8, 2, 2, 0).is_err());
        assert!(build_uccsd(4, 2, 2, 1).is_err());
    }

    #[test]
    fn zero_theta_is_identity() {
        let c = build_uccsd(8, 2, 2, 2).unwrap();
        let hf = hf_reference(8, 2, 2).unwrap();
        assert_eq!(apply_ansatz(&c, &c.zero_theta(), &hf).unwrap(), hf);
    }

    #[test]
    fn quarter_turn_single_moves_occupation() {
        let c = AnsatzCircuit::new(2, vec![ExcitationOp::single(0, 1)], 1).unwrap();
        let v = apply_ansatz(&c, &ThetaVector(vec![std::f64::consts::FRAC_PI_2]), &FockVector::basis_state(2, 0b01)).unwrap();
        assert!(v.amps[0b01].abs() < 1e-15);
        assert!((v.amps[0b10].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_rejected() {
        let c = build_uccsd(4, 1, 1, 1).unwrap();
        let hf = hf_reference(4, 1, 1).unwrap();
        assert!(apply_ansatz(&c, &ThetaVector(vec![0.0; 2]), &hf).is_err());
    }
}
