//! Orbital rotations of the active space.
//!
//! A [`PartialUnitary`] holds the spatial block `b` (`m × n`, orthonormal
//! columns); the spin-orbital map is `diag(b, b)`. Energies and gradients are
//! evaluated from reduced density matrices alone, so an orbital phase never
//! touches the many-body state after the RDMs have been measured.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fockspace::{
    apply_annihilator, apply_exterior_transform, transition_matrix, FockVector, LinearOrbitalMap,
};
use crate::hamio::{half_transformed_eri, MolecularIntegrals};
use crate::par::{self, Execution};

/// Column-orthonormality tolerance for a feasible orbital block.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PartialUnitary {
    pub block: DMatrix<f64>,
}

impl PartialUnitary {
    /// Wrap `block`, checking `bᵀb = I`.
    pub fn new(block: DMatrix<f64>) -> Result<Self> {
        if block.ncols() > block.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "orbital block is {}x{}; needs rows >= cols",
                block.nrows(),
                block.ncols()
            )));
        }
        let u = Self { block };
        let deviation = u.orthonormality_deviation();
        if !(deviation <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(u)
    }

    /// The first `n` columns of the `m × m` identity.
    pub fn padded_identity(m: usize, n: usize) -> Self {
        Self {
            block: DMatrix::identity(m, n),
        }
    }

    /// Columns of the identity selected by 0-based orbital index.
    pub fn from_columns(m: usize, columns: &[usize]) -> Result<Self> {
        let mut block = DMatrix::zeros(m, columns.len());
        for (c, &i) in columns.iter().enumerate() {
            if i >= m {
                return Err(Error::OrbitalOutOfRange {
                    index: i,
                    n_orbitals: m,
                });
            }
            block[(i, c)] = 1.0;
        }
        Self::new(block)
    }

    pub fn m_spatial(&self) -> usize {
        self.block.nrows()
    }

    pub fn n_spatial(&self) -> usize {
        self.block.ncols()
    }

    /// `max |bᵀb - I|`
    pub fn orthonormality_deviation(&self) -> f64 {
        let g = self.block.transpose() * &self.block;
        let n = g.nrows();
        (&g - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Block-diagonal `diag(b, b)` acting on spin orbitals.
    pub fn spin_form(&self) -> DMatrix<f64> {
        spin_block(&self.block)
    }
}

/// `diag(a, a)` for a spatial matrix `a`.
pub fn spin_block(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(a);
    out.view_mut((r, c), (r, c)).copy_from(a);
    out
}

/// One- and two-body reduced density matrices over spin orbitals.
///
/// `one_body[(p, q)] = ⟨a_p† a_q⟩`, `two_body(p, q, r, s) = ⟨a_p† a_q† a_s a_r⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct RDMPair {
    pub n_orbitals: usize,
    pub one_body: DMatrix<f64>,
    pub two_body: Vec<f64>,
}

impl RDMPair {
    pub fn zeros(n_orbitals: usize) -> Self {
        Self {
            n_orbitals,
            one_body: DMatrix::zeros(n_orbitals, n_orbitals),
            two_body: vec![0.0; n_orbitals.pow(4)],
        }
    }

    #[inline]
    pub fn two(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orbitals;
        self.two_body[((p * n + q) * n + r) * n + s]
    }

    /// Spin-summed spatial densities: `γ_pq = Σ_σ R^{pσ}_{qσ}` and
    /// `D[p,r,q,s] = Σ_στ R^{pσ qτ}_{rσ sτ}` (pairs in chemist order).
    pub fn spatial(&self) -> SpatialRdms {
        let n = self.n_orbitals / 2;
        let gamma = DMatrix::from_fn(n, n, |p, q| {
            self.one_body[(p, q)] + self.one_body[(p + n, q + n)]
        });
        let mut d4 = vec![0.0; n.pow(4)];
        for p in 0..n {
            for r in 0..n {
                for q in 0..n {
                    for s in 0..n {
                        let mut acc = 0.0;
                        for sp in [0, n] {
                            for tp in [0, n] {
                                acc += self.two(p + sp, q + tp, r + sp, s + tp);
                            }
                        }
                        d4[((p * n + r) * n + q) * n + s] = acc;
                    }
                }
            }
        }
        SpatialRdms { n, gamma, d4 }
    }

    pub fn trace(&self) -> f64 {
        self.one_body.trace()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialRdms {
    pub n: usize,
    pub gamma: DMatrix<f64>,
    pub d4: Vec<f64>,
}

/// Measure both RDMs of a state by exact operator application.
pub fn measure_rdms(psi: &FockVector) -> RDMPair {
    measure_rdms_with(Execution::default(), psi)
}

pub fn measure_rdms_with(exec: Execution, psi: &FockVector) -> RDMPair {
    let n = psi.n_orbitals;
    let singles: Vec<FockVector> = (0..n)
        .map(|p| apply_annihilator(p, psi).expect("orbital in range"))
        .collect();
    // pairs[r * n + s] = a_s a_r ψ
    let pairs: Vec<FockVector> = par::map_range(exec, n * n, |rs| {
        let (r, s) = (rs / n, rs % n);
        apply_annihilator(s, &singles[r]).expect("orbital in range")
    });
    let one = DMatrix::from_fn(n, n, |p, q| singles[p].dot(&singles[q]));
    let nn = n * n;
    let rows = par::map_range(exec, nn, |pq| {
        (0..nn).map(|rs| pairs[pq].dot(&pairs[rs])).collect::<Vec<f64>>()
    });
    let mut two = Vec::with_capacity(nn * nn);
    for r in rows {
        two.extend(r);
    }
    RDMPair {
        n_orbitals: n,
        one_body: one,
        two_body: two,
    }
}

/// The orbital-dependent energy `E(b)` of fixed RDMs, with cached contractions.
#[derive(Debug, Clone)]
pub struct OrbitalEnergy<'a> {
    ints: &'a MolecularIntegrals,
    n: usize,
    gamma: DMatrix<f64>,
    /// `D4` as an `n × n³` matrix (row = first index).
    d4: DMatrix<f64>,
    /// Sum of the four placements of the differentiated index, `n × n³`.
    d4_sym: DMatrix<f64>,
}

impl<'a> OrbitalEnergy<'a> {
    pub fn new(ints: &'a MolecularIntegrals, rdms: &RDMPair) -> Result<Self> {
        Self::from_spatial(ints, &rdms.spatial())
    }

    pub fn from_spatial(ints: &'a MolecularIntegrals, s: &SpatialRdms) -> Result<Self> {
        let n = s.n;
        if n > ints.m_spatial {
            return Err(Error::ShapeMismatch(format!(
                "{n} active orbitals exceed {} spatial orbitals",
                ints.m_spatial
            )));
        }
        let n3 = n * n * n;
        let at = |a: usize, b: usize, c: usize, d: usize| s.d4[((a * n + b) * n + c) * n + d];
        let d4 = DMatrix::from_fn(n, n3, |p, y| s.d4[p * n3 + y]);
        let d4_sym = DMatrix::from_fn(n, n3, |al, y| {
            let (y2, y3, y4) = (y / (n * n), (y / n) % n, y % n);
            at(al, y2, y3, y4) + at(y2, al, y3, y4) + at(y3, y4, al, y2) + at(y3, y4, y2, al)
        });
        Ok(Self {
            ints,
            n,
            gamma: s.gamma.clone(),
            d4,
            d4_sym,
        })
    }

    /// Weighted sum of several states' energies, sharing one contraction.
    pub fn weighted(ints: &'a MolecularIntegrals, parts: &[(f64, &RDMPair)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidConfig("no states to average".into()))?;
        let mut acc = first.1.spatial();
        acc.gamma *= first.0;
        acc.d4.iter_mut().for_each(|x| *x *= first.0);
        for (w, r) in &parts[1..] {
            let s = r.spatial();
            if s.n != acc.n {
                return Err(Error::ShapeMismatch("RDMs of different sizes".into()));
            }
            acc.gamma += &s.gamma * *w;
            for (a, b) in acc.d4.iter_mut().zip(&s.d4) {
                *a += w * b;
            }
        }
        Self::from_spatial(ints, &acc)
    }

    fn check(&self, b: &DMatrix<f64>) -> Result<()> {
        if b.nrows() != self.ints.m_spatial || b.ncols() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "orbital block is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                self.ints.m_spatial,
                self.n
            )));
        }
        Ok(())
    }

    fn x_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.ints.m_spatial;
        let n3 = self.n.pow(3);
        let x = half_transformed_eri(&self.ints.v, m, b);
        DMatrix::from_row_slice(m, n3, &x)
    }

    pub fn energy(&self, b: &DMatrix<f64>) -> Result<f64> {
        self.check(b)?;
        let hb = &self.ints.h * b;
        let e1 = (b.transpose() * hb).component_mul(&self.gamma).sum();
        let y = self.x_matrix(b) * self.d4.transpose();
        Ok(e1 + 0.5 * b.component_mul(&y).sum())
    }

    pub fn gradient(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.energy_and_gradient(b)?.1)
    }

    pub fn energy_and_gradient(&self, b: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
        self.check(b)?;
        let hb = &self.ints.h * b;
        let e1 = (b.transpose() * &hb).component_mul(&self.gamma).sum();
        let x = self.x_matrix(b);
        let y = &x * self.d4.transpose();
        let e = e1 + 0.5 * b.component_mul(&y).sum();
        let g = hb * (&self.gamma + self.gamma.transpose()) + 0.5 * (x * self.d4_sym.transpose());
        Ok((e, g))
    }
}

fn check_active(u: &PartialUnitary, rdms: &RDMPair) -> Result<()> {
    if 2 * u.n_spatial() != rdms.n_orbitals {
        return Err(Error::ShapeMismatch(format!(
            "u has {} columns but RDMs cover {} spin orbitals",
            u.n_spatial(),
            rdms.n_orbitals
        )));
    }
    Ok(())
}

/// Electronic energy of the RDMs in the rotated basis (no core shift).
pub fn rotated_energy(u: &PartialUnitary, rdms: &RDMPair, ints: &MolecularIntegrals) -> Result<f64> {
    check_active(u, rdms)?;
    OrbitalEnergy::new(ints, rdms)?.energy(&u.block)
}

/// `∂E/∂b`, with α and β contributions summed into the shared block.
pub fn rotated_energy_gradient(
    u: &PartialUnitary,
    rdms: &RDMPair,
    ints: &MolecularIntegrals,
) -> Result<DMatrix<f64>> {
    check_active(u, rdms)?;
    OrbitalEnergy::new(ints, rdms)?.gradient(&u.block)
}

fn overlap_map(u_j: &PartialUnitary, u_k: &PartialUnitary, psi_j: &FockVector, psi_k: &FockVector) -> Result<LinearOrbitalMap> {
    if u_j.block.shape() != u_k.block.shape()
        || psi_j.n_orbitals != 2 * u_j.n_spatial()
        || psi_k.n_orbitals != 2 * u_k.n_spatial()
    {
        return Err(Error::ShapeMismatch(format!(
            "overlap of {}x{} / {}x{} blocks with {}/{} spin-orbital states",
            u_j.m_spatial(),
            u_j.n_spatial(),
            u_k.m_spatial(),
            u_k.n_spatial(),
            psi_j.n_orbitals,
            psi_k.n_orbitals
        )));
    }
    Ok(LinearOrbitalMap::new(spin_block(
        &(u_j.block.transpose() * &u_k.block),
    )))
}

/// `⟨Ψ_j| U(u_jᵀ u_k) |Ψ_k⟩`
pub fn overlap(u_j: &PartialUnitary, u_k: &PartialUnitary, psi_j: &FockVector, psi_k: &FockVector) -> Result<f64> {
    let map = overlap_map(u_j, u_k, psi_j, psi_k)?;
    Ok(psi_j.dot(&apply_exterior_transform(&map, psi_k)?))
}

/// `∂|⟨Ψ_j|U(u_jᵀu_k)|Ψ_k⟩|² / ∂b_k`, folded onto the shared spatial block.
pub fn overlap_gradient(
    u_j: &PartialUnitary,
    u_k: &PartialUnitary,
    psi_j: &FockVector,
    psi_k: &FockVector,
) -> Result<DMatrix<f64>> {
    let map = overlap_map(u_j, u_k, psi_j, psi_k)?;
    let s = psi_j.dot(&apply_exterior_transform(&map, psi_k)?);
    let t = transition_matrix(psi_j, &map, psi_k)?;
    let g = 2.0 * s * (u_j.spin_form() * t);
    let (m, n) = u_k.block.shape();
    Ok(DMatrix::from_fn(m, n, |i, p| g[(i, p)] + g[(m + i, n + p)]))
}

/// Nearest matrix with orthonormal columns: `U Vᵀ` from the thin SVD.
pub fn orth(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    if n > m {
        return Err(Error::ShapeMismatch(format!("cannot orthonormalise {n} columns in {m} rows")));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::RankDeficient { sigma_min: f64::NAN });
    }
    let svd = a.clone().svd(true, true);
    let sigma_min = svd.singular_values.min();
    if !(sigma_min > 1e-12) {
        return Err(Error::RankDeficient { sigma_min });
    }
    let mut u = svd.u.expect("requested U");
    let mut vt = svd.v_t.expect("requested Vᵀ");
    for i in 0..n {
        let row = vt.row(i);
        let imax = (0..n).fold(0, |b, j| if row[j].abs() > row[b].abs() { j } else { b });
        if row[imax] < 0.0 {
            vt.row_mut(i).neg_mut();
            u.column_mut(i).neg_mut();
        }
    }
    Ok(u * vt)
}

/// `orth(b - η ∇)`
pub fn projected_gd_step(u: &PartialUnitary, grad: &DMatrix<f64>, eta: f64) -> Result<PartialUnitary> {
    if grad.shape() != u.block.shape() {
        return Err(Error::ShapeMismatch(format!(
            "gradient is {:?}, orbital block is {:?}",
            grad.shape(),
            u.block.shape()
        )));
    }
    Ok(PartialUnitary {
        block: orth(&(&u.block - grad * eta))?,
    })
}
