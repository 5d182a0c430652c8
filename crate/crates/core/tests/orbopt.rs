mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssvqd_core::checks;
use ssvqd_core::fci::{build_basis, lowest_eigenpairs};
use ssvqd_core::fockspace::{apply_exterior_transform, hf_reference, FockVector, LinearOrbitalMap};
use ssvqd_core::oracle::*;
use ssvqd_core::orbopt::*;

fn rdm_invariants(r: &RDMPair, n_elec: f64) {
    let n = r.n_orbitals;
    assert!((&r.one_body - r.one_body.transpose()).amax() < 1e-12);
    assert!((r.trace() - n_elec).abs() < 1e-10);
    for p in 0..n {
        for q in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let x = r.two(p, q, a, b);
                    assert!((x + r.two(q, p, a, b)).abs() < 1e-12);
                    assert!((x + r.two(p, q, b, a)).abs() < 1e-12);
                }
            }
        }
    }
    for p in 0..n {
        for s in 0..n {
            let pt: f64 = (0..n).map(|q| r.two(p, q, s, q)).sum();
            assert!((pt - (n_elec - 1.0) * r.one_body[(p, s)]).abs() < 1e-9);
        }
    }
}

#[test]
fn rdm_invariants_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (na, nb) in [(1, 1), (2, 2), (2, 1)] {
        let psi = random_sector_state(&mut rng, 8, na, nb);
        rdm_invariants(&measure_rdms(&psi), (na + nb) as f64);
    }
}

#[test]
fn rdm_energy_matches_direct_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (m, n, na, nb) in [(4, 4, 2, 2), (5, 3, 1, 1), (6, 3, 2, 1)] {
        let ints = random_integrals(&mut rng, m, na + nb, 0, 0.5);
        let psi = random_sector_state(&mut rng, 2 * n, na, nb);
        let u = PartialUnitary::padded_identity(m, n);
        let e = rotated_energy(&u, &measure_rdms(&psi), &ints).unwrap();
        let active = ints.truncated(n).electronic();
        let direct = psi.dot(&ladder_hamiltonian_apply(&active, &psi));
        assert!((e - direct).abs() < 1e-10, "{e} vs {direct}");
    }
}

#[test]
fn rotated_energy_matches_rotated_integrals() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ints = random_integrals(&mut rng, 6, 3, 1, 0.5);
    let psi = random_sector_state(&mut rng, 6, 2, 1);
    let u = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
    let e = rotated_energy(&u, &measure_rdms(&psi), &ints).unwrap();
    let active = ints.rotated(&u.block).electronic();
    let direct = psi.dot(&ladder_hamiltonian_apply(&active, &psi));
    assert!((e - direct).abs() < 1e-10);
}

#[test]
fn hf_rdms_reproduce_fixture_hf_energy() {
    let (ints, meta) = common::load("h2_631g");
    let hf = hf_reference(4, 1, 1).unwrap();
    let e = rotated_energy(&PartialUnitary::padded_identity(4, 2), &measure_rdms(&hf), &ints).unwrap();
    assert!((e - meta["hf_electronic_energy"].as_f64().unwrap()).abs() < 1e-8);
}

#[test]
fn energy_is_covariant_under_active_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let ints = random_integrals(&mut rng, 6, 3, 1, 0.5);
        let psi = random_sector_state(&mut rng, 6, 2, 1);
        let u = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
        let q = random_orthonormal(&mut rng, 3, 3);
        let e1 = rotated_energy(&u, &measure_rdms(&psi), &ints).unwrap();
        let uq = PartialUnitary::new(&u.block * &q).unwrap();
        let psi_q = apply_exterior_transform(&LinearOrbitalMap::new(spin_block(&q.transpose())), &psi).unwrap();
        let e2 = rotated_energy(&uq, &measure_rdms(&psi_q), &ints).unwrap();
        assert!((e1 - e2).abs() < 1e-9);
    }
}

#[test]
fn fci_state_energy_at_full_identity() {
    let (ints, _) = common::load("h2_631g");
    let ints = ints.electronic();
    let basis = build_basis(8, 1, 1).unwrap();
    let r = lowest_eigenpairs(&ints, &basis, 2, 1e-10).unwrap();
    for k in 0..2 {
        let psi = basis.scatter(&r.vectors[k]);
        let e = rotated_energy(&PartialUnitary::padded_identity(4, 4), &measure_rdms(&psi), &ints).unwrap();
        assert!((e - r.energies[k]).abs() < 1e-9);
    }
}

#[test]
fn energy_gradient_matches_finite_differences() {
    let r = checks::energy_gradient_suite(0, 100).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn zero_rdms_give_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ints = random_integrals(&mut rng, 6, 2, 0, 0.5);
    let u = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
    let g = rotated_energy_gradient(&u, &RDMPair::zeros(6), &ints).unwrap();
    assert_eq!(g.amax(), 0.0);
}

#[test]
fn one_body_gradient_is_linear_in_the_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ints = random_integrals(&mut rng, 6, 2, 0, 0.5);
    let u = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
    let mut a = RDMPair::zeros(6);
    let mut b = RDMPair::zeros(6);
    a.one_body = random_matrix(&mut rng, 6, 6);
    b.one_body = random_matrix(&mut rng, 6, 6);
    let mut sum = RDMPair::zeros(6);
    sum.one_body = &a.one_body * 2.0 + &b.one_body;
    let ga = rotated_energy_gradient(&u, &a, &ints).unwrap();
    let gb = rotated_energy_gradient(&u, &b, &ints).unwrap();
    let gs = rotated_energy_gradient(&u, &sum, &ints).unwrap();
    assert!((gs - (ga * 2.0 + gb)).amax() < 1e-12);
}

#[test]
fn overlap_trivial_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let u = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
    let psi = random_sector_state(&mut rng, 6, 1, 1);
    assert!((overlap(&u, &u, &psi, &psi).unwrap() - 1.0).abs() < 1e-12);
    let a = FockVector::basis_state(6, 0b001_001);
    let b = FockVector::basis_state(6, 0b010_001);
    assert!(overlap(&u, &u, &a, &b).unwrap().abs() < 1e-15);
    for _ in 0..20 {
        let v = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
        let p2 = random_sector_state(&mut rng, 6, 1, 1);
        assert!(overlap(&u, &v, &psi, &p2).unwrap().abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn overlap_equals_full_space_inner_product() {
    let r = checks::embedding_suite(1, 50).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn overlap_gradient_matches_finite_differences() {
    let r = checks::overlap_gradient_suite(2, 100).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn overlap_gradient_at_orthogonal_states_in_one_basis() {
    let u = PartialUnitary::padded_identity(6, 3);
    let a = FockVector::basis_state(6, 0b001_001);
    let b = FockVector::basis_state(6, 0b010_001);
    let g = overlap_gradient(&u, &u, &a, &b).unwrap();
    let fd = central_difference(
        |x| overlap(&u, &PartialUnitary { block: x.clone() }, &a, &b).unwrap().powi(2),
        &u.block,
        1e-5,
    );
    assert!((g - fd).amax() < 1e-8);
}

#[test]
fn overlap_is_invariant_under_common_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let uj = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
        let uk = PartialUnitary::new(random_orthonormal(&mut rng, 6, 3)).unwrap();
        let pj = random_sector_state(&mut rng, 6, 1, 1);
        let pk = random_sector_state(&mut rng, 6, 1, 1);
        let q = random_orthonormal(&mut rng, 6, 6);
        let (qj, qk) = (
            PartialUnitary::new(&q * &uj.block).unwrap(),
            PartialUnitary::new(&q * &uk.block).unwrap(),
        );
        let o1 = overlap(&uj, &uk, &pj, &pk).unwrap();
        let o2 = overlap(&qj, &qk, &pj, &pk).unwrap();
        assert!((o1 - o2).abs() < 1e-12);
        // the gradient rotates with the frame
        let g1 = overlap_gradient(&uj, &uk, &pj, &pk).unwrap();
        let g2 = overlap_gradient(&qj, &qk, &pj, &pk).unwrap();
        assert!((&q * g1 - g2).amax() < 1e-10);
    }
}

#[test]
fn orth_is_the_polar_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let a = random_matrix(&mut rng, 7, 3);
        let o = orth(&a).unwrap();
        assert!((o.transpose() * &o - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        assert!((&o - polar_factor(&a)).amax() < 1e-10);
    }
}

#[test]
fn projected_steps_descend_on_a_quadratic_surrogate() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let c = random_matrix(&mut rng, 5, 5);
        let s = &c * c.transpose();
        let f = |b: &DMatrix<f64>| (b.transpose() * &s * b).trace();
        let u = PartialUnitary::new(random_orthonormal(&mut rng, 5, 2)).unwrap();
        let g = &s * &u.block * 2.0;
        let next = projected_gd_step(&u, &g, 1e-3 / s.norm()).unwrap();
        assert!(f(&next.block) <= f(&u.block) + 1e-14);
        assert!(next.orthonormality_deviation() < 1e-12);
    }
}

proptest! {
    #[test]
    fn orth_of_scaled_frame_is_the_frame(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(2..8);
        let n = rng.random_range(1..=m);
        let q = random_orthonormal(&mut rng, m, n);
        let o = orth(&(&q * scale)).unwrap();
        prop_assert!((o - q).amax() < 1e-12);
    }

    #[test]
    fn rdm_invariants_hold(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_sector_state(&mut rng, 6, 2, 1);
        let r = measure_rdms(&psi);
        prop_assert!((r.trace() - 3.0).abs() < 1e-10);
        for p in 0..6 {
            for s in 0..6 {
                let pt: f64 = (0..6).map(|q| r.two(p, q, s, q)).sum();
                prop_assert!((pt - 2.0 * r.one_body[(p, s)]).abs() < 1e-9);
            }
        }
    }
}
