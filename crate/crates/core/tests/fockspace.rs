use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssvqd_core::checks;
use ssvqd_core::fockspace::*;
use ssvqd_core::oracle::{creator_expansion_transform, random_k_form, random_matrix};

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> FockVector {
    let mut v = FockVector::zeros(n);
    let m = random_matrix(rng, 1 << n, 1);
    v.amps.copy_from_slice(m.as_slice());
    v
}

#[test]
fn anticommutation_exhaustive_up_to_six() {
    let r = checks::anticommutation_suite(6).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn creator_is_adjoint_of_annihilator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..4 {
        let v = random_vector(&mut rng, 4);
        let w = random_vector(&mut rng, 4);
        let lhs = w.dot(&apply_creator(i, &v).unwrap());
        let rhs = apply_annihilator(i, &w).unwrap().dot(&v);
        assert!((lhs - rhs).abs() < 1e-13);
    }
}

#[test]
fn exterior_transform_is_functorial() {
    let r = checks::functoriality_suite(3, 200).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn minors_match_creator_expansion() {
    let r = checks::minor_determinant_suite(4, 200).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn rectangular_map_matches_creator_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..=3 {
        let m = random_matrix(&mut rng, 6, 4);
        let v = random_k_form(&mut rng, 4, k);
        let fast = apply_exterior_transform(&LinearOrbitalMap::new(m.clone()), &v).unwrap();
        let slow = creator_expansion_transform(&m, &v);
        assert!(fast.amps.iter().zip(&slow.amps).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn transition_elements_give_the_derivative() {
    let r = checks::derivative_identity_suite(9, 100).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn number_operator_cases() {
    let full = FockVector::basis_state(2, 0b11);
    let id = LinearOrbitalMap::identity(2);
    assert_eq!(transition_element(&full, 0, &id, 0, &full).unwrap(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = random_vector(&mut rng, 4).normalized();
    let id4 = LinearOrbitalMap::identity(4);
    for i in 0..4 {
        let n = transition_element(&v, i, &id4, i, &v).unwrap();
        assert!((-1e-14..=1.0 + 1e-14).contains(&n));
    }
}

#[test]
fn transition_matrix_matches_elementwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = LinearOrbitalMap::new(random_matrix(&mut rng, 5, 4));
    let bra = random_k_form(&mut rng, 5, 2);
    let ket = random_k_form(&mut rng, 4, 2);
    let t = transition_matrix(&bra, &m, &ket).unwrap();
    for l in 0..5 {
        for q in 0..4 {
            let e = transition_element(&bra, l, &m, q, &ket).unwrap();
            assert!((t[(l, q)] - e).abs() < 1e-13);
        }
    }
}

#[test]
fn hf_reference_patterns() {
    let v = hf_reference(8, 1, 1).unwrap();
    assert_eq!(v.amps[0b0001_0001], 1.0);
    let v = hf_reference(8, 2, 2).unwrap();
    assert_eq!(v.amps[0b0011_0011], 1.0);
    assert!((v.norm() - 1.0).abs() < 1e-15);
    assert!((v.mean_particle_number() - 4.0).abs() < 1e-15);
    assert!(hf_reference(8, 5, 0).is_err());
}

#[test]
fn transforms_keep_particle_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_k_form(&mut rng, 5, 3);
    let out = apply_exterior_transform(&LinearOrbitalMap::new(random_matrix(&mut rng, 7, 5)), &v).unwrap();
    for (bits, _) in out.support() {
        assert_eq!(bits.count_ones(), 3);
    }
}

proptest! {
    #[test]
    fn excitation_matches_ladder_products(bits in 0u64..256, i in 0usize..8, j in 0usize..8, a in 0usize..8, b in 0usize..8) {
        let v = FockVector::basis_state(8, bits);
        // a_a† a_b† a_j a_i
        let slow = apply_creator(a, &apply_creator(b, &apply_annihilator(j, &apply_annihilator(i, &v).unwrap()).unwrap()).unwrap()).unwrap();
        let mut fast = FockVector::zeros(8);
        if let Some((t, s)) = excite(bits, &[i, j], &[a, b]) {
            fast.amps[t as usize] = s;
        }
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn identity_map_fixes_random_states(seed in 0u64..1000, n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_vector(&mut rng, n);
        let out = apply_exterior_transform(&LinearOrbitalMap::new(DMatrix::identity(n, n)), &v).unwrap();
        prop_assert!(out.amps.iter().zip(&v.amps).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}
