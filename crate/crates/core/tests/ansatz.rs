use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ssvqd_core::ansatz::*;
use ssvqd_core::fockspace::hf_reference;

#[test]
fn norm_and_sector_preserved_over_random_draws() {
    let circuit = build_uccsd(8, 2, 2, 2).unwrap();
    let hf = hf_reference(8, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let theta = ThetaVector((0..circuit.n_params()).map(|_| rng.random_range(-3.2..3.2)).collect());
        let psi = apply_ansatz(&circuit, &theta, &hf).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert_eq!(psi.sector(1e-14), Some((2, 2)));
    }
}

#[test]
fn output_is_bit_reproducible() {
    let circuit = build_uccsd(8, 2, 2, 2).unwrap();
    let hf = hf_reference(8, 2, 2).unwrap();
    let theta = ThetaVector((0..52).map(|i| 0.01 * i as f64).collect());
    let a = apply_ansatz(&circuit, &theta, &hf).unwrap();
    let b = apply_ansatz(&circuit, &theta, &hf).unwrap();
    assert_eq!(a.amps, b.amps);
}

#[test]
fn operator_order_is_sorted_and_spin_conserving() {
    let c = build_uccsd(8, 2, 2, 1).unwrap();
    assert!(c.ops.windows(2).all(|w| w[0] < w[1]));
    let spin = |i: usize| i / 4;
    for op in &c.ops {
        let mut occ: Vec<usize> = op.occupied.iter().map(|&i| spin(i)).collect();
        let mut vir: Vec<usize> = op.virtuals.iter().map(|&i| spin(i)).collect();
        occ.sort();
        vir.sort();
        assert_eq!(occ, vir);
    }
}

#[test]
fn repetitions_have_independent_parameters() {
    let c = build_uccsd(4, 1, 1, 2).unwrap();
    let hf = hf_reference(4, 1, 1).unwrap();
    let mut t = c.zero_theta();
    t.0[0] = 0.3;
    let a = apply_ansatz(&c, &t, &hf).unwrap();
    let mut t2 = c.zero_theta();
    t2.0[3] = 0.3;
    let b = apply_ansatz(&c, &t2, &hf).unwrap();
    // the same generator appears in both repetitions; acting first on HF either way
    assert!((a.amps.iter().zip(&b.amps).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)) < 1e-15);
    let mut both = c.zero_theta();
    both.0[0] = 0.3;
    both.0[3] = 0.3;
    let c2 = apply_ansatz(&c, &both, &hf).unwrap();
    let mut single = c.zero_theta();
    single.0[0] = 0.6;
    let d = apply_ansatz(&c, &single, &hf).unwrap();
    assert!((c2.amps.iter().zip(&d.amps).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)) < 1e-14);
}

proptest! {
    #[test]
    fn unitary_for_any_angles(theta in prop::collection::vec(-10.0f64..10.0, 6)) {
        let c = build_uccsd(4, 1, 1, 2).unwrap();
        let hf = hf_reference(4, 1, 1).unwrap();
        let psi = apply_ansatz(&c, &ThetaVector(theta), &hf).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(psi.sector(1e-14), Some((1, 1)));
    }
}
