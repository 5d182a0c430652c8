use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ssvqd_core::fci::{build_basis, SectorHamiltonian};
use ssvqd_core::fockspace::{apply_exterior_transform_with, LinearOrbitalMap};
use ssvqd_core::oracle::{random_integrals, random_matrix, random_sector_state};
use ssvqd_core::orbopt::measure_rdms_with;
use ssvqd_core::par::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sigma(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ints = random_integrals(&mut rng, 12, 6, 0, 0.3);
    let basis = build_basis(24, 3, 3).unwrap();
    let x: Vec<f64> = (0..basis.len()).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
    let mut y = vec![0.0; basis.len()];
    let mut group = c.benchmark_group("fci_sigma_m12_3a3b");
    for (name, exec) in MODES {
        let ham = SectorHamiltonian::with_execution(&ints, &basis, exec).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ham.apply_with(exec, &x, &mut y))
        });
    }
    group.finish();
}

fn rdms(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let psi = random_sector_state(&mut rng, 10, 2, 2);
    let mut group = c.benchmark_group("rdm_measurement_n10");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| measure_rdms_with(exec, &psi))
        });
    }
    group.finish();
}

fn exterior(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let psi = random_sector_state(&mut rng, 8, 2, 2);
    let map = LinearOrbitalMap::new(random_matrix(&mut rng, 16, 8));
    let mut group = c.benchmark_group("exterior_transform_16x8");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| apply_exterior_transform_with(exec, &map, &psi).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sigma, rdms, exterior);
criterion_main!(benches);
