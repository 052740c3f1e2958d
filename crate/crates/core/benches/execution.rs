//! Sequential versus parallel execution of the Monte Carlo kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quadwalk::harmonic::{choose_betas, drift_estimate, DriftRequest, Window};
use quadwalk::simulate::{survival_curve, CompiledWalk, SimConfig};
use quadwalk::{classify, walks, ClassifyOptions, Execution, IncrementLaw, WalkSpec};

fn mirror_walk() -> WalkSpec {
    let zeta = IncrementLaw::from_ratios(&[(1, 1, 3, 8), (-1, -1, 3, 8), (1, -1, 1, 8), (-1, 1, 1, 8)]).unwrap();
    walks::mirror_spec(&zeta).unwrap()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_survival(c: &mut Criterion) {
    let spec = mirror_walk();
    let mut cfg = SimConfig::new((20, 20), 6.0, 20_000, 2_000, 1);
    cfg.bootstrap_resamples = 100;
    let mut group = c.benchmark_group("survival_curve");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| survival_curve(&spec, &cfg, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_drift(c: &mut Criterion) {
    let spec = mirror_walk();
    let walk = CompiledWalk::new(&spec);
    let rep = classify(&spec, &ClassifyOptions::default()).unwrap();
    let p = choose_betas(rep.phi1, rep.phi2, rep.phi0, rep.chi, rep.chi / 4.0, Window::Below).unwrap();
    let req = DriftRequest {
        point: (20, 0),
        alpha: 0.5,
        compression: 16,
        samples: 200_000,
        seed: 1,
        truncation: None,
        expected_region: None,
    };
    let mut group = c.benchmark_group("drift_estimate");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| drift_estimate(&spec, &walk, &p, &req, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_survival, bench_drift);
criterion_main!(benches);
