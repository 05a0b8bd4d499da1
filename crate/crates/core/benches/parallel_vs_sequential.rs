//! Study-driver throughput: replicates fitted in parallel against the
//! always-available sequential path.

use criterion::{criterion_group, criterion_main, Criterion};
use hsar::estimator::FitMethod;
use hsar::model::ModelKind;
use hsar::simulate::{run_study, run_study_sequential, SimConfig, StudyOptions};

fn study_config() -> SimConfig {
    SimConfig {
        kind: ModelKind::Hsem,
        grid: (12, 12),
        beta: vec![1.0, 5.0],
        rho: 0.8,
        sigma2_eps: 2.0,
        sigma2_e: 1.0,
        missing_frac: 0.5,
        n_replicates: 8,
        seed: 42,
    }
}

fn bench_study(c: &mut Criterion) {
    let cfg = study_config();
    let opts = StudyOptions {
        compute_se: false,
        ..StudyOptions::default()
    };
    let mut group = c.benchmark_group("study_8_replicates");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_study_sequential(&cfg, &[FitMethod::MmlP], &opts).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_study(&cfg, &[FitMethod::MmlP], &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_study);
criterion_main!(benches);
