use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use simapprox_core::par::ExecMode;
use simapprox_core::runner::{run_correspondence_with, run_lk_with, ExperimentConfig};
use simapprox_core::stats::{bootstrap_cumulant, BootstrapSpec};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn config(dir: &std::path::Path, text: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::parse(text).unwrap();
    c.output_dir = dir.to_path_buf();
    c
}

fn lk(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "m = 2\nn = 1\nt_grid = 4, 5, 6\nsamples = 64\n");
    let mut g = c.benchmark_group("lk_2x1");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| black_box(run_lk_with(&cfg, mode).unwrap().rows.len()))
        });
    }
    g.finish();
}

fn correspondence(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "t_grid = 8\nsamples = 32\n");
    let mut g = c.benchmark_group("correspondence_1x1");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| black_box(run_correspondence_with(&cfg, mode).unwrap().shells))
        });
    }
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let xs: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let mut g = c.benchmark_group("bootstrap_cum4");
    g.sample_size(10);
    for (name, mode) in MODES {
        let spec = BootstrapSpec { resamples: 500, mode, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, spec| {
            b.iter(|| black_box(bootstrap_cumulant(&xs, 4, true, spec).unwrap().ci_hi))
        });
    }
    g.finish();
}

criterion_group!(benches, lk, correspondence, bootstrap);
criterion_main!(benches);
