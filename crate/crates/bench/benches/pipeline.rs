use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use motion_lsmd::detector::{frame_lsmd_energy, synth_sequence, DetectionConfig, EventKind, SynthSpec};
use motion_lsmd::lsmd::{build_index_tree, decompose, prox_nuclear, prox_tree_norm, LsmdParams, TreeWeights};
use motion_lsmd::sparse_opt::{nn_lasso, SolverParams};
use motion_lsmd::tracker::{track_step, TemplateSet, TrackerConfig};
use motion_lsmd::AffineState;
use motion_lsmd_bench::{low_rank_plus_sparse, wavy};

fn bench_nn_lasso(c: &mut Criterion) {
    let x = wavy(1024, 10, 0.2);
    let t: Vec<f64> = wavy(1024, 1, 0.9).iter().copied().collect();
    let params = SolverParams::with_lambda(0.01);
    c.bench_function("nn_lasso 1024x10", |b| b.iter(|| nn_lasso(black_box(&x), black_box(&t), &params).unwrap()));
}

fn bench_prox(c: &mut Criterion) {
    let m = low_rank_plus_sparse(64, 100);
    let points: Vec<Vec<f64>> = m.column_iter().map(|col| col.iter().copied().collect()).collect();
    let tree = build_index_tree(&points, 4, 0);
    let w = TreeWeights::uniform(&tree);
    let mut group = c.benchmark_group("prox 64x100");
    group.bench_function("nuclear", |b| b.iter(|| prox_nuclear(black_box(&m), 0.5).unwrap()));
    group.bench_function("tree", |b| b.iter(|| prox_tree_norm(black_box(&m), &tree, &w, 0.1, 0.05).unwrap()));
    group.finish();
}

fn bench_decompose(c: &mut Criterion) {
    let m = low_rank_plus_sparse(64, 100);
    let points: Vec<Vec<f64>> = m.column_iter().map(|col| col.iter().copied().collect()).collect();
    let tree = build_index_tree(&points, 4, 0);
    let w = TreeWeights::uniform(&tree);
    let params = LsmdParams::default();
    c.bench_function("decompose 64x100", |b| b.iter(|| decompose(black_box(&m), &tree, &w, &params).unwrap()));
}

fn bench_frame_energy(c: &mut Criterion) {
    let spec = SynthSpec::new(64, 64, 12).with_event(4, 10, EventKind::Swap);
    let (seq, _) = synth_sequence(&spec, 0).unwrap();
    let diff = seq.difference(6).unwrap();
    let config = DetectionConfig::default();
    c.bench_function("frame energy 64x64", |b| {
        b.iter(|| frame_lsmd_energy(black_box(&diff), black_box(&diff), &config).unwrap())
    });
}

fn bench_track_step(c: &mut Criterion) {
    let spec = SynthSpec::new(64, 64, 4);
    let (seq, _) = synth_sequence(&spec, 0).unwrap();
    let config = TrackerConfig::default();
    let init = AffineState::centered(32.0, 32.0, 1.0);
    let size = (config.template_size, config.template_size);
    let templates = TemplateSet::initialize(&seq.frames[0], &init, config.n_templates, size).unwrap();
    c.bench_function("track step 600 particles", |b| {
        b.iter(|| track_step(black_box(&seq.frames[1]), &init, &templates, &config).unwrap())
    });
}

fn quick() -> Criterion {
    Criterion::default()
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(3))
        .sample_size(20)
}

criterion_group! {
    name = benches;
    config = quick();
    targets = bench_nn_lasso, bench_prox, bench_decompose, bench_frame_energy, bench_track_step
}
criterion_main!(benches);
