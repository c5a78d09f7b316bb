//! Hot-path timings: per-trial correlation and GLRT cost dominate the Monte
//! Carlo runs; calibration and cluster projection dominate setup.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use beamscan::beamspace::ArrayGeometry;
use beamscan::calibration::calibrate_threshold;
use beamscan::channel::{cluster_channel, fading_process, ideal_beamspace_channel, ClusterConfig, ClusterPort};
use beamscan::detector::{correlate_batch, glrt};
use beamscan::waveform::{make_subsignals, synthesize_received};

fn correlation_and_glrt(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let signals = make_subsignals(10, 4, 0, 7).unwrap();
    let ch = ideal_beamspace_channel(3, fading_process(2, 4, &mut rng));
    let batch = synthesize_received(&signals, &ch, 16, 2, 5.0, true, &mut rng);
    c.bench_function("correlate 16 dir x 2 cyc x 4 div", |b| {
        b.iter(|| correlate_batch(black_box(&signals), black_box(&batch)).unwrap())
    });
    let corr = correlate_batch(&signals, &batch).unwrap();
    c.bench_function("glrt over 16 directions", |b| b.iter(|| glrt(black_box(&corr))));
}

fn threshold_calibration(c: &mut Criterion) {
    c.bench_function("calibrate threshold, 20k draws", |b| {
        b.iter(|| calibrate_threshold(10, 1, 16, 4, black_box(1e-3), 20_000, 5).unwrap())
    });
}

fn cluster_projection(c: &mut Criterion) {
    let rx = ArrayGeometry::new(4, 4);
    let tx = ArrayGeometry::new(8, 8);
    let cfg = ClusterConfig::default();
    let ports: Vec<_> = (0..16).map(|r| (ClusterPort::Bin(r), ClusterPort::Omni)).collect();
    c.bench_function("cluster channel, 16 hyp x 2 cyc x 4 div", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        b.iter(|| cluster_channel(&cfg, &rx, &tx, 2, 4, black_box(&ports), &mut rng).unwrap())
    });
}

criterion_group!(benches, correlation_and_glrt, threshold_calibration, cluster_projection);
criterion_main!(benches);
