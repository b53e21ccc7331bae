//! Criterion benchmarks for the hot paths: SSIM, warping and a full
//! project-capture-rectify cycle.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use reproj_core::geometry::{tilt_keystone, warp};
use reproj_core::iqa::{ssim, SsimParams};
use reproj_core::optics::cycle;
use reproj_core::synth::{line_art, photo, Polarity};
use reproj_core::{MarkerLayout, OpticsModels};

const SIZES: [(usize, usize); 2] = [(256, 192), (512, 384)];

fn bench_ssim(c: &mut Criterion) {
    let mut group = c.benchmark_group("ssim");
    for (w, h) in SIZES {
        let a = line_art(w, h, 1, Polarity::DarkOnLight).unwrap();
        let b = photo(w, h, 1).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{w}x{h}")),
            &(a, b),
            |bench, (a, b)| bench.iter(|| ssim(black_box(a), black_box(b), &SsimParams::default()).unwrap()),
        );
    }
    group.finish();
}

fn bench_warp(c: &mut Criterion) {
    let mut group = c.benchmark_group("warp");
    for (w, h) in SIZES {
        let img = photo(w, h, 2).unwrap();
        let key = tilt_keystone(w, h, 10.0, 4.0).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{w}x{h}")),
            &img,
            |bench, img| bench.iter(|| warp(black_box(img), &key, w, h, 0.0).unwrap()),
        );
    }
    group.finish();
}

fn bench_cycle(c: &mut Criterion) {
    let mut group = c.benchmark_group("cycle");
    group.sample_size(20);
    let margin = MarkerLayout::default().margin_px();
    let models = OpticsModels::default();
    for (w, h) in SIZES {
        let state = line_art(w, h, 3, Polarity::DarkOnLight).unwrap().pad(margin, 0.0);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{w}x{h}")),
            &state,
            |bench, state| bench.iter(|| cycle(black_box(state), None, &models, None).unwrap()),
        );
    }
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    bench_ssim(c);
    bench_warp(c);
    bench_cycle(c);
}
