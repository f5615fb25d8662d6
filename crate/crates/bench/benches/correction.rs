use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use seacolor_core::chart::{render_chart, sample_patches, DEFAULT_TRIM};
use seacolor_core::estimate::{estimate_closed_form, refine_least_squares};
use seacolor_core::model::{forward_degrade, invert};
use seacolor_core::pipeline::{correct_sparse, Keypoint, SparseRangeMap};
use seacolor_core::{
    reference_chart, AttenuationCoeffs, ChartLayout, LinearImage, Provenance, RangeField, VeilingLight,
};

fn frame(w: usize, h: usize) -> LinearImage {
    LinearImage::from_fn(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        [0.2 + 0.6 * u, 0.8 - 0.5 * v, 0.3 + 0.4 * u * v]
    })
    .unwrap()
}

fn coeffs() -> (AttenuationCoeffs, VeilingLight) {
    (
        AttenuationCoeffs::new([0.9, 0.35, 0.2], [0.4, 0.5, 0.6], Provenance::Manual).unwrap(),
        VeilingLight::new([0.08, 0.35, 0.45]).unwrap(),
    )
}

fn dense(c: &mut Criterion) {
    let (coeffs, b_inf) = coeffs();
    let raw = frame(640, 480);
    let scalar = RangeField::Scalar(1.5);
    let per_pixel = RangeField::PerPixel {
        width: 640,
        height: 480,
        values: (0..640 * 480).map(|i| 0.5 + (i % 640) as f64 / 320.0).collect(),
    };
    c.bench_function("invert 640x480 scalar range", |b| {
        b.iter(|| invert(black_box(&raw), &coeffs, &b_inf, &scalar).unwrap())
    });
    c.bench_function("invert 640x480 per-pixel range", |b| {
        b.iter(|| invert(black_box(&raw), &coeffs, &b_inf, &per_pixel).unwrap())
    });
    c.bench_function("forward 640x480 scalar range", |b| {
        b.iter(|| forward_degrade(black_box(&raw), &coeffs, &b_inf, &scalar).unwrap())
    });
}

fn sparse(c: &mut Criterion) {
    let (coeffs, b_inf) = coeffs();
    let raw = frame(640, 480);
    let points = (0..30)
        .map(|i| Keypoint {
            x: 20 + (i * 97) % 600,
            y: 20 + (i * 61) % 440,
            z: 0.5 + 0.1 * i as f64,
        })
        .collect();
    let map = SparseRangeMap::new(points, 1.0).unwrap();
    c.bench_function("correct_sparse 30 patches of 64 px", |b| {
        b.iter(|| correct_sparse(black_box(&raw), &map, &coeffs, &b_inf, 64).unwrap())
    });
}

fn estimation(c: &mut Criterion) {
    let (truth, b_inf) = coeffs();
    let layout = ChartLayout::classic_grid(8, 8, 32, 8).unwrap();
    let reference = reference_chart();
    let bg = LinearImage::filled(6 * 40 + 16, 4 * 40 + 16, [0.3; 3]).unwrap();
    let chart = render_chart(&bg, &layout, &reference).unwrap();
    let z = 0.8;
    let raw = forward_degrade(&chart, &truth, &b_inf, &RangeField::Scalar(z)).unwrap();
    let obs = sample_patches(&raw, &layout, DEFAULT_TRIM).unwrap();
    let init = estimate_closed_form(&obs, &reference, &b_inf, z).unwrap();
    c.bench_function("closed-form estimate", |b| {
        b.iter(|| estimate_closed_form(black_box(&obs), &reference, &b_inf, z).unwrap())
    });
    c.bench_function("least-squares refinement", |b| {
        b.iter(|| refine_least_squares(black_box(&obs), &reference, &b_inf, z, &init).unwrap())
    });
}

criterion_group!(benches, dense, sparse, estimation);
criterion_main!(benches);
