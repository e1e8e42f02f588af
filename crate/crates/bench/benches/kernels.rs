use criterion::{black_box, criterion_group, criterion_main, Criterion};

use thermogeo_bench::textured_image;
use thermogeo_core::build_basis;
use thermogeo_core::metrics::{glcm, haralick, ssim, GLCM_LEVELS};
use thermogeo_core::nnet::ops::conv2d_forward;
use thermogeo_core::nnet::Tensor;
use thermogeo_core::Rng;

fn basis(c: &mut Criterion) {
    let mut g = c.benchmark_group("basis");
    g.sample_size(10);
    g.bench_function("build 64x64 k100", |b| {
        b.iter(|| build_basis(black_box(64), 64, 100).unwrap())
    });
    g.finish();
}

fn conv(c: &mut Criterion) {
    let mut rng = Rng::new(1);
    let x = Tensor::<f32>::from_fn(&[16, 64, 64], |_| rng.uniform(-1.0, 1.0) as f32);
    let w = Tensor::<f32>::from_fn(&[32, 16, 4, 4], |_| rng.uniform(-0.1, 0.1) as f32);
    let bias = Tensor::<f32>::zeros(&[32]);
    c.bench_function("conv 16->32 64x64 stride 2", |b| {
        b.iter(|| conv2d_forward(black_box(&x), &w, &bias, 2, 1).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let a = textured_image(128, 1);
    let b = textured_image(128, 2);
    c.bench_function("ssim 128x128", |bn| {
        bn.iter(|| ssim(black_box(&a), &b).unwrap())
    });
    c.bench_function("glcm + haralick 128x128", |bn| {
        bn.iter(|| haralick(&glcm(black_box(&a), GLCM_LEVELS, 1).unwrap()).unwrap())
    });
}

criterion_group!(benches, basis, conv, metrics);
criterion_main!(benches);
