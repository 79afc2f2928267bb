use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use framedrop::channel;
use framedrop::dae::{self, EvalSet};
use framedrop::frames;
use framedrop::regularizers::{etf_loss_grad, EtfLossVariant};
use framedrop_bench::*;

fn frame_kernels(c: &mut Criterion) {
    let f = gaussian_frame();
    c.bench_function("coherence 75x150", |b| b.iter(|| frames::coherence(&f).unwrap()));
    c.bench_function("approximate_etf 75x150 x10 sweeps", |b| b.iter(|| frames::approximate_etf(75, 150, 10, SEED).unwrap()));
}

fn decoders(c: &mut Criterion) {
    let (fs, y) = subframe_and_observation();
    c.bench_function("decode_ls 75x100", |b| b.iter(|| channel::decode_ls(&fs, &y).unwrap()));
    c.bench_function("decode_unrolled_gd(10) 75x100", |b| b.iter(|| channel::decode_unrolled_gd(&fs, &y, 10).unwrap()));
}

fn training(c: &mut Criterion) {
    let a = raw_encoder();
    c.bench_function("etf_loss_grad linf 75x150", |b| b.iter(|| etf_loss_grad(&a, EtfLossVariant::MaxAbs)));
    let (model, batch) = dae_and_batch(100);
    c.bench_function("dae grad, batch of 100", |b| b.iter(|| dae::grad(&model, &batch, 0.1, EtfLossVariant::MaxAbs).unwrap()));
    c.bench_function("test-set evaluation, 1000 signals / 50 patterns", |b| {
        b.iter_batched(|| EvalSet::draw(&model, 1000, 50, SEED), |eval| eval.mse(&model), BatchSize::LargeInput)
    });
}

criterion_group!(benches, frame_kernels, decoders, training);
criterion_main!(benches);
