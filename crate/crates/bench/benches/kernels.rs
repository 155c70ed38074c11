use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use surrobid_bench::{bundled_instance, smooth_samples};
use surrobid_core::entropy::acquisition;
use surrobid_core::market::{clear_market, Bid};
use surrobid_core::optimizer::minimize_acquisition;
use surrobid_core::{EntropyConfig, KernelHyper, KrigingModel, OptimizerConfig};

fn kriging(c: &mut Criterion) {
    let mut group = c.benchmark_group("kriging_fit");
    for n in [10, 40, 100] {
        let samples = smooth_samples(2, n, 7);
        let hyper = KernelHyper::default_for(2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &samples, |b, s| {
            b.iter(|| KrigingModel::fit(black_box(s), &hyper).unwrap())
        });
    }
    group.finish();

    let model =
        KrigingModel::fit(&smooth_samples(2, 100, 7), &KernelHyper::default_for(2)).unwrap();
    c.bench_function("kriging_predict_n100", |b| {
        b.iter(|| model.predict(black_box(&[0.41, 0.77])).unwrap())
    });
    let entropy = EntropyConfig::new(2000.0).unwrap();
    c.bench_function("acquisition_n100", |b| {
        b.iter(|| acquisition(&model, black_box(&[0.41, 0.77]), &entropy).unwrap())
    });
}

fn acquisition_search(c: &mut Criterion) {
    let model = KrigingModel::fit(&smooth_samples(2, 40, 3), &KernelHyper::default_for(2)).unwrap();
    let mut cfg = OptimizerConfig::new(2, 100, 0);
    cfg.entropy.alpha = 2000.0;
    c.bench_function("minimize_acquisition_n40", |b| {
        b.iter(|| minimize_acquisition(&model, &cfg, 1))
    });
}

fn clearing(c: &mut Criterion) {
    for (stem, bid) in [
        ("arbitrage_t2", Bid::new(25.0, 25.0)),
        ("desk_3bus_t6", Bid::new(64.0, 36.8)),
    ] {
        let inst = bundled_instance(stem);
        c.bench_function(&format!("clear_market_{stem}"), |b| {
            b.iter(|| clear_market(&inst, black_box(&bid)).unwrap())
        });
    }
}

criterion_group!(benches, kriging, acquisition_search, clearing);
criterion_main!(benches);
