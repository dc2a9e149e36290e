use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use peposd::channel::{llrs, noise_variance};
use peposd::osd::preprocess;
use peposd::{generate_eps, DecoderConfig, EpOrder, EpTable, PepOsdDecoder, SclDecoder};
use peposd_bench::{code, frames};

const CODES: [(usize, usize, usize); 3] = [(64, 46, 6), (64, 53, 6), (128, 108, 11)];

fn bench_preprocess(c: &mut Criterion) {
    let mut group = c.benchmark_group("preprocess");
    for (n, k, m) in CODES {
        let code = code(n, k, m);
        let ys = frames(&code, 3.0, 64, 1);
        group.bench_function(BenchmarkId::from_parameter(format!("{n}_{k}_{m}")), |b| {
            let mut i = 0;
            b.iter(|| {
                i = (i + 1) % ys.len();
                black_box(preprocess(&ys[i], &code.gen.g).unwrap())
            })
        });
    }
    group.finish();
}

fn bench_peposd(c: &mut Criterion) {
    let mut group = c.benchmark_group("peposd");
    for (order, name) in [(EpOrder::IwHw, "iwhw"), (EpOrder::Pw { alpha: 2.0, beta: 3.0 }, "pw")] {
        let table = EpTable::generate(100, 4, order);
        for (n, k, m) in CODES {
            let code = Arc::new(code(n, k, m));
            let ys = frames(&code, 3.0, 256, 2);
            let dec = PepOsdDecoder::for_code(code, &table, DecoderConfig::new(100, 4, 20, order)).unwrap();
            group.bench_function(BenchmarkId::new(name, format!("{n}_{k}_{m}")), |b| {
                let mut i = 0;
                b.iter(|| {
                    i = (i + 1) % ys.len();
                    black_box(dec.decode(&ys[i]).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn bench_scl(c: &mut Criterion) {
    let mut group = c.benchmark_group("ca_scl");
    for (n, k, m) in CODES {
        let code = code(n, k, m);
        let sigma2 = noise_variance(3.0, code.spec.rate());
        let ls: Vec<Vec<f64>> = frames(&code, 3.0, 64, 3).iter().map(|y| llrs(y, sigma2)).collect();
        for list in [8, 32] {
            let mut dec = SclDecoder::new(&code.spec, list).unwrap();
            group.bench_function(BenchmarkId::new(format!("L{list}"), format!("{n}_{k}_{m}")), |b| {
                let mut i = 0;
                b.iter(|| {
                    i = (i + 1) % ls.len();
                    black_box(dec.decode(&ls[i]).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn bench_ep_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("ep_generation");
    for (w_i, w_h) in [(50, 3), (100, 4), (78, 12)] {
        group.bench_function(BenchmarkId::new("generate", format!("{w_i}_{w_h}")), |b| {
            b.iter(|| black_box(generate_eps(w_i, w_h)))
        });
        group.bench_function(BenchmarkId::new("sorted_pw", format!("{w_i}_{w_h}")), |b| {
            b.iter(|| black_box(EpTable::generate(w_i, w_h, EpOrder::Pw { alpha: 2.0, beta: 3.0 })))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_preprocess, bench_peposd, bench_scl, bench_ep_generation);
criterion_main!(benches);
