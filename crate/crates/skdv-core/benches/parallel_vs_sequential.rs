//! Same kernels under the rayon pool and under plain iteration.
//!
//! On a single core the two should be close; the gap measures the pool overhead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use skdv_core::counterexamples::{cor41_value, Quadrature};
use skdv_core::evolution::SmoothingQuery;
use skdv_core::fre::{evaluate_fre, FreQuery};
use skdv_core::par::Parallelism;
use skdv_core::spectral::Regularity;

const MODES: [(&str, Parallelism); 2] = [("parallel", Parallelism::PARALLEL), ("sequential", Parallelism::SEQUENTIAL)];

fn fre_sup(c: &mut Criterion) {
    let mut g = c.benchmark_group("fre_probU");
    g.sample_size(10);
    for (name, par) in MODES {
        let mut q = FreQuery::catalog("lem:probU", Regularity::new(0.5, 0.0, 0.2)).unwrap().at(1e4, 100.0);
        q.parallelism = par;
        q.check_refinement = false;
        g.bench_with_input(BenchmarkId::from_parameter(name), &q, |b, q| b.iter(|| evaluate_fre(black_box(q)).unwrap()));
    }
    g.finish();
}

fn dualized_form(c: &mut Criterion) {
    let mut g = c.benchmark_group("cor41_N256");
    g.sample_size(10);
    let r = Regularity::new(3.5, 0.0, 0.0);
    for (name, par) in MODES {
        g.bench_function(name, |b| b.iter(|| cor41_value(black_box(256.0), &r, Quadrature::default(), par)));
    }
    g.finish();
}

fn smoothing(c: &mut Criterion) {
    let mut g = c.benchmark_group("smoothing_cubic");
    g.sample_size(10);
    for (name, par) in MODES {
        let mut q = SmoothingQuery::new("duhamel_u_cubic".parse().unwrap(), Regularity::new(0.75, 0.0, 0.0), vec![1]);
        q.grid = skdv_core::spectral::Grid::new(256, 2.0 * std::f64::consts::PI).unwrap();
        q.parallelism = par;
        g.bench_function(name, |b| b.iter(|| skdv_core::evolution::smoothing_probe(black_box(&q)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, fre_sup, dualized_form, smoothing);
criterion_main!(benches);
