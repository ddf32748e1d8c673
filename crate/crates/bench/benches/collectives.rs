use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dpdlib::apps::{floyd_warshall_parallel, matrix_reduce, rank_matrix, WeightedGraph};
use dpdlib::groups::ops;
use dpdlib::{simulate, DistSeq};

fn collectives(c: &mut Criterion) {
    let mut group = c.benchmark_group("sim_collectives");
    group.sample_size(10);
    for q in [8usize, 64] {
        group.bench_with_input(BenchmarkId::new("reduce", q), &q, |b, &q| {
            b.iter(|| simulate(q, 1, |w| w.reduce(w.comm().rank() as i64, &ops::sum(), 0).unwrap()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("all_reduce", q), &q, |b, &q| {
            b.iter(|| simulate(q, 1, |w| w.all_reduce(w.comm().rank() as i64, &ops::sum()).unwrap()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("scan_concat", q), &q, |b, &q| {
            b.iter(|| {
                simulate(q, 1, |w| {
                    DistSeq::tabulate(w, q, |i| i.to_string())
                        .unwrap()
                        .scan(&ops::concat())
                        .unwrap()
                        .into_local()
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

fn matrix_reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("sim_matreduce");
    group.sample_size(10);
    for k in [16usize, 48] {
        group.bench_with_input(BenchmarkId::new("tree_and_linear_p8", k), &k, |b, &k| {
            b.iter(|| simulate(8, 0, |w| matrix_reduce(w, rank_matrix(0, w.comm().rank(), k)).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn floyd(c: &mut Criterion) {
    let mut group = c.benchmark_group("sim_floyd");
    group.sample_size(10);
    let g = WeightedGraph::seeded(32, 0.3, 7);
    for q in [1usize, 2, 4] {
        group.bench_with_input(BenchmarkId::new("n32", q), &q, |b, &q| {
            b.iter(|| simulate(q * q, 0, |w| floyd_warshall_parallel(w, &g, q).unwrap()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, collectives, matrix_reduction, floyd);
criterion_main!(benches);
