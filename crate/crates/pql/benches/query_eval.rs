//! Query evaluation on one thread against the rayon pool. Build with
//! `--no-default-features` to time the sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pql::bench::{generate_collection, index_collection, template_queries};
use pql::query::{evaluate, EvalOptions, Query};
use pql::statespace::Limits;

fn query_eval(c: &mut Criterion) {
    let repo = generate_collection(3, 64, 10, 30);
    let (index, _) = index_collection(&repo, &[0.75, 1.0], Limits::default(), 1)
        .expect("generated nets are sound");
    let queries: Vec<Query> = template_queries(&repo, None, 1, 3)
        .into_iter()
        .map(|(_, q)| q)
        .collect();
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);

    let mut group = c.benchmark_group("query_eval");
    group.sample_size(10);
    for threads in [1, cores.max(4)] {
        let opts = EvalOptions {
            threads,
            ..EvalOptions::default()
        };
        group.bench_with_input(BenchmarkId::new("threads", threads), &opts, |b, opts| {
            b.iter(|| {
                for q in &queries {
                    evaluate(q, &repo, Some(&index), opts).expect("no variables");
                }
            })
        });
    }
    group.finish();

    let small = pql::bench::prefix(&repo, 16);
    let mut group = c.benchmark_group("indexing");
    group.sample_size(10);
    for threads in [1, cores.max(4)] {
        group.bench_with_input(BenchmarkId::new("threads", threads), &threads, |b, &t| {
            b.iter(|| index_collection(&small, &[0.75, 1.0], Limits::default(), t).expect("sound"))
        });
    }
    group.finish();
}

criterion_group!(benches, query_eval);
criterion_main!(benches);
