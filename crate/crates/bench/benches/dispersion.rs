use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use disperse_bench::{example, line_from_end, multi_root};
use disperse_core::{dfs_p1tree, generate, run, Dispersion, GraphKind, RunOptions, SchedulerPolicy, TraceMode};

fn quiet(policy: SchedulerPolicy) -> RunOptions {
    RunOptions { policy, epoch_cap: 1_000_000, trace_mode: TraceMode::Markers, ..RunOptions::default() }
}

fn trees(c: &mut Criterion) {
    let g = generate(GraphKind::RandomConnected, 64, 7).unwrap();
    c.bench_function("dfs_p1tree random:64", |b| b.iter(|| dfs_p1tree(&g, 0)));
}

fn rooted(c: &mut Criterion) {
    c.bench_function("example k=6", |b| b.iter(|| run(example(), &Dispersion, RunOptions::default()).unwrap()));
    let mut group = c.benchmark_group("line from end");
    group.sample_size(10);
    for k in [32, 64, 128] {
        group.bench_with_input(BenchmarkId::new("round_robin", k), &k, |b, &k| {
            b.iter(|| run(line_from_end(k), &Dispersion, quiet(SchedulerPolicy::RoundRobin)).unwrap())
        });
        // without the ground-truth monitor
        group.bench_with_input(BenchmarkId::new("unchecked", k), &k, |b, &k| {
            let opts = RunOptions { check_invariants: false, ..quiet(SchedulerPolicy::RoundRobin) };
            b.iter(|| run(line_from_end(k), &Dispersion, opts).unwrap())
        });
    }
    group.finish();
}

fn general(c: &mut Criterion) {
    let mut group = c.benchmark_group("general");
    group.sample_size(10);
    group.bench_function("random:48 roots=3", |b| {
        b.iter(|| run(multi_root(48, 40, 3, 5), &Dispersion, quiet(SchedulerPolicy::Random { seed: 5 })).unwrap())
    });
    group.finish();
}

criterion_group!(benches, trees, rooted, general);
criterion_main!(benches);
