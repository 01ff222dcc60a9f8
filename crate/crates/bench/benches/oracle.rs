use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use creditnet_core::oracle::centralized::enumerate_centralized;
use creditnet_core::oracle::{count_forests, StationaryConfig, DEFAULT_UNIT_EDGE_CAP};
use creditnet_core::{generate, ExactOracle, OracleConfig, TopologyKind, TopologySpec, TransactionMatrix};

fn build_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for (name, kind, n, cap) in [
        ("cycle-5-2", TopologyKind::Cycle, 5, 2),
        ("star-6-3", TopologyKind::Star, 6, 3),
        ("complete-4-2", TopologyKind::Complete, 4, 2),
        ("complete-5-1", TopologyKind::Complete, 5, 1),
    ] {
        let (net, initial) = generate(&TopologySpec::new(kind, n, cap)).unwrap();
        let config = OracleConfig::default();
        let lambda = TransactionMatrix::uniform(n).unwrap();
        group.bench_function(BenchmarkId::new("build", name), |b| {
            b.iter(|| ExactOracle::build(&net, &config).unwrap())
        });
        let oracle = ExactOracle::build(&net, &config).unwrap();
        group.bench_function(BenchmarkId::new("stationary", name), |b| {
            b.iter(|| oracle.stationary(&lambda, Some(&initial), &config.stationary).unwrap())
        });
    }
    group.finish();
}

fn forests(c: &mut Criterion) {
    let (net, _) = generate(&TopologySpec::new(TopologyKind::Complete, 6, 2)).unwrap();
    c.bench_function("count_forests/complete-6-2", |b| {
        b.iter(|| count_forests(&net, None, DEFAULT_UNIT_EDGE_CAP).unwrap())
    });
}

fn centralized(c: &mut Criterion) {
    let config = StationaryConfig::default();
    c.bench_function("centralized/6-leaves-8-credit", |b| {
        b.iter(|| enumerate_centralized(6, 8, &config).unwrap())
    });
}

criterion_group!(benches, build_and_solve, forests, centralized);
criterion_main!(benches);
