//! Throughput of the randomization tests on a roommate-shaped experiment.

use criterion::{criterion_group, criterion_main, Criterion};
use groupperm_bench::roommates;
use groupperm_core::{pvalue_curve, test_pairwise, Exposure, ShiftGrid, TestConfig, TestStatistic};

fn tests(c: &mut Criterion) {
    let (exp, design) = roommates();
    let (c1, c2) = (Exposure::Count(1), Exposure::Count(0));
    let mut group = c.benchmark_group("roommates");
    group.sample_size(20);
    for statistic in [TestStatistic::DiffInMeans, TestStatistic::Studentized] {
        let cfg = TestConfig {
            statistic: statistic.clone(),
            replicates: 1000,
            ..TestConfig::default()
        };
        group.bench_function(
            format!("pairwise test, L=1000, {}", statistic.name()),
            |b| b.iter(|| test_pairwise(&exp, &design, &c1, &c2, None, &cfg).unwrap()),
        );
    }
    let grid = ShiftGrid::new(-1.0, 1.0, 0.05).unwrap();
    let cfg = TestConfig {
        replicates: 1000,
        ..TestConfig::default()
    };
    group.bench_function("p-value curve, 41 shifts, L=1000", |b| {
        b.iter(|| pvalue_curve(&exp, &design, &c1, &c2, None, &grid, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, tests);
criterion_main!(benches);
