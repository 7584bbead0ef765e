//! One conditional draw by rejection from the design against one stratum shuffle.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use groupperm_bench::{balanced_groups, cr_design, focal_of};
use groupperm_core::oracle::rejection_sample_conditional;
use groupperm_core::rng::stream_rng;
use groupperm_core::symmetry::stabilizer_strata;
use groupperm_core::{Exposure, ExposureMapping};

fn samplers(c: &mut Criterion) {
    let (c1, c2) = (Exposure::Count(1), Exposure::Count(2));
    let mut group = c.benchmark_group("conditional draw");
    for k in [3usize, 4, 5, 6] {
        let (attributes, labels) = balanced_groups(k);
        let design = cr_design(&labels);
        let focal = focal_of(&attributes, &labels, &c1, &c2);

        let mut rng = stream_rng(7, k as u64);
        group.bench_with_input(BenchmarkId::new("rejection", k), &k, |b, _| {
            b.iter(|| {
                rejection_sample_conditional(
                    &design,
                    &attributes,
                    &ExposureMapping::Count,
                    &c1,
                    &c2,
                    None,
                    &focal,
                    u64::MAX,
                    &mut rng,
                )
                .unwrap()
            })
        });

        let w = ExposureMapping::Count
            .from_labels(&labels, &attributes)
            .unwrap()
            .into_values();
        let joint: Vec<(u32, bool)> = attributes
            .values()
            .iter()
            .copied()
            .zip(focal.iter().copied())
            .collect();
        let strata = stabilizer_strata(&joint);
        let mut rng = stream_rng(8, k as u64);
        group.bench_with_input(BenchmarkId::new("permutation", k), &k, |b, _| {
            let mut x = w.clone();
            b.iter(|| {
                strata.shuffle_within(&mut x, &mut rng);
                black_box(&x);
            })
        });
    }
    group.finish();
}

criterion_group!(benches, samplers);
criterion_main!(benches);
