//! Invariants of the permutation tests on randomly generated small experiments.

use std::collections::BTreeMap;

use groupperm_core::inference::replicate_exposures;
use groupperm_core::oracle::{exact_pvalue, feasibility_check, rational_to_f64};
use groupperm_core::{
    shift_test, test_pairwise, test_sharp, AttributeVector, Design, Direction, Estimator,
    Experiment, Exposure, ExposureMapping, GroupLabels, NullSpec, OutcomeVector, SrDesign,
    TestConfig, TestStatistic,
};
use proptest::prelude::*;

const LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone)]
struct Case {
    attributes: Vec<u32>,
    labels: Vec<usize>,
    outcomes: Vec<f64>,
}

impl Case {
    fn experiment(&self) -> Experiment {
        Experiment::new(
            AttributeVector::new(self.attributes.clone(), &[0, 1]).unwrap(),
            GroupLabels::from_ids(&self.labels),
            OutcomeVector::new(self.outcomes.clone()).unwrap(),
            ExposureMapping::Count,
        )
        .unwrap()
    }

    fn design(&self, exp: &Experiment) -> Design {
        Design::Sr(SrDesign::from_observed(exp.labels(), exp.attributes().values()).unwrap())
    }
}

/// Two or three groups of two to four units, N at most 8.
fn small_case() -> impl Strategy<Value = Case> {
    prop::collection::vec(2usize..=4, 2..=3)
        .prop_filter("N <= 8", |sizes| sizes.iter().sum::<usize>() <= 8)
        .prop_flat_map(|sizes| {
            let n: usize = sizes.iter().sum();
            let labels: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &s)| vec![g; s])
                .collect();
            (
                Just(labels),
                prop::collection::vec(0u32..=1, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )
        })
        .prop_map(|(labels, attributes, outcomes)| Case {
            attributes,
            labels,
            outcomes,
        })
}

fn cfg(seed: u64, replicates: usize) -> TestConfig {
    TestConfig {
        replicates,
        seed,
        ..TestConfig::default()
    }
}

fn tallies(
    attributes: &[u32],
    w: &[Exposure],
    keep: impl Fn(usize) -> bool,
) -> BTreeMap<(u32, Exposure), usize> {
    let mut out = BTreeMap::new();
    for i in (0..w.len()).filter(|&i| keep(i)) {
        *out.entry((attributes[i], w[i].clone())).or_insert(0) += 1;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sharp_replicates_are_reachable_and_keep_attribute_tallies(case in small_case(), seed in any::<u64>()) {
        let exp = case.experiment();
        let design = case.design(&exp);
        let null = NullSpec::Sharp { c1: Exposure::Count(1), c2: Exposure::Count(0) };
        let observed = exp.exposures().values();
        let all = tallies(&case.attributes, observed, |_| true);
        // Designs where an arm is empty have no test to replicate.
        let Ok(replicates) = replicate_exposures(&exp, &design, &null, seed, 8) else {
            return Ok(());
        };
        for w in replicates {
            prop_assert_eq!(&tallies(&case.attributes, &w, |_| true), &all);
            prop_assert!(feasibility_check(&w, &design, exp.attributes(), exp.mapping(), LIMIT).unwrap());
        }
    }

    #[test]
    fn pairwise_replicates_keep_the_focal_set(case in small_case(), seed in any::<u64>()) {
        let exp = case.experiment();
        let design = case.design(&exp);
        let (c1, c2) = (Exposure::Count(1), Exposure::Count(0));
        let observed = exp.exposures().values();
        let focal = |w: &[Exposure]| -> Vec<bool> { w.iter().map(|x| *x == c1 || *x == c2).collect() };
        let u = focal(observed);
        let null = NullSpec::Pairwise { c1: c1.clone(), c2: c2.clone(), subgroup: None };
        let by_cell = tallies(&case.attributes, observed, |i| u[i]);
        let Ok(replicates) = replicate_exposures(&exp, &design, &null, seed, 8) else {
            return Ok(());
        };
        for w in replicates {
            prop_assert_eq!(focal(&w), u.clone());
            prop_assert_eq!(&tallies(&case.attributes, &w, |i| u[i]), &by_cell);
        }
    }

    #[test]
    fn pvalues_are_bounded_and_reproducible(case in small_case(), seed in any::<u64>()) {
        let exp = case.experiment();
        let design = case.design(&exp);
        let (c1, c2) = (Exposure::Count(1), Exposure::Count(0));
        let Ok(valid) = test_sharp(&exp, &design, &c1, &c2, &cfg(seed, 99)) else {
            return Ok(());
        };
        prop_assert!(valid.p_value >= 1.0 / 100.0 && valid.p_value <= 1.0);
        let unbiased = test_sharp(&exp, &design, &c1, &c2, &TestConfig { estimator: Estimator::Unbiased, ..cfg(seed, 99) }).unwrap();
        prop_assert!(unbiased.p_value <= valid.p_value);
        prop_assert!((valid.p_value * 100.0 - (unbiased.p_value * 99.0 + 1.0)).abs() < 1e-9);
        let again = test_sharp(&exp, &design, &c1, &c2, &cfg(seed, 99)).unwrap();
        prop_assert_eq!(again, valid);
    }

    #[test]
    fn constant_outcomes_never_reject(case in small_case(), y in -3.0f64..3.0) {
        let case = Case { outcomes: vec![y; case.attributes.len()], ..case };
        let exp = case.experiment();
        let design = case.design(&exp);
        let (c1, c2) = (Exposure::Count(1), Exposure::Count(0));
        if let Ok(r) = test_pairwise(&exp, &design, &c1, &c2, None, &cfg(1, 50)) {
            prop_assert_eq!(r.p_value, 1.0);
            let null = NullSpec::Pairwise { c1, c2, subgroup: None };
            let exact = exact_pvalue(&exp, &design, &null, &TestStatistic::DiffInMeans, Direction::TwoSided, LIMIT).unwrap();
            prop_assert_eq!(rational_to_f64(&exact), 1.0);
        }
    }

    #[test]
    fn shifted_data_at_the_true_shift_matches_the_unshifted_test(
        case in small_case(),
        delta in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let exp = case.experiment();
        let design = case.design(&exp);
        let (c1, c2) = (Exposure::Count(1), Exposure::Count(0));
        let Ok(base) = test_pairwise(&exp, &design, &c1, &c2, None, &cfg(seed, 200)) else {
            return Ok(());
        };
        let shifted: Vec<f64> = case
            .outcomes
            .iter()
            .zip(exp.exposures().values())
            .map(|(y, w)| if *w == c1 { y + delta } else { *y })
            .collect();
        let moved = exp.with_outcomes(OutcomeVector::new(shifted).unwrap()).unwrap();
        let r = shift_test(&moved, &design, &c1, &c2, delta, None, &cfg(seed, 200)).unwrap();
        prop_assert!((r.statistic - base.statistic).abs() < 1e-9);
        prop_assert_eq!(r.null_draws.len(), base.null_draws.len());
        for (a, b) in r.null_draws.iter().zip(&base.null_draws) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
