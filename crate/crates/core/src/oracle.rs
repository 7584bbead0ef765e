//! Exact reference computations for small experiments.
//!
//! Everything here enumerates the design support, so it is only usable at
//! desk scale and guarded accordingly. Probabilities are exact rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::combinatorics::{distinct_permutations, Odometer};
use crate::designs::{sr_from_observed, Design};
use crate::error::{check_len, Error, Result};
use crate::inference::{
    arms_of, exceeds_obs, Direction, Evaluator, Experiment, NullSpec, TestStatistic,
};
use crate::model::{
    AttributeCode, AttributeVector, Exposure, ExposureMapping, ExposureVector, GroupLabels,
    OutcomeVector,
};
use crate::symmetry::guard;

pub use crate::symmetry::ENUMERATION_GUARD;

/// Default cap on rejection-sampling attempts per accepted draw.
pub const DEFAULT_ATTEMPT_CAP: u64 = 10_000_000;

/// Every label vector in the support of `design`, each once.
pub fn enumerate_assignments(design: &Design, limit: u64) -> Result<Vec<GroupLabels>> {
    guard(&design.support_size(), limit)?;
    let k = design.num_groups();
    match design {
        Design::Cr(d) => Ok(distinct_permutations(&d.template())
            .into_iter()
            .map(|labels| GroupLabels::from_raw(labels, k))
            .collect()),
        Design::Sr(d) => {
            let strata: Vec<(&Vec<usize>, Vec<Vec<usize>>)> = d
                .stratum_members()
                .iter()
                .map(|(code, units)| (units, distinct_permutations(&d.stratum_template(*code))))
                .collect();
            let sizes = strata.iter().map(|(_, arr)| arr.len()).collect();
            Ok(Odometer::new(sizes)
                .map(|choice| {
                    let mut labels = vec![0; d.len()];
                    for ((units, arr), &c) in strata.iter().zip(&choice) {
                        for (&i, &l) in units.iter().zip(&arr[c]) {
                            labels[i] = l;
                        }
                    }
                    GroupLabels::from_raw(labels, k)
                })
                .collect())
        }
    }
}

/// A probability distribution over exposure vectors with exact weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    atoms: BTreeMap<Vec<Exposure>, BigRational>,
}

impl ExactDistribution {
    fn from_counts(counts: BTreeMap<Vec<Exposure>, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let atoms = counts
            .into_iter()
            .map(|(w, c)| (w, BigRational::new(BigInt::from(c), BigInt::from(total))))
            .collect();
        ExactDistribution { atoms }
    }

    pub fn atoms(&self) -> &BTreeMap<Vec<Exposure>, BigRational> {
        &self.atoms
    }

    pub fn probability(&self, w: &[Exposure]) -> BigRational {
        self.atoms.get(w).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.atoms
            .values()
            .fold(BigRational::zero(), |acc, p| acc + p)
    }

    /// Whether all atoms carry the same probability.
    pub fn is_uniform(&self) -> bool {
        let mut probs = self.atoms.values();
        match probs.next() {
            Some(first) => probs.all(|p| p == first),
            None => true,
        }
    }

    pub fn to_f64(&self) -> Vec<(Vec<Exposure>, f64)> {
        self.atoms
            .iter()
            .map(|(w, p)| (w.clone(), rational_to_f64(p)))
            .collect()
    }
}

/// Nearest `f64` to an exact probability.
pub fn rational_to_f64(p: &BigRational) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

fn exposure_counts(
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    limit: u64,
) -> Result<BTreeMap<Vec<Exposure>, u64>> {
    check_len(design.len(), attributes.len())?;
    let mut counts = BTreeMap::new();
    for labels in enumerate_assignments(design, limit)? {
        let w = mapping.from_labels(&labels, attributes)?.into_values();
        *counts.entry(w).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Law of `W = c(Z(L))` for `L` uniform on the design support.
pub fn exact_exposure_distribution(
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    limit: u64,
) -> Result<ExactDistribution> {
    Ok(ExactDistribution::from_counts(exposure_counts(
        design, attributes, mapping, limit,
    )?))
}

/// Conditioning indicator `u(W)`: units exposed to `c1` or `c2`, restricted to
/// attribute level `subgroup` when given.
pub fn focal_indicator(
    w: &[Exposure],
    attributes: &AttributeVector,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
) -> Vec<bool> {
    w.iter()
        .zip(attributes.values())
        .map(|(x, &a)| (x == c1 || x == c2) && subgroup.is_none_or(|s| s == a))
        .collect()
}

/// Law of `W` given `u(W) = focal`.
#[allow(clippy::too_many_arguments)]
pub fn exact_conditional_distribution(
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
    focal: &[bool],
    limit: u64,
) -> Result<ExactDistribution> {
    check_len(attributes.len(), focal.len())?;
    let counts: BTreeMap<Vec<Exposure>, u64> = exposure_counts(design, attributes, mapping, limit)?
        .into_iter()
        .filter(|(w, _)| focal_indicator(w, attributes, c1, c2, subgroup) == focal)
        .collect();
    if counts.is_empty() {
        return Err(Error::UnreachableFocalSet);
    }
    Ok(ExactDistribution::from_counts(counts))
}

/// One exact draw from the law of `W` given `u(W) = focal`, by drawing
/// assignments from the design until one matches. Returns the draw and the
/// number of attempts it took.
#[allow(clippy::too_many_arguments)]
pub fn rejection_sample_conditional<R: Rng + ?Sized>(
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
    focal: &[bool],
    cap: u64,
    rng: &mut R,
) -> Result<(ExposureVector, u64)> {
    check_len(design.len(), attributes.len())?;
    check_len(attributes.len(), focal.len())?;
    for attempt in 1..=cap {
        let w = mapping.from_labels(&design.sample(rng), attributes)?;
        if focal_indicator(w.values(), attributes, c1, c2, subgroup) == focal {
            return Ok((w, attempt));
        }
    }
    Err(Error::AttemptCapExceeded { cap })
}

/// Whether some assignment in the design support produces `candidate`.
pub fn feasibility_check(
    candidate: &[Exposure],
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    limit: u64,
) -> Result<bool> {
    check_len(attributes.len(), candidate.len())?;
    guard(&design.support_size(), limit)?;
    for labels in enumerate_assignments(design, limit)? {
        if mapping.from_labels(&labels, attributes)?.values() == candidate {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The design actually used by the tests: a `CR` design is replaced by the
/// `SR` design fixing the observed attribute-by-group tallies.
pub fn analysis_design(exp: &Experiment, design: &Design) -> Result<Design> {
    design.check_observed(exp.labels())?;
    match design {
        Design::Cr(_) => Ok(Design::Sr(sr_from_observed(
            exp.labels(),
            exp.attributes(),
        )?)),
        Design::Sr(_) => Ok(design.clone()),
    }
}

/// Exact randomization p-value `Σ 1{T(W') ≥ T_obs} pr(W' | u(W') = u_obs)`.
pub fn exact_pvalue(
    exp: &Experiment,
    design: &Design,
    null: &NullSpec,
    statistic: &TestStatistic,
    direction: Direction,
    limit: u64,
) -> Result<BigRational> {
    let design = analysis_design(exp, design)?;
    let (c1, c2) = null.contrast();
    let (law, included) = match null {
        NullSpec::Sharp { .. } => (
            exact_exposure_distribution(&design, exp.attributes(), exp.mapping(), limit)?,
            None,
        ),
        NullSpec::Pairwise { subgroup, .. } => {
            let focal = focal_indicator(
                exp.exposures().values(),
                exp.attributes(),
                c1,
                c2,
                *subgroup,
            );
            if !focal.iter().any(|&m| m) {
                return Err(Error::NoFocalUnits);
            }
            let law = exact_conditional_distribution(
                &design,
                exp.attributes(),
                exp.mapping(),
                c1,
                c2,
                *subgroup,
                &focal,
                limit,
            )?;
            (law, Some(focal))
        }
    };
    let fit = included.clone().unwrap_or_else(|| vec![true; exp.len()]);
    let eval = Evaluator::new(statistic, exp.attributes(), exp.outcomes().values(), &fit)?;
    let stat = |w: &[Exposure]| eval.evaluate(&arms_of(w, c1, c2, included.as_deref()));
    let t_obs = stat(exp.exposures().values())?;
    let mut p = BigRational::zero();
    for (w, prob) in law.atoms() {
        if exceeds_obs(stat(w)?, t_obs, direction) {
            p += prob;
        }
    }
    Ok(p)
}

/// Exact law of the exact p-value over the design, for outcomes generated by
/// `outcome(unit, exposure)`. Each entry pairs a p-value with the probability
/// of observing an assignment that yields it. Assignments where the test is
/// undefined (for instance an empty arm) are reported in `undefined`.
#[derive(Debug, Clone)]
pub struct PvalueLaw {
    pub atoms: Vec<(BigRational, BigRational)>,
    pub undefined: BigRational,
}

impl PvalueLaw {
    /// `pr(p ≤ α)` over assignments where the test is defined.
    pub fn rejection_probability(&self, alpha: &BigRational) -> BigRational {
        self.atoms
            .iter()
            .filter(|(p, _)| p <= alpha)
            .fold(BigRational::zero(), |acc, (_, w)| acc + w)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn exact_pvalue_law(
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    null: &NullSpec,
    statistic: &TestStatistic,
    direction: Direction,
    outcome: impl Fn(usize, &Exposure) -> f64,
    limit: u64,
) -> Result<PvalueLaw> {
    let support = enumerate_assignments(design, limit)?;
    let weight = BigRational::new(BigInt::one(), BigInt::from(support.len()));
    let mut by_p: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    let mut undefined = BigRational::zero();
    for labels in support {
        let w = mapping.from_labels(&labels, attributes)?;
        let y: Vec<f64> = w
            .values()
            .iter()
            .enumerate()
            .map(|(i, x)| outcome(i, x))
            .collect();
        let exp = Experiment::new(
            attributes.clone(),
            labels,
            OutcomeVector::new(y)?,
            mapping.clone(),
        )?;
        match exact_pvalue(&exp, design, null, statistic, direction, limit) {
            Ok(p) => *by_p.entry(p).or_insert_with(BigRational::zero) += &weight,
            Err(e) if e.is_guard() => return Err(e),
            Err(_) => undefined += &weight,
        }
    }
    Ok(PvalueLaw {
        atoms: by_p.into_iter().collect(),
        undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{CrDesign, SrDesign};
    use crate::inference::{test_pairwise, TestConfig};
    use crate::rng::stream_rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn counts(v: &[usize]) -> Vec<Exposure> {
        v.iter().map(|&c| Exposure::Count(c)).collect()
    }

    fn figure_a1_left() -> Design {
        let l = GroupLabels::new(vec![0, 0, 0, 1, 1], 2).unwrap();
        Design::Sr(SrDesign::from_observed(&l, &[1, 1, 0, 0, 0]).unwrap())
    }

    #[test]
    fn enumerates_figure_a1_supports() {
        let all = enumerate_assignments(&figure_a1_left(), ENUMERATION_GUARD).unwrap();
        let labels: Vec<Vec<usize>> = all.iter().map(|l| l.labels().to_vec()).collect();
        assert_eq!(
            labels,
            vec![
                vec![0, 0, 0, 1, 1],
                vec![0, 0, 1, 0, 1],
                vec![0, 0, 1, 1, 0]
            ]
        );
        let cr = Design::Cr(CrDesign::new(vec![2, 2]).unwrap());
        assert_eq!(
            enumerate_assignments(&cr, ENUMERATION_GUARD).unwrap().len(),
            6
        );
        let one = Design::Cr(CrDesign::new(vec![3]).unwrap());
        assert_eq!(
            enumerate_assignments(&one, ENUMERATION_GUARD)
                .unwrap()
                .len(),
            1
        );
        let err = enumerate_assignments(&cr, 5).unwrap_err();
        assert_eq!(
            err,
            Error::GuardExceeded {
                size: "6".into(),
                guard: 5
            }
        );
    }

    #[test]
    fn exposure_distributions() {
        let a = AttributeVector::from_codes(vec![1, 1, 0, 0]).unwrap();
        let sr = Design::Sr(
            SrDesign::from_observed(&GroupLabels::new(vec![0, 1, 0, 1], 2).unwrap(), a.values())
                .unwrap(),
        );
        let d = exact_exposure_distribution(&sr, &a, &ExposureMapping::Count, ENUMERATION_GUARD)
            .unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.probability(&counts(&[0, 0, 1, 1])), q(1, 1));

        let cr = Design::Cr(CrDesign::new(vec![2, 2]).unwrap());
        let d = exact_exposure_distribution(&cr, &a, &ExposureMapping::Count, ENUMERATION_GUARD)
            .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.probability(&counts(&[1, 1, 0, 0])), q(1, 3));
        assert_eq!(d.probability(&counts(&[0, 0, 1, 1])), q(2, 3));
        assert_eq!(d.total(), q(1, 1));

        let whole = Design::Cr(CrDesign::new(vec![4]).unwrap());
        let d =
            exact_exposure_distribution(&whole, &a, &ExposureMapping::Multiset, ENUMERATION_GUARD)
                .unwrap();
        assert_eq!(d.len(), 1);
        let (w, p) = d.atoms().iter().next().unwrap();
        assert_eq!(p, &q(1, 1));
        assert_eq!(w[0], Exposure::multiset(vec![0, 0, 1]));
        assert_eq!(w[3], Exposure::multiset(vec![0, 1, 1]));
    }

    #[test]
    fn conditional_distributions() {
        let a = AttributeVector::from_codes(vec![1, 1, 0, 0]).unwrap();
        let cr = Design::Cr(CrDesign::new(vec![2, 2]).unwrap());
        let (c0, c1) = (Exposure::Count(0), Exposure::Count(1));
        // Every W here has only exposures 0 and 1, so the full focal set keeps
        // both atoms with their 1/3 and 2/3 weights.
        let all = [true; 4];
        let d = exact_conditional_distribution(
            &cr,
            &a,
            &ExposureMapping::Count,
            &c0,
            &c1,
            None,
            &all,
            ENUMERATION_GUARD,
        )
        .unwrap();
        assert_eq!(d.probability(&counts(&[1, 1, 0, 0])), q(1, 3));
        assert_eq!(d.probability(&counts(&[0, 0, 1, 1])), q(2, 3));
        assert!(!d.is_uniform());

        let c2 = Exposure::Count(2);
        let err = exact_conditional_distribution(
            &cr,
            &a,
            &ExposureMapping::Count,
            &c2,
            &c1,
            None,
            &all,
            ENUMERATION_GUARD,
        )
        .unwrap_err();
        assert_eq!(err, Error::UnreachableFocalSet);
    }

    #[test]
    fn rejection_sampler_point_mass() {
        let a = AttributeVector::from_codes(vec![1, 1, 0, 0]).unwrap();
        let sr = Design::Sr(
            SrDesign::from_observed(&GroupLabels::new(vec![0, 1, 0, 1], 2).unwrap(), a.values())
                .unwrap(),
        );
        let (c0, c1) = (Exposure::Count(0), Exposure::Count(1));
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            let (w, attempts) = rejection_sample_conditional(
                &sr,
                &a,
                &ExposureMapping::Count,
                &c0,
                &c1,
                None,
                &[true; 4],
                10,
                &mut rng,
            )
            .unwrap();
            assert_eq!(attempts, 1);
            assert_eq!(w.values(), counts(&[0, 0, 1, 1]).as_slice());
        }
        let c2 = Exposure::Count(2);
        let err = rejection_sample_conditional(
            &sr,
            &a,
            &ExposureMapping::Count,
            &c2,
            &c1,
            None,
            &[true; 4],
            50,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, Error::AttemptCapExceeded { cap: 50 });
    }

    #[test]
    fn toy_groups_naive_swap_is_infeasible() {
        let a = AttributeVector::from_codes(vec![1, 1, 0, 0, 1, 0, 0]).unwrap();
        let l = GroupLabels::new(vec![0, 0, 0, 1, 1, 2, 2], 3).unwrap();
        let design = Design::Sr(SrDesign::from_observed(&l, a.values()).unwrap());
        let w = ExposureMapping::Count
            .from_labels(&l, &a)
            .unwrap()
            .into_values();
        assert!(
            feasibility_check(&w, &design, &a, &ExposureMapping::Count, ENUMERATION_GUARD).unwrap()
        );
        // Units 4 and 5 (0-based 3 and 4) trade exposures.
        let mut swapped = w.clone();
        swapped.swap(3, 4);
        assert!(!feasibility_check(
            &swapped,
            &design,
            &a,
            &ExposureMapping::Count,
            ENUMERATION_GUARD
        )
        .unwrap());
    }

    fn toy_experiment(y: Vec<f64>) -> (Experiment, Design) {
        let a = AttributeVector::from_codes(vec![1, 1, 0, 0, 1, 0]).unwrap();
        let l = GroupLabels::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let exp =
            Experiment::new(a, l, OutcomeVector::new(y).unwrap(), ExposureMapping::Count).unwrap();
        let design = Design::Cr(CrDesign::from_observed(exp.labels()).unwrap());
        (exp, design)
    }

    #[test]
    fn exact_pvalue_trivial_cases() {
        let (exp, design) = toy_experiment(vec![1.0; 6]);
        let null = NullSpec::Sharp {
            c1: Exposure::Count(0),
            c2: Exposure::Count(1),
        };
        let p = exact_pvalue(
            &exp,
            &design,
            &null,
            &TestStatistic::DiffInMeans,
            Direction::TwoSided,
            ENUMERATION_GUARD,
        )
        .unwrap();
        assert_eq!(p, q(1, 1));
    }

    #[test]
    fn exact_matches_monte_carlo() {
        let (exp, design) = toy_experiment(vec![0.3, 2.1, -0.4, 1.7, 0.9, 3.2]);
        let (c1, c2) = (Exposure::Count(1), Exposure::Count(0));
        let null = NullSpec::Pairwise {
            c1: c1.clone(),
            c2: c2.clone(),
            subgroup: None,
        };
        let exact = exact_pvalue(
            &exp,
            &design,
            &null,
            &TestStatistic::DiffInMeans,
            Direction::Greater,
            ENUMERATION_GUARD,
        )
        .unwrap()
        .to_f64()
        .unwrap();
        let replicates = 20_000;
        let cfg = TestConfig {
            replicates,
            direction: Direction::Greater,
            estimator: crate::inference::Estimator::Unbiased,
            seed: 3,
            ..TestConfig::default()
        };
        let mc = test_pairwise(&exp, &design, &c1, &c2, None, &cfg)
            .unwrap()
            .p_value;
        let sd = (exact * (1.0 - exact) / replicates as f64).sqrt();
        assert!(
            (mc - exact).abs() <= 4.0 * sd + 1e-12,
            "mc {mc} exact {exact}"
        );
    }
}
