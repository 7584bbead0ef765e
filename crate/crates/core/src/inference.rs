//! Test statistics and Monte Carlo randomization tests.
//!
//! Replicate exposure vectors are `π · W_obs` with `π` uniform on the
//! stabilizer of the design's stratification vector (sharp null) or of the
//! joint (stratum, focal) vector (pairwise null). Under an `SR` design this is
//! an exact draw from the randomization distribution of `W`, conditional on
//! the focal set for pairwise nulls.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{check_len, Error, Result};
use crate::model::{
    focal_set, subgroup_restrict, AttributeCode, AttributeVector, Exposure, ExposureMapping,
    ExposureVector, FocalSet, GroupLabels, OutcomeVector,
};
use crate::rng::stream_rng;
use crate::symmetry::{stabilizer_strata, StabilizerStrata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Greater,
    TwoSided,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greater" => Ok(Direction::Greater),
            "two-sided" | "two_sided" => Ok(Direction::TwoSided),
            other => Err(Error::Invalid(format!("unknown direction '{other}'"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Greater => "greater",
            Direction::TwoSided => "two-sided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// `(1 + #{T ≥ T_obs}) / (L + 1)`
    Valid,
    /// `#{T ≥ T_obs} / L`
    Unbiased,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(Estimator::Valid),
            "unbiased" => Ok(Estimator::Unbiased),
            other => Err(Error::Invalid(format!("unknown estimator '{other}'"))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Valid => "valid",
            Estimator::Unbiased => "unbiased",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestStatistic {
    /// Focal difference in means between the `c1` and `c2` arms.
    DiffInMeans,
    /// Attribute-weighted difference in means over its standard error.
    Studentized,
    /// Difference in means within each stratum of the given column, averaged
    /// with weights equal to the stratum's focal count.
    StratifiedDiff(Vec<AttributeCode>),
    /// Difference in means of OLS residuals of `Y` on the given covariate
    /// columns, fitted once on the units entering the test.
    ResidualAdjusted(Vec<Vec<f64>>),
}

impl TestStatistic {
    pub fn name(&self) -> &'static str {
        match self {
            TestStatistic::DiffInMeans => "diff-in-means",
            TestStatistic::Studentized => "studentized",
            TestStatistic::StratifiedDiff(_) => "stratified-diff",
            TestStatistic::ResidualAdjusted(_) => "residual-adjusted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub statistic: TestStatistic,
    pub direction: Direction,
    pub estimator: Estimator,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            statistic: TestStatistic::DiffInMeans,
            direction: Direction::TwoSided,
            estimator: Estimator::Valid,
            replicates: 1000,
            seed: 0,
        }
    }
}

/// Which null hypothesis a test (or its exact counterpart) targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NullSpec {
    /// No effect of any exposure; the statistic contrasts `c1` with `c2` over
    /// all units.
    Sharp { c1: Exposure, c2: Exposure },
    /// `Y_i(c1) = Y_i(c2)`, optionally only for units with attribute `subgroup`.
    Pairwise {
        c1: Exposure,
        c2: Exposure,
        subgroup: Option<AttributeCode>,
    },
}

impl NullSpec {
    pub fn contrast(&self) -> (&Exposure, &Exposure) {
        match self {
            NullSpec::Sharp { c1, c2 } | NullSpec::Pairwise { c1, c2, .. } => (c1, c2),
        }
    }
}

/// Observed data of a group formation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    attributes: AttributeVector,
    labels: GroupLabels,
    outcomes: OutcomeVector,
    mapping: ExposureMapping,
    exposures: ExposureVector,
}

impl Experiment {
    pub fn new(
        attributes: AttributeVector,
        labels: GroupLabels,
        outcomes: OutcomeVector,
        mapping: ExposureMapping,
    ) -> Result<Self> {
        check_len(attributes.len(), labels.len())?;
        check_len(attributes.len(), outcomes.len())?;
        let exposures = mapping.from_labels(&labels, &attributes)?;
        Ok(Experiment {
            attributes,
            labels,
            outcomes,
            mapping,
            exposures,
        })
    }

    pub fn attributes(&self) -> &AttributeVector {
        &self.attributes
    }

    pub fn labels(&self) -> &GroupLabels {
        &self.labels
    }

    pub fn outcomes(&self) -> &OutcomeVector {
        &self.outcomes
    }

    pub fn mapping(&self) -> &ExposureMapping {
        &self.mapping
    }

    pub fn exposures(&self) -> &ExposureVector {
        &self.exposures
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Focal set of the null, restricted to the subgroup when one is given.
    pub fn focal(
        &self,
        c1: &Exposure,
        c2: &Exposure,
        subgroup: Option<AttributeCode>,
    ) -> Result<FocalSet> {
        let u = focal_set(&self.exposures, c1, c2)?;
        match subgroup {
            Some(a) => subgroup_restrict(&u, &self.attributes, a),
            None => Ok(u),
        }
    }

    /// Same experiment with different outcomes.
    pub fn with_outcomes(&self, outcomes: OutcomeVector) -> Result<Self> {
        check_len(self.len(), outcomes.len())?;
        Ok(Experiment {
            outcomes,
            ..self.clone()
        })
    }
}

/// Arm membership of a unit for the contrast being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    First,
    Second,
    Other,
}

impl Arm {
    fn label(self) -> &'static str {
        match self {
            Arm::First => "c1",
            Arm::Second => "c2",
            Arm::Other => "other",
        }
    }
}

pub fn arms_of(
    exposures: &[Exposure],
    c1: &Exposure,
    c2: &Exposure,
    included: Option<&[bool]>,
) -> Vec<Arm> {
    exposures
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if included.is_some_and(|m| !m[i]) {
                Arm::Other
            } else if w == c1 {
                Arm::First
            } else if w == c2 {
                Arm::Second
            } else {
                Arm::Other
            }
        })
        .collect()
}

/// How focal units are grouped into cells and how cell means are combined.
#[derive(Debug, Clone)]
enum Kind {
    Diff,
    Studentized {
        levels: Vec<AttributeCode>,
        weight: Vec<f64>,
    },
    Stratified,
}

/// Running sums of `y` and of the shift offset `o` within one (cell, arm).
#[derive(Default, Clone, Copy)]
struct Acc {
    n: usize,
    sy: f64,
    so: f64,
    qy: f64,
    qyo: f64,
    qo: f64,
}

impl Acc {
    fn push(&mut self, y: f64, o: f64) {
        self.n += 1;
        self.sy += y;
        self.so += o;
        self.qy += y * y;
        self.qyo += y * o;
        self.qo += o * o;
    }

    /// Mean of `y − c·o`.
    fn mean(&self, c: f64) -> f64 {
        (self.sy - c * self.so) / self.n as f64
    }

    /// Sample variance of `y − c·o`.
    fn variance(&self, c: f64) -> f64 {
        let n = self.n as f64;
        let m = self.mean(c);
        let q = self.qy - 2.0 * c * self.qyo + c * c * self.qo;
        ((q - n * m * m) / (n - 1.0)).max(0.0)
    }
}

/// A statistic bound to fixed outcomes, evaluated on arm vectors.
///
/// Outcomes enter as `y − c·o` for a shift `c` and per-unit offset `o`, so a
/// single pass over the units serves every shift on a grid.
#[derive(Debug, Clone)]
pub(crate) struct Evaluator {
    kind: Kind,
    cell: Vec<usize>,
    cells: usize,
    y: Vec<f64>,
    offset: Vec<f64>,
}

impl Evaluator {
    /// `fit_units` marks the units entering the test; only residual adjustment
    /// uses it.
    pub(crate) fn new(
        statistic: &TestStatistic,
        attributes: &AttributeVector,
        outcomes: &[f64],
        fit_units: &[bool],
    ) -> Result<Self> {
        Self::with_offset(
            statistic,
            attributes,
            outcomes,
            &vec![0.0; outcomes.len()],
            fit_units,
        )
    }

    pub(crate) fn with_offset(
        statistic: &TestStatistic,
        attributes: &AttributeVector,
        outcomes: &[f64],
        offset: &[f64],
        fit_units: &[bool],
    ) -> Result<Self> {
        let n = attributes.len();
        check_len(n, outcomes.len())?;
        check_len(n, offset.len())?;
        check_len(n, fit_units.len())?;
        let (kind, cell, cells) = match statistic {
            TestStatistic::DiffInMeans | TestStatistic::ResidualAdjusted(_) => {
                (Kind::Diff, vec![0; n], 1)
            }
            TestStatistic::Studentized => {
                let levels: Vec<AttributeCode> = attributes.alphabet().to_vec();
                let cell = attributes
                    .values()
                    .iter()
                    .map(|a| levels.binary_search(a).expect("code in alphabet"))
                    .collect();
                let weight = levels
                    .iter()
                    .map(|&a| attributes.count_of(a) as f64 / n as f64)
                    .collect();
                let cells = levels.len();
                (Kind::Studentized { levels, weight }, cell, cells)
            }
            TestStatistic::StratifiedDiff(column) => {
                check_len(n, column.len())?;
                let mut index: BTreeMap<AttributeCode, usize> = BTreeMap::new();
                for &s in column {
                    let next = index.len();
                    index.entry(s).or_insert(next);
                }
                let cell = column.iter().map(|s| index[s]).collect();
                (Kind::Stratified, cell, index.len())
            }
        };
        let (mut y, offset) = match statistic {
            // Residuals are linear in the response, so the offset is
            // residualized alongside the outcomes.
            TestStatistic::ResidualAdjusted(covariates) => (
                residualize(outcomes, covariates, fit_units)?,
                residualize(offset, covariates, fit_units)?,
            ),
            _ => (outcomes.to_vec(), offset.to_vec()),
        };
        // Every statistic is invariant to a common shift of `y`; centering on
        // one observed value keeps constant outcomes exactly constant.
        if let Some(&r) = y.first() {
            y.iter_mut().for_each(|v| *v -= r);
        }
        Ok(Evaluator {
            kind,
            cell,
            cells,
            y,
            offset,
        })
    }

    pub(crate) fn evaluate(&self, arms: &[Arm]) -> Result<f64> {
        Ok(self.evaluate_shifts(arms, &[0.0])?[0])
    }

    /// Statistic of `y − c·o` under `arms`, for every `c` in `shifts`.
    pub(crate) fn evaluate_shifts(&self, arms: &[Arm], shifts: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![[Acc::default(); 2]; self.cells];
        for i in 0..arms.len() {
            let slot = match arms[i] {
                Arm::First => 0,
                Arm::Second => 1,
                Arm::Other => continue,
            };
            acc[self.cell[i]][slot].push(self.y[i], self.offset[i]);
        }
        match &self.kind {
            Kind::Diff => {
                let [a1, a2] = acc[0];
                if a1.n == 0 || a2.n == 0 {
                    return Err(Error::EmptyArm);
                }
                Ok(shifts.iter().map(|&c| a1.mean(c) - a2.mean(c)).collect())
            }
            Kind::Stratified => {
                let used: Vec<&[Acc; 2]> =
                    acc.iter().filter(|[a1, a2]| a1.n > 0 && a2.n > 0).collect();
                if used.is_empty() {
                    return Err(Error::EmptyArm);
                }
                let total: f64 = used.iter().map(|[a1, a2]| (a1.n + a2.n) as f64).sum();
                Ok(shifts
                    .iter()
                    .map(|&c| {
                        used.iter()
                            .map(|[a1, a2]| (a1.n + a2.n) as f64 * (a1.mean(c) - a2.mean(c)))
                            .sum::<f64>()
                            / total
                    })
                    .collect())
            }
            Kind::Studentized { levels, weight } => {
                let mut present = Vec::new();
                for (l, cell) in acc.iter().enumerate() {
                    if cell[0].n == 0 && cell[1].n == 0 {
                        continue;
                    }
                    for (arm, a) in [Arm::First, Arm::Second].into_iter().zip(cell) {
                        if a.n < 2 {
                            return Err(Error::DegenerateCell {
                                attribute: levels[l],
                                arm: arm.label(),
                                count: a.n,
                            });
                        }
                    }
                    present.push(l);
                }
                if present.is_empty() {
                    return Err(Error::EmptyArm);
                }
                shifts
                    .iter()
                    .map(|&c| {
                        let (mut num, mut var) = (0.0, 0.0);
                        for &l in &present {
                            let [a1, a2] = acc[l];
                            let w = weight[l];
                            num += w * (a1.mean(c) - a2.mean(c));
                            var += w
                                * w
                                * (a1.variance(c) / a1.n as f64 + a2.variance(c) / a2.n as f64);
                        }
                        if var <= 0.0 {
                            Err(Error::ZeroDenominator)
                        } else {
                            Ok(num / var.sqrt())
                        }
                    })
                    .collect()
            }
        }
    }
}

fn residualize(y: &[f64], covariates: &[Vec<f64>], fit_units: &[bool]) -> Result<Vec<f64>> {
    let n = y.len();
    check_len(n, fit_units.len())?;
    for c in covariates {
        check_len(n, c.len())?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("covariates must be finite".into()));
        }
    }
    let rows: Vec<usize> = (0..n).filter(|&i| fit_units[i]).collect();
    let p = covariates.len() + 1;
    if rows.len() <= p {
        return Err(Error::Invalid(format!(
            "residual adjustment needs more than {p} units, got {}",
            rows.len()
        )));
    }
    let design = DMatrix::from_fn(rows.len(), p, |r, c| {
        if c == 0 {
            1.0
        } else {
            covariates[c - 1][rows[r]]
        }
    });
    let response = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
    let beta = design
        .clone()
        .svd(true, true)
        .solve(&response, 1e-12)
        .map_err(|e| Error::Invalid(format!("least squares fit failed: {e}")))?;
    let mut out = y.to_vec();
    for (r, &i) in rows.iter().enumerate() {
        out[i] = y[i] - (design.row(r) * &beta)[0];
    }
    Ok(out)
}

pub fn diff_in_means(
    exposures: &ExposureVector,
    outcomes: &OutcomeVector,
    focal: &FocalSet,
    c1: &Exposure,
    c2: &Exposure,
) -> Result<f64> {
    check_len(exposures.len(), outcomes.len())?;
    check_len(exposures.len(), focal.members().len())?;
    let mean = |c: &Exposure| {
        let picked: Vec<f64> = (0..exposures.len())
            .filter(|&i| focal.contains(i) && &exposures.values()[i] == c)
            .map(|i| outcomes.values()[i])
            .collect();
        if picked.is_empty() {
            Err(Error::EmptyArm)
        } else {
            Ok(picked.iter().sum::<f64>() / picked.len() as f64)
        }
    };
    Ok(mean(c1)? - mean(c2)?)
}

pub fn studentized_stat(
    exposures: &ExposureVector,
    outcomes: &OutcomeVector,
    attributes: &AttributeVector,
    focal: &FocalSet,
    c1: &Exposure,
    c2: &Exposure,
) -> Result<f64> {
    check_len(exposures.len(), outcomes.len())?;
    check_len(exposures.len(), focal.members().len())?;
    let eval = Evaluator::new(
        &TestStatistic::Studentized,
        attributes,
        outcomes.values(),
        focal.members(),
    )?;
    eval.evaluate(&arms_of(exposures.values(), c1, c2, Some(focal.members())))
}

fn exceeds(draw: f64, t_obs: f64, direction: Direction) -> bool {
    match direction {
        Direction::Greater => draw >= t_obs,
        Direction::TwoSided => draw.abs() >= t_obs.abs(),
    }
}

pub(crate) fn pvalue_from_count(count: usize, replicates: usize, estimator: Estimator) -> f64 {
    match estimator {
        Estimator::Valid => (1 + count) as f64 / (replicates + 1) as f64,
        Estimator::Unbiased => count as f64 / replicates as f64,
    }
}

pub fn mc_pvalue(
    t_obs: f64,
    draws: &[f64],
    estimator: Estimator,
    direction: Direction,
) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Invalid("p-value needs at least one draw".into()));
    }
    let count = draws
        .iter()
        .filter(|&&t| exceeds(t, t_obs, direction))
        .count();
    Ok(pvalue_from_count(count, draws.len(), estimator))
}

pub(crate) fn exceeds_obs(draw: f64, t_obs: f64, direction: Direction) -> bool {
    exceeds(draw, t_obs, direction)
}

/// Focal units per attribute level and arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalTally {
    pub attribute: AttributeCode,
    pub c1: usize,
    pub c2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub null: String,
    pub statistic_name: String,
    pub c1: String,
    pub c2: String,
    pub subgroup: Option<AttributeCode>,
    pub statistic: f64,
    pub p_value: f64,
    pub replicates: usize,
    pub estimator: Estimator,
    pub direction: Direction,
    pub seed: u64,
    pub focal_count: usize,
    pub arm_counts: [usize; 2],
    pub focal_tallies: Vec<FocalTally>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub null_draws: Vec<f64>,
}

fn tallies(attributes: &AttributeVector, arms: &[Arm]) -> Vec<FocalTally> {
    let mut by_level: BTreeMap<AttributeCode, [usize; 2]> = BTreeMap::new();
    for (&a, &arm) in attributes.values().iter().zip(arms) {
        match arm {
            Arm::First => by_level.entry(a).or_default()[0] += 1,
            Arm::Second => by_level.entry(a).or_default()[1] += 1,
            Arm::Other => {}
        }
    }
    by_level
        .into_iter()
        .map(|(attribute, [c1, c2])| FocalTally { attribute, c1, c2 })
        .collect()
}

/// Everything a Monte Carlo test needs once the null has been fixed.
#[derive(Debug, Clone)]
pub(crate) struct PreparedTest {
    pub strata: StabilizerStrata,
    pub arms: Vec<Arm>,
    pub included: Vec<bool>,
}

impl PreparedTest {
    pub(crate) fn new(exp: &Experiment, design: &Design, null: &NullSpec) -> Result<Self> {
        check_len(exp.len(), design.len())?;
        design.check_observed(exp.labels())?;
        let strata_vec = design.permutation_strata(exp.attributes())?;
        let (c1, c2) = null.contrast();
        if c1 == c2 {
            return Err(Error::Invalid(format!(
                "contrast needs two distinct exposures, got {c1} twice"
            )));
        }
        let prepared = match null {
            NullSpec::Sharp { c1, c2 } => PreparedTest {
                strata: stabilizer_strata(&strata_vec),
                arms: arms_of(exp.exposures().values(), c1, c2, None),
                included: vec![true; exp.len()],
            },
            NullSpec::Pairwise { c1, c2, subgroup } => {
                let focal = exp.focal(c1, c2, *subgroup)?;
                let members = focal.members().to_vec();
                let joint: Vec<(AttributeCode, bool)> = strata_vec
                    .iter()
                    .copied()
                    .zip(members.iter().copied())
                    .collect();
                PreparedTest {
                    strata: stabilizer_strata(&joint).retain(|i| members[i]),
                    arms: arms_of(exp.exposures().values(), c1, c2, Some(&members)),
                    included: members,
                }
            }
        };
        let has = |a: Arm| prepared.arms.contains(&a);
        if !has(Arm::First) || !has(Arm::Second) {
            return Err(Error::EmptyArm);
        }
        Ok(prepared)
    }

    /// Evaluator for shifted nulls: the offset marks units observed in the
    /// `c1` arm, so `y − c·o` removes a constant effect `c` from them.
    pub(crate) fn evaluator(
        &self,
        exp: &Experiment,
        statistic: &TestStatistic,
    ) -> Result<Evaluator> {
        let offset: Vec<f64> = self
            .arms
            .iter()
            .map(|&a| if a == Arm::First { 1.0 } else { 0.0 })
            .collect();
        Evaluator::with_offset(
            statistic,
            exp.attributes(),
            exp.outcomes().values(),
            &offset,
            &self.included,
        )
    }

    /// Statistic of replicate `l`: arms shuffled with stream `l` of `seed`.
    pub(crate) fn replicate_arms(&self, seed: u64, l: usize) -> Vec<Arm> {
        let mut rng = stream_rng(seed, l as u64);
        let mut arms = self.arms.clone();
        self.strata.shuffle_within(&mut arms, &mut rng);
        arms
    }

    pub(crate) fn draws(
        &self,
        eval: &Evaluator,
        replicates: usize,
        seed: u64,
        shift: f64,
    ) -> Result<Vec<f64>> {
        (0..replicates)
            .into_par_iter()
            .map(|l| Ok(eval.evaluate_shifts(&self.replicate_arms(seed, l), &[shift])?[0]))
            .collect()
    }
}

/// Exposure vectors `π_l · W_obs` of the first `replicates` Monte Carlo
/// replicates, exactly as permuted by the tests for the same seed.
pub fn replicate_exposures(
    exp: &Experiment,
    design: &Design,
    null: &NullSpec,
    seed: u64,
    replicates: usize,
) -> Result<Vec<Vec<Exposure>>> {
    let prepared = PreparedTest::new(exp, design, null)?;
    Ok((0..replicates)
        .map(|l| {
            let mut rng = stream_rng(seed, l as u64);
            let mut w = exp.exposures().values().to_vec();
            prepared.strata.shuffle_within(&mut w, &mut rng);
            w
        })
        .collect())
}

pub(crate) fn check_replicates(replicates: usize) -> Result<()> {
    if replicates == 0 {
        Err(Error::Invalid(
            "number of permutations must be positive".into(),
        ))
    } else {
        Ok(())
    }
}

pub(crate) fn run_test(
    exp: &Experiment,
    design: &Design,
    null: &NullSpec,
    cfg: &TestConfig,
    shift: f64,
) -> Result<TestResult> {
    check_replicates(cfg.replicates)?;
    let prepared = PreparedTest::new(exp, design, null)?;
    let eval = prepared.evaluator(exp, &cfg.statistic)?;
    let statistic = eval.evaluate_shifts(&prepared.arms, &[shift])?[0];
    let null_draws = prepared.draws(&eval, cfg.replicates, cfg.seed, shift)?;
    let p_value = mc_pvalue(statistic, &null_draws, cfg.estimator, cfg.direction)?;
    let (c1, c2) = null.contrast();
    let count = |a: Arm| prepared.arms.iter().filter(|&&x| x == a).count();
    Ok(TestResult {
        null: match null {
            NullSpec::Sharp { .. } => "sharp".into(),
            NullSpec::Pairwise { .. } => "pairwise".into(),
        },
        statistic_name: cfg.statistic.name().into(),
        c1: c1.to_string(),
        c2: c2.to_string(),
        subgroup: match null {
            NullSpec::Pairwise { subgroup, .. } => *subgroup,
            NullSpec::Sharp { .. } => None,
        },
        statistic,
        p_value,
        replicates: cfg.replicates,
        estimator: cfg.estimator,
        direction: cfg.direction,
        seed: cfg.seed,
        focal_count: prepared.included.iter().filter(|&&m| m).count(),
        arm_counts: [count(Arm::First), count(Arm::Second)],
        focal_tallies: tallies(exp.attributes(), &prepared.arms),
        null_draws,
    })
}

/// Randomization test of the sharp null of no exposure effect, contrasting
/// `c1` with `c2`. Replicates permute the whole exposure vector within the
/// design strata.
pub fn test_sharp(
    exp: &Experiment,
    design: &Design,
    c1: &Exposure,
    c2: &Exposure,
    cfg: &TestConfig,
) -> Result<TestResult> {
    let null = NullSpec::Sharp {
        c1: c1.clone(),
        c2: c2.clone(),
    };
    run_test(exp, design, &null, cfg, 0.0)
}

/// Conditional randomization test of `Y_i(c1) = Y_i(c2)` on the observed
/// focal set, optionally restricted to units with attribute `subgroup`.
pub fn test_pairwise(
    exp: &Experiment,
    design: &Design,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
    cfg: &TestConfig,
) -> Result<TestResult> {
    let null = NullSpec::Pairwise {
        c1: c1.clone(),
        c2: c2.clone(),
        subgroup,
    };
    run_test(exp, design, &null, cfg, 0.0)
}
