//! Simulation studies: power of the conditional test, gains from stratifying
//! on a covariate, coverage of weak-null intervals, and the cost of rejection
//! sampling versus stratified permutation.
//!
//! Units sit in groups of four with a binary attribute, and the contrast is
//! one versus zero groupmates with attribute 1. Control outcomes are drawn
//! once and shared by all effect sizes; replicates then redraw only the
//! assignment. Every replicate derives its own seeds, so reports do not depend
//! on the number of threads.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{CrDesign, Design, SrDesign};
use crate::error::{Error, Result};
use crate::estimation::{weak_null_ci, ShiftGrid};
use crate::inference::{
    test_pairwise, Direction, Estimator, Experiment, TestConfig, TestStatistic,
};
use crate::model::{AttributeVector, Exposure, ExposureMapping, GroupLabels, OutcomeVector};
use crate::oracle::{focal_indicator, rejection_sample_conditional, DEFAULT_ATTEMPT_CAP};
use crate::rng::{derive_seed, stream_rng};
use crate::symmetry::stabilizer_strata;

/// Number of groups of four holding 0, 1, 2, 3 and 4 units with attribute 1:
/// 39 groups, 104 units with attribute 1 and 52 with attribute 0.
pub const DEFAULT_GROUP_TYPES: [usize; 5] = [2, 6, 6, 14, 11];

pub const POWER_TAUS: [f64; 11] = [0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0];
pub const COVARIATE_TAUS: [f64; 10] = [0.0, 0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.6, 0.8, 1.0];
pub const COVERAGE_TAUS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

const OUTCOME_SCALE: f64 = 4.0;
const SCHEDULE_TAG: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub group_size: usize,
    /// Units with attribute 1 in each group.
    pub ones_per_group: Vec<usize>,
    pub taus: Vec<f64>,
    /// Outer replicates (assignment draws) per effect size.
    pub replicates: usize,
    /// Permutations per test.
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn with_taus(taus: &[f64]) -> Self {
        SimConfig {
            taus: taus.to_vec(),
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Invalid("groups need at least two units".into()));
        }
        if self.ones_per_group.is_empty() {
            return Err(Error::Invalid("at least one group is required".into()));
        }
        if let Some(&k) = self.ones_per_group.iter().find(|&&k| k > self.group_size) {
            return Err(Error::Invalid(format!(
                "a group of {} cannot hold {k} units with attribute 1",
                self.group_size
            )));
        }
        if self.taus.is_empty() || self.taus.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid(
                "effect grid must be nonempty and finite".into(),
            ));
        }
        if self.replicates == 0 || self.permutations == 0 {
            return Err(Error::Invalid(
                "replicates and permutations must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn num_units(&self) -> usize {
        self.group_size * self.ones_per_group.len()
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            group_size: 4,
            ones_per_group: expand_group_types(&DEFAULT_GROUP_TYPES),
            taus: POWER_TAUS.to_vec(),
            replicates: 300,
            permutations: 1000,
            alpha: 0.05,
            seed: 2024,
        }
    }
}

/// Turns counts of group types (index = units with attribute 1) into one
/// entry per group.
pub fn expand_group_types(types: &[usize]) -> Vec<usize> {
    types
        .iter()
        .enumerate()
        .flat_map(|(ones, &count)| std::iter::repeat_n(ones, count))
        .collect()
}

/// Rate and coverage summaries for one effect size (and arm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<f64>,
    pub replicates: usize,
    /// Replicates where the test could not be computed; excluded from rates.
    pub undefined: usize,
    /// Rejection rate at alpha, or for intervals the share excluding zero.
    pub rejection_rate: f64,
    pub rejection_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub groups: usize,
    pub units: usize,
    pub draws: usize,
    /// Attempts per accepted draw, averaged over accepted draws.
    pub mean_attempts: f64,
    pub acceptance_rate: f64,
    pub timed_out: bool,
    pub rejection_seconds: f64,
    pub permutation_seconds: f64,
    pub rejection_seconds_per_draw: f64,
    pub permutation_seconds_per_draw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub study: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rows: Vec<SimRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub timing: Vec<TimingRow>,
    /// Wall time of the whole study; not serialized so that reports are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub runtime: Duration,
}

impl SimReport {
    pub fn row(&self, tau: f64, arm: Option<&str>) -> Option<&SimRow> {
        self.rows
            .iter()
            .find(|r| (r.tau - tau).abs() < 1e-12 && r.arm.as_deref() == arm)
    }
}

/// Monte Carlo standard error of a proportion.
pub fn rate_se(rate: f64, n: usize) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        (rate * (1.0 - rate) / n as f64).sqrt()
    }
}

/// Potential outcomes `Y(0)` and `Y(1) = min(Y(0) + τ, 4)`; exposures other
/// than one receive `Y(0)`.
#[derive(Debug, Clone)]
struct Schedule {
    y0: Vec<f64>,
    y1: Vec<f64>,
}

impl Schedule {
    fn draw<R: Rng + ?Sized>(tau: f64, covariate: Option<&[u32]>, n: usize, rng: &mut R) -> Self {
        let main = Beta::new(10.0, 3.0).expect("valid beta parameters");
        let alt = Beta::new(5.0, 5.0).expect("valid beta parameters");
        let y0: Vec<f64> = (0..n)
            .map(|i| {
                let b = match covariate {
                    Some(x) if x[i] == 1 => alt.sample(rng),
                    _ => main.sample(rng),
                };
                OUTCOME_SCALE * b
            })
            .collect();
        let y1 = y0.iter().map(|&y| (y + tau).min(OUTCOME_SCALE)).collect();
        Schedule { y0, y1 }
    }

    fn observe(&self, w: &[Exposure]) -> Vec<f64> {
        w.iter()
            .enumerate()
            .map(|(i, x)| {
                if *x == Exposure::Count(1) {
                    self.y1[i]
                } else {
                    self.y0[i]
                }
            })
            .collect()
    }

    fn average_effect(&self) -> f64 {
        self.y1
            .iter()
            .zip(&self.y0)
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / self.y0.len() as f64
    }
}

/// Attributes and a reference assignment with units listed group by group.
struct Population {
    attributes: AttributeVector,
    labels: GroupLabels,
}

impl Population {
    fn new(cfg: &SimConfig) -> Result<Self> {
        let mut a = Vec::with_capacity(cfg.num_units());
        let mut labels = Vec::with_capacity(cfg.num_units());
        for (g, &ones) in cfg.ones_per_group.iter().enumerate() {
            for j in 0..cfg.group_size {
                a.push(u32::from(j < ones));
                labels.push(g);
            }
        }
        Ok(Population {
            attributes: AttributeVector::new(a, &[0, 1])?,
            labels: GroupLabels::new(labels, cfg.ones_per_group.len())?,
        })
    }

    /// Binary covariate splitting each attribute level in half, alternating
    /// along the unit order.
    fn balanced_covariate(&self) -> Vec<u32> {
        let mut seen = [0u32; 2];
        self.attributes
            .values()
            .iter()
            .map(|&a| {
                let x = seen[a as usize] % 2;
                seen[a as usize] += 1;
                x
            })
            .collect()
    }

    fn sr_design(&self, strata: &[u32]) -> Result<Design> {
        Ok(Design::Sr(SrDesign::from_observed(&self.labels, strata)?))
    }
}

fn contrast() -> (Exposure, Exposure) {
    (Exposure::Count(1), Exposure::Count(0))
}

struct Outcome {
    rejected: bool,
    covered: Option<bool>,
    length: Option<f64>,
}

fn summarize(
    tau: f64,
    arm: Option<&str>,
    tau_star: Option<f64>,
    results: Vec<Option<Outcome>>,
) -> SimRow {
    let replicates = results.len();
    let ok: Vec<Outcome> = results.into_iter().flatten().collect();
    let n = ok.len();
    let share = |f: &dyn Fn(&Outcome) -> bool| {
        if n == 0 {
            f64::NAN
        } else {
            ok.iter().filter(|o| f(o)).count() as f64 / n as f64
        }
    };
    let rejection_rate = share(&|o| o.rejected);
    let coverage = tau_star.map(|_| share(&|o| o.covered == Some(true)));
    let lengths: Vec<f64> = ok.iter().filter_map(|o| o.length).collect();
    let (mean_length, length_se) = if lengths.is_empty() {
        (None, None)
    } else {
        let m = lengths.iter().sum::<f64>() / lengths.len() as f64;
        let var = if lengths.len() > 1 {
            lengths.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / (lengths.len() - 1) as f64
        } else {
            0.0
        };
        (Some(m), Some((var / lengths.len() as f64).sqrt()))
    };
    SimRow {
        tau,
        arm: arm.map(str::to_string),
        tau_star,
        replicates,
        undefined: replicates - n,
        rejection_rate,
        rejection_se: rate_se(rejection_rate, n),
        coverage,
        coverage_se: coverage.map(|c| rate_se(c, n)),
        mean_length,
        length_se,
    }
}

/// Runs `replicate(r, assignment_rng, test_seed)` for every replicate of the
/// effect size with index `t`. Replicates whose statistic is undefined yield
/// `None`; other errors abort the study.
fn run_replicates<F>(cfg: &SimConfig, t: usize, replicate: F) -> Result<Vec<Option<Outcome>>>
where
    F: Fn(&mut crate::rng::StreamRng, u64) -> Result<Outcome> + Sync,
{
    let base = derive_seed(cfg.seed, t as u64);
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(base, r as u64);
            match replicate(&mut rng, derive_seed(base, r as u64 + (1 << 32))) {
                Ok(o) => Ok(Some(o)),
                Err(
                    Error::EmptyArm
                    | Error::NoFocalUnits
                    | Error::DegenerateCell { .. }
                    | Error::ZeroDenominator,
                ) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Every effect size shares one draw of `Y(0)`, so rows differ only through
/// `τ` and the assignment draws.
fn schedule_for(cfg: &SimConfig, tau: f64, covariate: Option<&[u32]>) -> Schedule {
    let mut rng = stream_rng(derive_seed(cfg.seed, SCHEDULE_TAG), 0);
    Schedule::draw(tau, covariate, cfg.num_units(), &mut rng)
}

fn one_sided(cfg: &SimConfig, seed: u64) -> TestConfig {
    TestConfig {
        statistic: TestStatistic::DiffInMeans,
        direction: Direction::Greater,
        estimator: Estimator::Valid,
        replicates: cfg.permutations,
        seed,
    }
}

fn rejection_replicate(
    cfg: &SimConfig,
    pop: &Population,
    design: &Design,
    schedule: &Schedule,
    rng: &mut crate::rng::StreamRng,
    seed: u64,
) -> Result<Outcome> {
    let labels = design.sample(rng);
    let w = ExposureMapping::Count.from_labels(&labels, &pop.attributes)?;
    let y = OutcomeVector::new(schedule.observe(w.values()))?;
    let exp = Experiment::new(pop.attributes.clone(), labels, y, ExposureMapping::Count)?;
    let (c1, c2) = contrast();
    let result = test_pairwise(&exp, design, &c1, &c2, None, &one_sided(cfg, seed))?;
    Ok(Outcome {
        rejected: result.p_value <= cfg.alpha,
        covered: None,
        length: None,
    })
}

/// Rejection rate of the one-sided conditional test of `Y(1) = Y(0)` with the
/// difference in means, under a design stratified on the attribute.
pub fn power_study(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pop = Population::new(cfg)?;
    let design = pop.sr_design(pop.attributes.values())?;
    let mut rows = Vec::with_capacity(cfg.taus.len());
    for (t, &tau) in cfg.taus.iter().enumerate() {
        let schedule = schedule_for(cfg, tau, None);
        let results = run_replicates(cfg, t, |rng, seed| {
            rejection_replicate(cfg, &pop, &design, &schedule, rng, seed)
        })?;
        rows.push(summarize(tau, None, None, results));
    }
    Ok(SimReport {
        study: "power".into(),
        rows,
        timing: Vec::new(),
        runtime: start.elapsed(),
    })
}

pub const ARM_STRATIFIED: &str = "attribute-and-covariate";
pub const ARM_ATTRIBUTE: &str = "attribute-only";

/// Power with a covariate that shifts the outcome distribution: designs and
/// permutations stratified on (attribute, covariate) against stratification
/// on the attribute alone. Both arms share the schedule and replicate seeds.
pub fn covariate_gain_study(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pop = Population::new(cfg)?;
    let x = pop.balanced_covariate();
    let b = pop.attributes.refine(&x)?;
    let arms = [
        (ARM_STRATIFIED, pop.sr_design(b.values())?),
        (ARM_ATTRIBUTE, pop.sr_design(pop.attributes.values())?),
    ];
    let mut rows = Vec::with_capacity(2 * cfg.taus.len());
    for (t, &tau) in cfg.taus.iter().enumerate() {
        let schedule = schedule_for(cfg, tau, Some(&x));
        for (name, design) in &arms {
            let results = run_replicates(cfg, t, |rng, seed| {
                rejection_replicate(cfg, &pop, design, &schedule, rng, seed)
            })?;
            rows.push(summarize(tau, Some(name), None, results));
        }
    }
    Ok(SimReport {
        study: "covariate".into(),
        rows,
        timing: Vec::new(),
        runtime: start.elapsed(),
    })
}

/// Coverage of the average effect by studentized weak-null intervals at level
/// `1 − alpha`, their mean length, and the share excluding zero.
pub fn hl_coverage_study(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pop = Population::new(cfg)?;
    let design = pop.sr_design(pop.attributes.values())?;
    let (c1, c2) = contrast();
    let mut rows = Vec::with_capacity(cfg.taus.len());
    for (t, &tau) in cfg.taus.iter().enumerate() {
        let schedule = schedule_for(cfg, tau, None);
        let tau_star = schedule.average_effect();
        let results = run_replicates(cfg, t, |rng, seed| {
            let labels = design.sample(rng);
            let w = ExposureMapping::Count.from_labels(&labels, &pop.attributes)?;
            let y = OutcomeVector::new(schedule.observe(w.values()))?;
            let exp = Experiment::new(pop.attributes.clone(), labels, y, ExposureMapping::Count)?;
            let grid = ShiftGrid::default_for(&exp, &c1, &c2, None)?;
            let test = TestConfig {
                statistic: TestStatistic::Studentized,
                direction: Direction::TwoSided,
                estimator: Estimator::Valid,
                replicates: cfg.permutations,
                seed,
            };
            let ci = weak_null_ci(&exp, &design, &c1, &c2, None, &grid, cfg.alpha, &test)?;
            Ok(Outcome {
                rejected: !ci.contains(0.0),
                covered: Some(ci.contains(tau_star)),
                length: Some(ci.length()),
            })
        })?;
        rows.push(summarize(tau, None, Some(tau_star), results));
    }
    Ok(SimReport {
        study: "coverage".into(),
        rows,
        timing: Vec::new(),
        runtime: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub groups: Vec<usize>,
    pub draws: usize,
    /// Attempt cap per accepted draw.
    pub cap: u64,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            groups: vec![3, 4, 5, 6, 7, 8],
            draws: 1000,
            cap: DEFAULT_ATTEMPT_CAP,
            seed: 2024,
        }
    }
}

/// Cost of drawing exposures given the observed focal set, by rejection from
/// a completely randomized design and by permuting within (attribute, focal)
/// strata. Each of `K` groups of four holds two units of each attribute; the
/// contrast is one versus two groupmates with attribute 1, so every unit is
/// focal and a draw is accepted only when no group is unbalanced by more than
/// one unit.
pub fn timing_study(cfg: &TimingConfig) -> Result<SimReport> {
    if cfg.groups.is_empty() || cfg.groups.contains(&0) || cfg.draws == 0 || cfg.cap == 0 {
        return Err(Error::Invalid(
            "timing study needs positive group counts, draws and cap".into(),
        ));
    }
    let start = Instant::now();
    let (c1, c2) = (Exposure::Count(1), Exposure::Count(2));
    let mut timing = Vec::with_capacity(cfg.groups.len());
    for &k in &cfg.groups {
        let n = 4 * k;
        let attributes =
            AttributeVector::new((0..n).map(|i| u32::from(i % 4 < 2)).collect(), &[0, 1])?;
        let labels = GroupLabels::new((0..n).map(|i| i / 4).collect(), k)?;
        let w_obs = ExposureMapping::Count.from_labels(&labels, &attributes)?;
        let focal = focal_indicator(w_obs.values(), &attributes, &c1, &c2, None);
        let design = Design::Cr(CrDesign::from_observed(&labels)?);
        let mut rng = stream_rng(derive_seed(cfg.seed, k as u64), 0);

        let clock = Instant::now();
        let mut attempts = 0u64;
        let mut accepted = 0usize;
        let mut timed_out = false;
        for _ in 0..cfg.draws {
            match rejection_sample_conditional(
                &design,
                &attributes,
                &ExposureMapping::Count,
                &c1,
                &c2,
                None,
                &focal,
                cfg.cap,
                &mut rng,
            ) {
                Ok((_, used)) => {
                    attempts += used;
                    accepted += 1;
                }
                Err(Error::AttemptCapExceeded { cap }) => {
                    attempts += cap;
                    timed_out = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let rejection_seconds = clock.elapsed().as_secs_f64();

        let joint: Vec<(u32, bool)> = attributes
            .values()
            .iter()
            .copied()
            .zip(focal.iter().copied())
            .collect();
        let strata = stabilizer_strata(&joint);
        let clock = Instant::now();
        let mut w = w_obs.values().to_vec();
        let mut checksum = 0usize;
        for _ in 0..cfg.draws {
            strata.shuffle_within(&mut w, &mut rng);
            checksum += usize::from(w[0] == c1);
        }
        std::hint::black_box(checksum);
        let permutation_seconds = clock.elapsed().as_secs_f64();

        timing.push(TimingRow {
            groups: k,
            units: n,
            draws: cfg.draws,
            mean_attempts: if accepted == 0 {
                f64::NAN
            } else {
                attempts as f64 / accepted as f64
            },
            acceptance_rate: if attempts == 0 {
                f64::NAN
            } else {
                accepted as f64 / attempts as f64
            },
            timed_out,
            rejection_seconds,
            permutation_seconds,
            rejection_seconds_per_draw: rejection_seconds / accepted.max(1) as f64,
            permutation_seconds_per_draw: permutation_seconds / cfg.draws as f64,
        });
    }
    Ok(SimReport {
        study: "timing".into(),
        rows: Vec::new(),
        timing,
        runtime: start.elapsed(),
    })
}

/// Whether `values` increase strictly with strictly increasing increments.
pub fn is_superlinear(values: &[f64]) -> bool {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.iter().all(|&d| d > 0.0) && diffs.windows(2).all(|d| d[1] > d[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(taus: &[f64]) -> SimConfig {
        SimConfig {
            ones_per_group: expand_group_types(&[1, 2, 2, 3, 2]),
            taus: taus.to_vec(),
            replicates: 8,
            permutations: 50,
            ..SimConfig::default()
        }
    }

    #[test]
    fn default_population_matches_totals() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.ones_per_group.len(), 39);
        let pop = Population::new(&cfg).unwrap();
        assert_eq!(pop.attributes.count_of(1), 104);
        assert_eq!(pop.attributes.count_of(0), 52);
        let x = pop.balanced_covariate();
        let cell = |a: u32, v: u32| {
            (0..156)
                .filter(|&i| pop.attributes.values()[i] == a && x[i] == v)
                .count()
        };
        assert_eq!(
            (cell(1, 1), cell(1, 0), cell(0, 1), cell(0, 0)),
            (52, 52, 26, 26)
        );
        let w = ExposureMapping::Count
            .from_labels(&pop.labels, &pop.attributes)
            .unwrap();
        let arm = |e: usize| {
            w.values()
                .iter()
                .filter(|&x| *x == Exposure::Count(e))
                .count()
        };
        assert_eq!((arm(0), arm(1)), (14, 30));
    }

    #[test]
    fn schedule_respects_cap() {
        let mut rng = stream_rng(1, 0);
        let s = Schedule::draw(0.5, None, 200, &mut rng);
        assert!(s.y0.iter().all(|&y| (0.0..=4.0).contains(&y)));
        assert!(s.y1.iter().zip(&s.y0).all(|(a, b)| *a <= 4.0 && *a >= *b));
        assert!(s.average_effect() <= 0.5 && s.average_effect() > 0.3);
        let zero = Schedule::draw(0.0, None, 10, &mut rng);
        assert_eq!(zero.average_effect(), 0.0);
    }

    #[test]
    fn studies_are_deterministic() {
        let cfg = small(&[0.0, 0.5]);
        let a = power_study(&cfg).unwrap();
        let b = power_study(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.rows.len(), 2);
        for row in &a.rows {
            assert!((0.0..=1.0).contains(&row.rejection_rate));
            assert_eq!(
                row.rejection_se,
                rate_se(row.rejection_rate, row.replicates - row.undefined)
            );
        }
        let cov = covariate_gain_study(&cfg).unwrap();
        assert_eq!(cov.rows.len(), 4);
        assert!(cov.row(0.5, Some(ARM_STRATIFIED)).is_some());
        let hl = hl_coverage_study(&small(&[0.3])).unwrap();
        let row = &hl.rows[0];
        assert!(row.coverage.is_some() && row.mean_length.unwrap() > 0.0);
    }

    #[test]
    fn single_group_timing_is_trivial() {
        let cfg = TimingConfig {
            groups: vec![1, 2],
            draws: 20,
            ..TimingConfig::default()
        };
        let report = timing_study(&cfg).unwrap();
        assert_eq!(report.timing[0].mean_attempts, 1.0);
        assert_eq!(report.timing[0].acceptance_rate, 1.0);
        assert!(report.timing[1].mean_attempts >= 1.0);
    }

    #[test]
    fn superlinear_check() {
        assert!(is_superlinear(&[1.0, 2.0, 4.0, 8.0]));
        assert!(!is_superlinear(&[1.0, 2.0, 3.0, 4.0]));
        assert!(!is_superlinear(&[1.0, 3.0, 4.0, 9.0]));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small(&[0.0]);
        cfg.alpha = 1.0;
        assert!(power_study(&cfg).is_err());
        let mut cfg = small(&[]);
        cfg.taus.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = small(&[0.0]);
        cfg.ones_per_group[0] = 9;
        assert!(cfg.validate().is_err());
    }
}
