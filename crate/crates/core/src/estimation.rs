//! Hodges–Lehmann estimates and confidence intervals from inverting
//! constant-shift randomization tests.
//!
//! The shifted null `Y_i(c1) − Y_i(c2) = c` is tested by removing `c` from the
//! outcomes of focal units observed in the `c1` arm and running the
//! conditional test on the adjusted outcomes. All grid points share one set of
//! permutations, so the p-value curve carries no Monte Carlo jitter across `c`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::inference::{
    check_replicates, exceeds_obs, pvalue_from_count, run_test, Experiment, NullSpec, PreparedTest,
    TestConfig, TestResult, TestStatistic,
};
use crate::model::{AttributeCode, Exposure};

const DEFAULT_POINTS: usize = 241;
const DEFAULT_HALF_WIDTH_SE: f64 = 6.0;

/// Candidate values of the constant shift `c`, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftGrid {
    points: Vec<f64>,
}

impl ShiftGrid {
    /// `lo, lo + step, …` up to and including `hi` (within rounding).
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(Error::Invalid("grid bounds and step must be finite".into()));
        }
        if lo >= hi {
            return Err(Error::Invalid(format!(
                "grid needs lo < hi, got {lo} and {hi}"
            )));
        }
        if step <= 0.0 {
            return Err(Error::Invalid(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let steps = ((hi - lo) / step + 1e-9).floor() as usize;
        if steps >= 10_000_000 {
            return Err(Error::Invalid(format!(
                "grid of {steps} points is too large"
            )));
        }
        Ok(ShiftGrid {
            points: (0..=steps).map(|k| lo + k as f64 * step).collect(),
        })
    }

    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("grid needs at least one point".into()));
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("grid points must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(ShiftGrid { points })
    }

    /// Grid centered on the observed focal difference in means, spanning six
    /// standard errors on either side.
    pub fn default_for(
        exp: &Experiment,
        c1: &Exposure,
        c2: &Exposure,
        subgroup: Option<AttributeCode>,
    ) -> Result<Self> {
        let (diff, se) = observed_diff_and_se(exp, c1, c2, subgroup)?;
        let half = if se.is_finite() && se > 0.0 {
            DEFAULT_HALF_WIDTH_SE * se
        } else {
            diff.abs().max(1.0)
        };
        let step = 2.0 * half / (DEFAULT_POINTS - 1) as f64;
        Ok(ShiftGrid {
            points: (0..DEFAULT_POINTS)
                .map(|k| diff - half + k as f64 * step)
                .collect(),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().expect("grid is nonempty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Parses `lo:hi:step`.
impl FromStr for ShiftGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Invalid(format!(
                "grid must look like lo:hi:step, got '{s}'"
            )));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("grid value '{t}' is not a number")))
        };
        ShiftGrid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

impl fmt::Display for ShiftGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} points on [{}, {}]", self.len(), self.lo(), self.hi())
    }
}

/// Focal difference in means and its unpooled (Neyman) standard error.
pub fn observed_diff_and_se(
    exp: &Experiment,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
) -> Result<(f64, f64)> {
    let focal = exp.focal(c1, c2, subgroup)?;
    let arm = |c: &Exposure| -> Vec<f64> {
        focal
            .indices()
            .into_iter()
            .filter(|&i| &exp.exposures().values()[i] == c)
            .map(|i| exp.outcomes().values()[i])
            .collect()
    };
    let (y1, y2) = (arm(c1), arm(c2));
    if y1.is_empty() || y2.is_empty() {
        return Err(Error::EmptyArm);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var_of_mean = |v: &[f64]| {
        if v.len() < 2 {
            return f64::NAN;
        }
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64 / v.len() as f64
    };
    Ok((
        mean(&y1) - mean(&y2),
        (var_of_mean(&y1) + var_of_mean(&y2)).sqrt(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub shift: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub hl_estimate: f64,
    /// False when the retained grid points do not form one run; the bounds
    /// still span every retained point.
    pub contiguous: bool,
    pub pvalue_curve: Vec<CurvePoint>,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn pairwise(c1: &Exposure, c2: &Exposure, subgroup: Option<AttributeCode>) -> NullSpec {
    NullSpec::Pairwise {
        c1: c1.clone(),
        c2: c2.clone(),
        subgroup,
    }
}

/// Conditional test of `Y_i(c1) − Y_i(c2) = shift` for focal units.
pub fn shift_test(
    exp: &Experiment,
    design: &Design,
    c1: &Exposure,
    c2: &Exposure,
    shift: f64,
    subgroup: Option<AttributeCode>,
    cfg: &TestConfig,
) -> Result<TestResult> {
    if !shift.is_finite() {
        return Err(Error::Invalid("shift must be finite".into()));
    }
    run_test(exp, design, &pairwise(c1, c2, subgroup), cfg, shift)
}

/// p-value of the shifted null at every grid point, using one common set of
/// permutations.
pub fn pvalue_curve(
    exp: &Experiment,
    design: &Design,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
    grid: &ShiftGrid,
    cfg: &TestConfig,
) -> Result<Vec<CurvePoint>> {
    check_replicates(cfg.replicates)?;
    let prepared = PreparedTest::new(exp, design, &pairwise(c1, c2, subgroup))?;
    let (diff, _) = observed_diff_and_se(exp, c1, c2, subgroup)?;
    if diff < grid.lo() || diff > grid.hi() {
        return Err(Error::Invalid(format!(
            "shift grid [{}, {}] does not cover the observed difference {diff}",
            grid.lo(),
            grid.hi()
        )));
    }
    let eval = prepared.evaluator(exp, &cfg.statistic)?;
    let shifts = grid.points();
    let observed = eval.evaluate_shifts(&prepared.arms, shifts)?;
    let counts = (0..cfg.replicates)
        .into_par_iter()
        .map(|l| {
            let draws = eval.evaluate_shifts(&prepared.replicate_arms(cfg.seed, l), shifts)?;
            Ok(draws
                .iter()
                .zip(&observed)
                .map(|(&t, &t_obs)| usize::from(exceeds_obs(t, t_obs, cfg.direction)))
                .collect::<Vec<usize>>())
        })
        .try_reduce(
            || vec![0; shifts.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(shifts
        .iter()
        .zip(counts)
        .map(|(&shift, count)| CurvePoint {
            shift,
            p_value: pvalue_from_count(count, cfg.replicates, cfg.estimator),
        })
        .collect())
}

/// Shift maximizing the p-value curve; ties resolve to the midpoint of the
/// maximizing shifts.
pub fn hl_estimate(curve: &[CurvePoint]) -> Result<f64> {
    let best = curve
        .iter()
        .map(|pt| pt.p_value)
        .fold(None, |acc: Option<f64>, p| {
            Some(acc.map_or(p, |a| a.max(p)))
        })
        .ok_or_else(|| Error::Invalid("p-value curve is empty".into()))?;
    let (lo, hi) = curve
        .iter()
        .filter(|pt| pt.p_value == best)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), pt| {
            (lo.min(pt.shift), hi.max(pt.shift))
        });
    Ok((lo + hi) / 2.0)
}

/// `{c : p(c) ≥ α}` over the grid, reported by its extremes.
pub fn invert_ci(curve: &[CurvePoint], alpha: f64) -> Result<ConfidenceInterval> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Invalid(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let hl = hl_estimate(curve)?;
    let mut sorted = curve.to_vec();
    sorted.sort_by(|a, b| a.shift.total_cmp(&b.shift));
    let kept: Vec<usize> = (0..sorted.len())
        .filter(|&k| sorted[k].p_value >= alpha)
        .collect();
    let (first, last) = match (kept.first(), kept.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::EmptyConfidenceSet),
    };
    Ok(ConfidenceInterval {
        level: 1.0 - alpha,
        lower: sorted[first].shift,
        upper: sorted[last].shift,
        hl_estimate: hl,
        contiguous: last - first + 1 == kept.len(),
        pvalue_curve: sorted,
    })
}

/// Confidence interval from the statistic in `cfg`.
#[allow(clippy::too_many_arguments)]
pub fn shift_ci(
    exp: &Experiment,
    design: &Design,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
    grid: &ShiftGrid,
    alpha: f64,
    cfg: &TestConfig,
) -> Result<ConfidenceInterval> {
    invert_ci(
        &pvalue_curve(exp, design, c1, c2, subgroup, grid, cfg)?,
        alpha,
    )
}

/// Interval for the average effect `mean Y(c1) − mean Y(c2)` that stays
/// asymptotically valid under heterogeneous effects: inverts shifted tests
/// built on the studentized statistic, whatever statistic `cfg` names.
#[allow(clippy::too_many_arguments)]
pub fn weak_null_ci(
    exp: &Experiment,
    design: &Design,
    c1: &Exposure,
    c2: &Exposure,
    subgroup: Option<AttributeCode>,
    grid: &ShiftGrid,
    alpha: f64,
    cfg: &TestConfig,
) -> Result<ConfidenceInterval> {
    let cfg = TestConfig {
        statistic: TestStatistic::Studentized,
        ..cfg.clone()
    };
    shift_ci(exp, design, c1, c2, subgroup, grid, alpha, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::SrDesign;
    use crate::inference::{test_pairwise, Direction, Estimator};
    use crate::model::{AttributeVector, ExposureMapping, GroupLabels, OutcomeVector};

    fn pts(v: &[(f64, f64)]) -> Vec<CurvePoint> {
        v.iter()
            .map(|&(shift, p_value)| CurvePoint { shift, p_value })
            .collect()
    }

    #[test]
    fn grid_construction() {
        let g = ShiftGrid::new(-1.0, 1.0, 0.5).unwrap();
        assert_eq!(g.points(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let g: ShiftGrid = "0:1:0.1".parse().unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.hi() - 1.0).abs() < 1e-12);
        assert!(ShiftGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(ShiftGrid::new(0.0, 1.0, 0.0).is_err());
        assert!("0:1".parse::<ShiftGrid>().is_err());
        assert_eq!(
            ShiftGrid::from_points(vec![2.0, 1.0, 2.0])
                .unwrap()
                .points(),
            &[1.0, 2.0]
        );
    }

    #[test]
    fn hl_estimate_examples() {
        assert_eq!(
            hl_estimate(&pts(&[(0.0, 0.2), (1.0, 0.9), (2.0, 0.3)])).unwrap(),
            1.0
        );
        assert_eq!(
            hl_estimate(&pts(&[(0.0, 0.5), (1.0, 0.5), (3.0, 0.5)])).unwrap(),
            1.5
        );
        assert!(hl_estimate(&[]).is_err());
    }

    #[test]
    fn invert_ci_examples() {
        let curve = pts(&[(0.0, 0.01), (1.0, 0.2), (2.0, 0.9), (3.0, 0.3), (4.0, 0.02)]);
        let ci = invert_ci(&curve, 0.0).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.0, 4.0));
        let ci = invert_ci(&curve, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper, ci.hl_estimate), (1.0, 3.0, 2.0));
        assert!(ci.contiguous);
        assert!(ci.lower <= ci.hl_estimate && ci.hl_estimate <= ci.upper);
        // Nesting in alpha.
        let tight = invert_ci(&curve, 0.25).unwrap();
        assert!(ci.lower <= tight.lower && tight.upper <= ci.upper);

        let gappy = pts(&[(0.0, 0.3), (1.0, 0.01), (2.0, 0.6)]);
        let ci = invert_ci(&gappy, 0.05).unwrap();
        assert!(!ci.contiguous);
        assert_eq!((ci.lower, ci.upper), (0.0, 2.0));

        let err = invert_ci(&curve, 0.95).unwrap_err();
        assert_eq!(
            err.to_string(),
            "no c with p(c) >= alpha; widen grid or check model"
        );
    }

    /// Groups of four with varying numbers of `A = 1` members, so that both
    /// attribute levels appear in exposure arms 0 and 1 at least twice. Base
    /// outcomes are centered within each (attribute, exposure) cell, so the
    /// adjusted arms match exactly at the true shift.
    fn constant_effect(tau: f64) -> (Experiment, Design) {
        let ones_per_group = [1, 1, 2, 2, 0, 0, 3, 4];
        let mut a = Vec::new();
        let mut labels = Vec::new();
        for (g, &k) in ones_per_group.iter().enumerate() {
            for j in 0..4 {
                a.push(u32::from(j < k));
                labels.push(g);
            }
        }
        let attributes = AttributeVector::from_codes(a).unwrap();
        let labels = GroupLabels::new(labels, ones_per_group.len()).unwrap();
        let w = ExposureMapping::Count
            .from_labels(&labels, &attributes)
            .unwrap();
        let n = attributes.len();
        let raw: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 3.0).collect();
        let key = |i: usize| (attributes.values()[i], w.values()[i].clone());
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let cell: Vec<usize> = (0..n).filter(|&j| key(j) == key(i)).collect();
                let centre = cell.iter().map(|&j| raw[j]).sum::<f64>() / cell.len() as f64;
                let bump = if w.values()[i] == Exposure::Count(1) {
                    tau
                } else {
                    0.0
                };
                raw[i] - centre + bump
            })
            .collect();
        let exp = Experiment::new(
            attributes,
            labels,
            OutcomeVector::new(y).unwrap(),
            ExposureMapping::Count,
        )
        .unwrap();
        let design =
            Design::Sr(SrDesign::from_observed(exp.labels(), exp.attributes().values()).unwrap());
        (exp, design)
    }

    fn cfg(replicates: usize) -> TestConfig {
        TestConfig {
            replicates,
            seed: 11,
            ..TestConfig::default()
        }
    }

    #[test]
    fn zero_shift_matches_pairwise_test() {
        let (exp, design) = constant_effect(0.7);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        let a = shift_test(&exp, &design, &c1, &c0, 0.0, None, &cfg(300)).unwrap();
        let b = test_pairwise(&exp, &design, &c1, &c0, None, &cfg(300)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shift_evaluation_matches_adjusted_outcomes() {
        let (exp, design) = constant_effect(0.4);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        for statistic in [TestStatistic::DiffInMeans, TestStatistic::Studentized] {
            let config = TestConfig {
                statistic: statistic.clone(),
                ..cfg(50)
            };
            for c in [-0.3, 0.4, 1.25] {
                let shifted = shift_test(&exp, &design, &c1, &c0, c, None, &config).unwrap();
                let y: Vec<f64> = exp
                    .outcomes()
                    .values()
                    .iter()
                    .zip(exp.exposures().values())
                    .map(|(&y, w)| if *w == c1 { y - c } else { y })
                    .collect();
                let adjusted = exp.with_outcomes(OutcomeVector::new(y).unwrap()).unwrap();
                let direct = test_pairwise(&adjusted, &design, &c1, &c0, None, &config).unwrap();
                assert!((shifted.statistic - direct.statistic).abs() < 1e-9);
                for (s, d) in shifted.null_draws.iter().zip(&direct.null_draws) {
                    assert!((s - d).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn curve_agrees_with_pointwise_shift_tests() {
        let (exp, design) = constant_effect(0.5);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        let grid = ShiftGrid::new(-2.0, 3.0, 0.25).unwrap();
        let config = cfg(200);
        let curve = pvalue_curve(&exp, &design, &c1, &c0, None, &grid, &config).unwrap();
        for pt in curve.iter().step_by(4) {
            let single = shift_test(&exp, &design, &c1, &c0, pt.shift, None, &config).unwrap();
            assert_eq!(single.p_value, pt.p_value);
        }
    }

    #[test]
    fn constant_effect_recovered() {
        let tau = 0.8;
        let (exp, design) = constant_effect(tau);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        let grid = ShiftGrid::new(-2.0, 3.0, 0.05).unwrap();
        let curve = pvalue_curve(&exp, &design, &c1, &c0, None, &grid, &cfg(500)).unwrap();
        let best = curve.iter().map(|p| p.p_value).fold(0.0, f64::max);
        let at_tau = curve.iter().find(|p| (p.shift - tau).abs() < 1e-9).unwrap();
        assert_eq!(at_tau.p_value, best);
        let hl = hl_estimate(&curve).unwrap();
        assert!((hl - tau).abs() <= 0.05 + 1e-9, "hl {hl}");
        let ci = invert_ci(&curve, 0.05).unwrap();
        assert!(ci.contains(tau));

        let weak = weak_null_ci(&exp, &design, &c1, &c0, None, &grid, 0.05, &cfg(500)).unwrap();
        assert!(weak.contains(tau));
    }

    #[test]
    fn hl_equivariant_to_outcome_shift() {
        let (exp, design) = constant_effect(0.3);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        let grid = ShiftGrid::new(-3.0, 4.0, 0.05).unwrap();
        let config = TestConfig {
            direction: Direction::TwoSided,
            estimator: Estimator::Valid,
            ..cfg(300)
        };
        let base =
            hl_estimate(&pvalue_curve(&exp, &design, &c1, &c0, None, &grid, &config).unwrap())
                .unwrap();
        let delta = 0.5;
        let y: Vec<f64> = exp
            .outcomes()
            .values()
            .iter()
            .zip(exp.exposures().values())
            .map(|(&y, w)| if *w == c1 { y + delta } else { y })
            .collect();
        let moved = exp.with_outcomes(OutcomeVector::new(y).unwrap()).unwrap();
        let shifted =
            hl_estimate(&pvalue_curve(&moved, &design, &c1, &c0, None, &grid, &config).unwrap())
                .unwrap();
        assert!(
            (shifted - base - delta).abs() <= 0.05 + 1e-9,
            "{base} {shifted}"
        );
    }

    #[test]
    fn default_grid_covers_observed_difference() {
        let (exp, _) = constant_effect(0.6);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        let g = ShiftGrid::default_for(&exp, &c1, &c0, None).unwrap();
        let (d, se) = observed_diff_and_se(&exp, &c1, &c0, None).unwrap();
        assert_eq!(g.len(), 241);
        assert!((g.points()[120] - d).abs() < 1e-12);
        assert!((g.hi() - d - 6.0 * se).abs() < 1e-9);
    }

    #[test]
    fn grid_must_cover_observed_difference() {
        let (exp, design) = constant_effect(0.6);
        let (c1, c0) = (Exposure::Count(1), Exposure::Count(0));
        let grid = ShiftGrid::new(10.0, 11.0, 0.5).unwrap();
        assert!(pvalue_curve(&exp, &design, &c1, &c0, None, &grid, &cfg(10)).is_err());
    }
}
