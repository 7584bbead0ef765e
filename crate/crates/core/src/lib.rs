//! Randomization inference for peer effects in group formation experiments.
//!
//! Units with a discrete attribute are assigned to groups by a random design.
//! A unit's exposure summarizes the attributes of its group mates, and the
//! crate tests nulls about exposure effects by permuting exposures within the
//! strata that leave the design invariant.

pub mod combinatorics;
pub mod designs;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod symmetry;

pub use designs::{CrDesign, Design, SrDesign};
pub use error::{Error, Result};
pub use estimation::{
    hl_estimate, invert_ci, observed_diff_and_se, pvalue_curve, shift_ci, shift_test, weak_null_ci,
    ConfidenceInterval, CurvePoint, ShiftGrid,
};
pub use inference::{
    diff_in_means, mc_pvalue, studentized_stat, test_pairwise, test_sharp, Direction, Estimator,
    Experiment, NullSpec, TestConfig, TestResult, TestStatistic,
};
pub use model::{
    coarsen_exposure, exposure_of, focal_set, labels_to_assignment, subgroup_restrict,
    AttributeCode, AttributeVector, CoarseningMap, Exposure, ExposureKind, ExposureMapping,
    ExposureVector, FocalSet, GroupAssignment, GroupLabels, OutcomeVector,
};
pub use symmetry::{Permutation, StabilizerStrata};
