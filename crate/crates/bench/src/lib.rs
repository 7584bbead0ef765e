//! Fixtures shared by the benchmarks.

use groupperm_core::oracle::focal_indicator;
use groupperm_core::{
    AttributeVector, CrDesign, Design, Experiment, Exposure, ExposureMapping, GroupLabels,
    OutcomeVector, SrDesign,
};

/// `k` groups of four, two units of each attribute per group, so every unit has
/// one or two groupmates with attribute 1.
pub fn balanced_groups(k: usize) -> (AttributeVector, GroupLabels) {
    let n = 4 * k;
    let attributes =
        AttributeVector::new((0..n).map(|i| u32::from(i % 4 < 2)).collect(), &[0, 1]).unwrap();
    let labels = GroupLabels::new((0..n).map(|i| i / 4).collect(), k).unwrap();
    (attributes, labels)
}

/// Completely randomized design with the group sizes of `labels`.
pub fn cr_design(labels: &GroupLabels) -> Design {
    Design::Cr(CrDesign::from_observed(labels).unwrap())
}

/// Focal indicator of the contrast `c1` versus `c2` under the observed assignment.
pub fn focal_of(
    attributes: &AttributeVector,
    labels: &GroupLabels,
    c1: &Exposure,
    c2: &Exposure,
) -> Vec<bool> {
    let w = ExposureMapping::Count
        .from_labels(labels, attributes)
        .unwrap();
    focal_indicator(w.values(), attributes, c1, c2, None)
}

/// A roommate-shaped experiment: 39 rooms of four with mixed compositions and
/// deterministic outcomes, analysed under the stratified design.
pub fn roommates() -> (Experiment, Design) {
    let k = 39;
    let mut attributes = Vec::with_capacity(4 * k);
    let mut groups = Vec::with_capacity(4 * k);
    let mut outcomes = Vec::with_capacity(4 * k);
    for g in 0..k {
        let ones = [0, 1, 1, 2, 2, 3, 3, 4][g % 8];
        for j in 0..4 {
            let i = 4 * g + j;
            let a = u32::from(j < ones);
            attributes.push(a);
            groups.push(g);
            outcomes.push(((i * 7919) % 1000) as f64 / 250.0 + 0.2 * f64::from(a));
        }
    }
    let attributes = AttributeVector::new(attributes, &[0, 1]).unwrap();
    let labels = GroupLabels::new(groups, k).unwrap();
    let design = Design::Sr(SrDesign::from_observed(&labels, attributes.values()).unwrap());
    let exp = Experiment::new(
        attributes,
        labels,
        OutcomeVector::new(outcomes).unwrap(),
        ExposureMapping::Count,
    )
    .unwrap();
    (exp, design)
}
