//! Stratified (`SR`) and completely randomized (`CR`) group formation designs.
//!
//! Both samplers fill a fixed label template and shuffle it: per stratum for
//! `SR`, once over all units for `CR`. The template lists group 0 repeated
//! `n_0` times, then group 1, and so on; any fixed order gives the same
//! distribution.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::combinatorics::multinomial;
use crate::error::{check_len, Error, Result};
use crate::model::{AttributeCode, AttributeVector, GroupLabels};

fn template(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
        .collect()
}

/// `SR(n)`: for each stratum code `a` and group `k`, exactly `counts[a][k]`
/// units of stratum `a` receive label `k`. Zero-size groups are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrDesign {
    unit_strata: Vec<AttributeCode>,
    counts: BTreeMap<AttributeCode, Vec<usize>>,
    members: BTreeMap<AttributeCode, Vec<usize>>,
    num_groups: usize,
}

impl SrDesign {
    pub fn new(
        unit_strata: &[AttributeCode],
        counts: BTreeMap<AttributeCode, Vec<usize>>,
    ) -> Result<Self> {
        let num_groups = counts.values().next().map_or(0, Vec::len);
        if num_groups == 0 {
            return Err(Error::Invalid("design needs at least one group".into()));
        }
        if let Some((code, row)) = counts.iter().find(|(_, row)| row.len() != num_groups) {
            return Err(Error::Invalid(format!(
                "stratum {code} lists {} groups, expected {num_groups}",
                row.len()
            )));
        }
        let mut members: BTreeMap<AttributeCode, Vec<usize>> = BTreeMap::new();
        for (i, &s) in unit_strata.iter().enumerate() {
            members.entry(s).or_default().push(i);
        }
        for (code, units) in &members {
            let row = counts
                .get(code)
                .ok_or_else(|| Error::Invalid(format!("no group counts for stratum {code}")))?;
            let total: usize = row.iter().sum();
            if total != units.len() {
                return Err(Error::Invalid(format!(
                    "stratum {code} has {} units but its group counts sum to {total}",
                    units.len()
                )));
            }
        }
        if let Some((code, _)) = counts
            .iter()
            .find(|(code, row)| !members.contains_key(code) && row.iter().any(|&n| n > 0))
        {
            return Err(Error::Invalid(format!(
                "stratum {code} has group counts but no units"
            )));
        }
        Ok(SrDesign {
            unit_strata: unit_strata.to_vec(),
            counts,
            members,
            num_groups,
        })
    }

    /// Design whose counts are the observed tallies of `labels` by stratum.
    pub fn from_observed(labels: &GroupLabels, unit_strata: &[AttributeCode]) -> Result<Self> {
        check_len(labels.len(), unit_strata.len())?;
        let mut counts: BTreeMap<AttributeCode, Vec<usize>> = BTreeMap::new();
        for (&s, &l) in unit_strata.iter().zip(labels.labels()) {
            counts
                .entry(s)
                .or_insert_with(|| vec![0; labels.num_groups()])[l] += 1;
        }
        Self::new(unit_strata, counts)
    }

    pub fn unit_strata(&self) -> &[AttributeCode] {
        &self.unit_strata
    }

    pub fn counts(&self) -> &BTreeMap<AttributeCode, Vec<usize>> {
        &self.counts
    }

    /// Units of each stratum, in index order.
    pub fn stratum_members(&self) -> &BTreeMap<AttributeCode, Vec<usize>> {
        &self.members
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn len(&self) -> usize {
        self.unit_strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_strata.is_empty()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_groups];
        for row in self.counts.values() {
            for (k, n) in row.iter().enumerate() {
                sizes[k] += n;
            }
        }
        sizes
    }

    pub(crate) fn stratum_template(&self, code: AttributeCode) -> Vec<usize> {
        template(&self.counts[&code])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupLabels {
        let mut labels = vec![0; self.len()];
        for (code, units) in &self.members {
            let mut slots = self.stratum_template(*code);
            slots.shuffle(rng);
            for (&i, l) in units.iter().zip(slots) {
                labels[i] = l;
            }
        }
        GroupLabels::from_raw(labels, self.num_groups)
    }

    pub fn support_size(&self) -> BigUint {
        self.members
            .keys()
            .map(|code| multinomial(&self.counts[code]))
            .fold(BigUint::one(), |acc, m| acc * m)
    }

    pub fn contains(&self, labels: &GroupLabels) -> bool {
        labels.len() == self.len()
            && labels.num_groups() == self.num_groups
            && SrDesign::from_observed(labels, &self.unit_strata)
                .map(|d| d.counts == self.counts_without_empty_rows())
                .unwrap_or(false)
    }

    fn counts_without_empty_rows(&self) -> BTreeMap<AttributeCode, Vec<usize>> {
        self.counts
            .iter()
            .filter(|(code, _)| self.members.contains_key(code))
            .map(|(c, r)| (*c, r.clone()))
            .collect()
    }
}

/// `CR(n)`: exactly `sizes[k]` units receive label `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrDesign {
    sizes: Vec<usize>,
}

impl CrDesign {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().sum::<usize>() == 0 {
            return Err(Error::Invalid(
                "design needs at least one unit and one group".into(),
            ));
        }
        Ok(CrDesign { sizes })
    }

    pub fn from_observed(labels: &GroupLabels) -> Result<Self> {
        Self::new(labels.group_sizes())
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn template(&self) -> Vec<usize> {
        template(&self.sizes)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupLabels {
        let mut labels = self.template();
        labels.shuffle(rng);
        GroupLabels::from_raw(labels, self.num_groups())
    }

    pub fn support_size(&self) -> BigUint {
        multinomial(&self.sizes)
    }

    pub fn contains(&self, labels: &GroupLabels) -> bool {
        labels.num_groups() == self.num_groups() && labels.group_sizes() == self.sizes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    Sr(SrDesign),
    Cr(CrDesign),
}

impl Design {
    pub fn len(&self) -> usize {
        match self {
            Design::Sr(d) => d.len(),
            Design::Cr(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_groups(&self) -> usize {
        match self {
            Design::Sr(d) => d.num_groups(),
            Design::Cr(d) => d.num_groups(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupLabels {
        match self {
            Design::Sr(d) => d.sample(rng),
            Design::Cr(d) => d.sample(rng),
        }
    }

    pub fn support_size(&self) -> BigUint {
        match self {
            Design::Sr(d) => d.support_size(),
            Design::Cr(d) => d.support_size(),
        }
    }

    pub fn contains(&self, labels: &GroupLabels) -> bool {
        match self {
            Design::Sr(d) => d.contains(labels),
            Design::Cr(d) => d.contains(labels),
        }
    }

    /// The vector whose stabilizer the permutation tests sample from.
    ///
    /// For an `SR` design this is its stratification vector, which must refine
    /// the attribute so that its stabilizer sits inside `S_A`. A `CR` design is
    /// analysed conditionally on the observed attribute-by-group tallies, i.e.
    /// as `SR(n_A)`, so the attribute itself is returned.
    pub fn permutation_strata(&self, attributes: &AttributeVector) -> Result<Vec<AttributeCode>> {
        check_len(self.len(), attributes.len())?;
        match self {
            Design::Cr(_) => Ok(attributes.values().to_vec()),
            Design::Sr(d) => {
                for units in d.stratum_members().values() {
                    let first = attributes.values()[units[0]];
                    if units.iter().any(|&i| attributes.values()[i] != first) {
                        return Err(Error::Invalid(
                            "design strata must refine the attribute (each stratum needs a single attribute level)"
                                .into(),
                        ));
                    }
                }
                Ok(d.unit_strata().to_vec())
            }
        }
    }

    /// Fails unless `labels` is in the support of this design.
    pub fn check_observed(&self, labels: &GroupLabels) -> Result<()> {
        if self.contains(labels) {
            Ok(())
        } else {
            Err(Error::NotInSupport(match self {
                Design::Sr(_) => {
                    "observed attribute-by-group tallies differ from the design counts".into()
                }
                Design::Cr(_) => "observed group sizes differ from the design sizes".into(),
            }))
        }
    }
}

pub fn sr_from_observed(labels: &GroupLabels, attributes: &AttributeVector) -> Result<SrDesign> {
    SrDesign::from_observed(labels, attributes.values())
}

pub fn sample_sr<R: Rng + ?Sized>(design: &SrDesign, rng: &mut R) -> GroupLabels {
    design.sample(rng)
}

pub fn sample_cr<R: Rng + ?Sized>(design: &CrDesign, rng: &mut R) -> GroupLabels {
    design.sample(rng)
}

pub fn support_size(design: &Design) -> BigUint {
    design.support_size()
}
