//! Experiment data model: attributes, group labels, neighbor sets, exposures,
//! focal sets and outcomes.
//!
//! Units are indexed `0..N` and group labels `0..K` throughout the library;
//! the command-line layer converts to and from the 1-based labels users see.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub type AttributeCode = u32;

/// Per-unit discrete attribute with an explicitly declared alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeVector {
    values: Vec<AttributeCode>,
    alphabet: Vec<AttributeCode>,
}

impl AttributeVector {
    /// Builds an attribute vector over a declared alphabet. Declared codes need
    /// not all occur in `values`.
    pub fn new(values: Vec<AttributeCode>, alphabet: &[AttributeCode]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Invalid(format!(
                "attribute vector needs at least 2 units, got {}",
                values.len()
            )));
        }
        let alphabet: Vec<_> = alphabet
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| alphabet.binary_search(v).is_err())
        {
            return Err(Error::Invalid(format!(
                "unit {i} has attribute code {v} outside the declared alphabet"
            )));
        }
        Ok(AttributeVector { values, alphabet })
    }

    /// Alphabet inferred from the observed codes.
    pub fn from_codes(values: Vec<AttributeCode>) -> Result<Self> {
        let alphabet: Vec<_> = values
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Self::new(values, &alphabet)
    }

    pub fn values(&self) -> &[AttributeCode] {
        &self.values
    }

    pub fn alphabet(&self) -> &[AttributeCode] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.alphabet == [0, 1]
    }

    pub fn count_of(&self, code: AttributeCode) -> usize {
        self.values.iter().filter(|&&v| v == code).count()
    }

    /// Constructed covariate `B = (A, C)`: one code per distinct observed
    /// `(a, c)` pair, ordered lexicographically. Every stratum of the result
    /// lies inside a single stratum of `self`.
    pub fn refine(&self, covariate: &[AttributeCode]) -> Result<AttributeVector> {
        check_len(self.len(), covariate.len())?;
        let pairs: BTreeSet<(AttributeCode, AttributeCode)> = self
            .values
            .iter()
            .copied()
            .zip(covariate.iter().copied())
            .collect();
        let index: BTreeMap<_, _> = pairs
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, i as AttributeCode))
            .collect();
        let codes = self
            .values
            .iter()
            .zip(covariate)
            .map(|(&a, &c)| index[&(a, c)])
            .collect();
        AttributeVector::from_codes(codes)
    }
}

/// Group label per unit, `L_i ∈ 0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupLabels {
    labels: Vec<usize>,
    num_groups: usize,
}

impl GroupLabels {
    pub fn new(labels: Vec<usize>, num_groups: usize) -> Result<Self> {
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_groups) {
            return Err(Error::Invalid(format!(
                "unit {i} has group label {l}, expected < {num_groups}"
            )));
        }
        Ok(GroupLabels { labels, num_groups })
    }

    /// Re-indexes arbitrary group identifiers to `0..K` in order of first
    /// appearance.
    pub fn from_ids<T: Hash + Eq + Clone>(ids: &[T]) -> Self {
        let mut index: HashMap<T, usize> = HashMap::new();
        let labels = ids
            .iter()
            .map(|id| {
                let next = index.len();
                *index.entry(id.clone()).or_insert(next)
            })
            .collect();
        GroupLabels {
            labels,
            num_groups: index.len(),
        }
    }

    pub(crate) fn from_raw(labels: Vec<usize>, num_groups: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < num_groups));
        GroupLabels { labels, num_groups }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of units carrying each label.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_groups];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Units of each group, in index order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_groups];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }
}

/// Neighbor sets `Z_i`: the units sharing unit `i`'s group, excluding `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    neighbors: Vec<Vec<usize>>,
}

impl GroupAssignment {
    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

pub fn labels_to_assignment(labels: &GroupLabels) -> GroupAssignment {
    let members = labels.members();
    let neighbors = labels
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| members[l].iter().copied().filter(|&j| j != i).collect())
        .collect();
    GroupAssignment { neighbors }
}

/// A unit's exposure: the sorted multiset of its neighbors' attribute codes,
/// the number of neighbors with attribute 1, or a coarsened label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exposure {
    Count(usize),
    Multiset(Vec<AttributeCode>),
    Label(String),
}

impl Exposure {
    pub fn multiset(mut codes: Vec<AttributeCode>) -> Self {
        codes.sort_unstable();
        Exposure::Multiset(codes)
    }

    pub fn label(s: impl Into<String>) -> Self {
        Exposure::Label(s.into())
    }

    pub fn kind(&self) -> ExposureKind {
        match self {
            Exposure::Count(_) => ExposureKind::Count,
            Exposure::Multiset(_) => ExposureKind::Multiset,
            Exposure::Label(_) => ExposureKind::Coarsened,
        }
    }

    /// Parses the canonical text form of an exposure of the given kind:
    /// an integer, `{a,b,...}` (commas or semicolons), or a bare label.
    pub fn parse(s: &str, kind: ExposureKind) -> Result<Self> {
        let s = s.trim();
        match kind {
            ExposureKind::Count => s
                .parse()
                .map(Exposure::Count)
                .map_err(|_| Error::Invalid(format!("'{s}' is not a count exposure"))),
            ExposureKind::Multiset => parse_multiset(s).map(Exposure::multiset),
            ExposureKind::Coarsened => {
                if s.is_empty() {
                    Err(Error::Invalid("empty exposure label".into()))
                } else {
                    Ok(Exposure::Label(s.to_string()))
                }
            }
        }
    }
}

fn parse_multiset(s: &str) -> Result<Vec<AttributeCode>> {
    let inner = s
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| Error::Invalid(format!("multiset '{s}' must be written as {{a,b,...}}")))?;
    inner
        .split([',', ';'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Invalid(format!("bad attribute code '{t}' in multiset '{s}'")))
        })
        .collect()
}

impl fmt::Display for Exposure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exposure::Count(c) => write!(f, "{c}"),
            Exposure::Label(l) => f.write_str(l),
            Exposure::Multiset(codes) => {
                f.write_str("{")?;
                for (i, c) in codes.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExposureKind {
    Multiset,
    Count,
    Coarsened,
}

impl fmt::Display for ExposureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExposureKind::Multiset => "multiset",
            ExposureKind::Count => "count",
            ExposureKind::Coarsened => "coarsened",
        })
    }
}

impl FromStr for ExposureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiset" => Ok(ExposureKind::Multiset),
            "count" => Ok(ExposureKind::Count),
            "coarsened" => Ok(ExposureKind::Coarsened),
            other => Err(Error::Invalid(format!("unknown exposure kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureVector {
    values: Vec<Exposure>,
    kind: ExposureKind,
}

impl ExposureVector {
    pub fn new(values: Vec<Exposure>, kind: ExposureKind) -> Result<Self> {
        if let Some((i, e)) = values.iter().enumerate().find(|(_, e)| e.kind() != kind) {
            return Err(Error::Invalid(format!(
                "unit {i} has exposure {e} which is not of kind {kind:?}"
            )));
        }
        Ok(ExposureVector { values, kind })
    }

    pub fn values(&self) -> &[Exposure] {
        &self.values
    }

    pub fn kind(&self) -> ExposureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<Exposure> {
        self.values
    }
}

pub fn exposure_of(
    assignment: &GroupAssignment,
    attributes: &AttributeVector,
    kind: ExposureKind,
) -> Result<ExposureVector> {
    check_len(attributes.len(), assignment.len())?;
    let a = attributes.values();
    let values = match kind {
        ExposureKind::Count => {
            if !attributes.is_binary() {
                return Err(Error::CountRequiresBinary);
            }
            assignment
                .neighbors()
                .iter()
                .map(|z| Exposure::Count(z.iter().filter(|&&j| a[j] == 1).count()))
                .collect()
        }
        ExposureKind::Multiset => assignment
            .neighbors()
            .iter()
            .map(|z| Exposure::multiset(z.iter().map(|&j| a[j]).collect()))
            .collect(),
        ExposureKind::Coarsened => {
            return Err(Error::Invalid(
                "coarsened exposures are produced by coarsen_exposure".into(),
            ))
        }
    };
    Ok(ExposureVector { values, kind })
}

/// Table mapping neighbor-attribute multisets to coarse labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoarseningMap {
    table: BTreeMap<Vec<AttributeCode>, String>,
}

impl CoarseningMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, multiset: Vec<AttributeCode>, label: impl Into<String>) {
        let mut key = multiset;
        key.sort_unstable();
        self.table.insert(key, label.into());
    }

    pub fn get(&self, multiset: &[AttributeCode]) -> Option<&str> {
        self.table.get(multiset).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[AttributeCode], &str)> {
        self.table.iter().map(|(k, v)| (k.as_slice(), v.as_str()))
    }
}

impl FromIterator<(Vec<AttributeCode>, String)> for CoarseningMap {
    fn from_iter<I: IntoIterator<Item = (Vec<AttributeCode>, String)>>(iter: I) -> Self {
        let mut map = CoarseningMap::new();
        for (k, v) in iter {
            map.insert(k, v);
        }
        map
    }
}

pub fn coarsen_exposure(exposures: &ExposureVector, map: &CoarseningMap) -> Result<ExposureVector> {
    let values = exposures
        .values()
        .iter()
        .map(|e| match e {
            Exposure::Multiset(codes) => map
                .get(codes)
                .map(Exposure::label)
                .ok_or_else(|| Error::MissingCoarsening(e.to_string())),
            other => Err(Error::Invalid(format!(
                "coarsening applies to multiset exposures, got {other}"
            ))),
        })
        .collect::<Result<_>>()?;
    Ok(ExposureVector {
        values,
        kind: ExposureKind::Coarsened,
    })
}

/// The complete exposure mapping `c(·)` used by an analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExposureMapping {
    Multiset,
    Count,
    Coarsened(CoarseningMap),
}

impl ExposureMapping {
    pub fn kind(&self) -> ExposureKind {
        match self {
            ExposureMapping::Multiset => ExposureKind::Multiset,
            ExposureMapping::Count => ExposureKind::Count,
            ExposureMapping::Coarsened(_) => ExposureKind::Coarsened,
        }
    }

    pub fn apply(
        &self,
        assignment: &GroupAssignment,
        attributes: &AttributeVector,
    ) -> Result<ExposureVector> {
        match self {
            ExposureMapping::Multiset => {
                exposure_of(assignment, attributes, ExposureKind::Multiset)
            }
            ExposureMapping::Count => exposure_of(assignment, attributes, ExposureKind::Count),
            ExposureMapping::Coarsened(map) => {
                let w = exposure_of(assignment, attributes, ExposureKind::Multiset)?;
                coarsen_exposure(&w, map)
            }
        }
    }

    pub fn from_labels(
        &self,
        labels: &GroupLabels,
        attributes: &AttributeVector,
    ) -> Result<ExposureVector> {
        self.apply(&labels_to_assignment(labels), attributes)
    }
}

/// Indicator vector of the focal set for an exposure contrast `(c1, c2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocalSet {
    members: Vec<bool>,
    pair: (Exposure, Exposure),
}

impl FocalSet {
    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn pair(&self) -> (&Exposure, &Exposure) {
        (&self.pair.0, &self.pair.1)
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.members[unit]
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }
}

pub fn focal_set(exposures: &ExposureVector, c1: &Exposure, c2: &Exposure) -> Result<FocalSet> {
    if c1 == c2 {
        return Err(Error::Invalid(format!(
            "contrast needs two distinct exposures, got {c1} twice"
        )));
    }
    let members: Vec<bool> = exposures
        .values()
        .iter()
        .map(|w| w == c1 || w == c2)
        .collect();
    if !members.iter().any(|&m| m) {
        return Err(Error::NoFocalUnits);
    }
    Ok(FocalSet {
        members,
        pair: (c1.clone(), c2.clone()),
    })
}

/// Restricts a focal set to the units whose attribute equals `level`.
pub fn subgroup_restrict(
    focal: &FocalSet,
    attributes: &AttributeVector,
    level: AttributeCode,
) -> Result<FocalSet> {
    check_len(focal.members.len(), attributes.len())?;
    if attributes.alphabet().binary_search(&level).is_err() {
        return Err(Error::Invalid(format!(
            "attribute level {level} is not in the alphabet"
        )));
    }
    let members: Vec<bool> = focal
        .members
        .iter()
        .zip(attributes.values())
        .map(|(&m, &a)| m && a == level)
        .collect();
    if !members.iter().any(|&m| m) {
        return Err(Error::NoFocalUnits);
    }
    Ok(FocalSet {
        members,
        pair: focal.pair.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeVector {
    values: Vec<f64>,
}

impl OutcomeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "outcome of unit {i} is not finite ({v})"
            )));
        }
        Ok(OutcomeVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
