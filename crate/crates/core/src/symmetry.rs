//! Coordinate permutations, stabilizer strata and the enumeration helpers
//! used to check symmetry claims on small instances.
//!
//! The stabilizer of a vector `v` under coordinate permutation is the set of
//! permutations that only move units among positions carrying equal values of
//! `v`. It factors into one full symmetric group per stratum, so a uniform
//! element is an independent uniform shuffle inside every stratum and the
//! group is never materialized outside the guarded enumeration helpers.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::combinatorics::{distinct_permutations, factorial, Odometer};
use crate::designs::Design;
use crate::error::{check_len, Error, Result};
use crate::model::{AttributeVector, ExposureMapping, FocalSet};

/// A bijection on `0..N`, stored as its forward map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    forward: Vec<usize>,
}

impl Permutation {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; forward.len()];
        for &j in &forward {
            if j >= forward.len() || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Invalid(format!("{forward:?} is not a permutation")));
            }
        }
        Ok(Permutation { forward })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            forward: (0..n).collect(),
        }
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.forward.len()];
        for (i, &j) in self.forward.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { forward: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        check_len(self.len(), other.len())?;
        Ok(Permutation {
            forward: other.forward.iter().map(|&j| self.forward[j]).collect(),
        })
    }

    /// `π · x = (x_{π⁻¹(i)})_i`.
    pub fn apply<T: Clone>(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), x.len())?;
        let inv = self.inverse();
        Ok(inv.forward.iter().map(|&j| x[j].clone()).collect())
    }
}

pub fn apply_permutation<T: Clone>(perm: &Permutation, x: &[T]) -> Result<Vec<T>> {
    perm.apply(x)
}

/// Partition of `0..N` into the preimages of a vector's distinct values,
/// ordered by value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerStrata {
    strata: Vec<Vec<usize>>,
    len: usize,
}

impl StabilizerStrata {
    pub fn from_parts(strata: Vec<Vec<usize>>, len: usize) -> Result<Self> {
        let mut seen = vec![false; len];
        for &i in strata.iter().flatten() {
            if i >= len || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invalid(
                    "strata must be disjoint unit indices".into(),
                ));
            }
        }
        Ok(StabilizerStrata { strata, len })
    }

    pub fn strata(&self) -> &[Vec<usize>] {
        &self.strata
    }

    /// Number of units the strata act on.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Order of the generated permutation group, `Π |stratum|!`.
    pub fn group_order(&self) -> BigUint {
        self.strata
            .iter()
            .fold(BigUint::one(), |acc, s| acc * factorial(s.len()))
    }

    /// Replaces `x` by `π · x` for `π` uniform on the group: an independent
    /// uniform shuffle of the entries inside each stratum.
    pub fn shuffle_within<T: Clone, R: Rng + ?Sized>(&self, x: &mut [T], rng: &mut R) {
        let mut buf: Vec<T> = Vec::new();
        for stratum in &self.strata {
            if stratum.len() < 2 {
                continue;
            }
            buf.clear();
            buf.extend(stratum.iter().map(|&i| x[i].clone()));
            buf.shuffle(rng);
            for (&i, v) in stratum.iter().zip(buf.drain(..)) {
                x[i] = v;
            }
        }
    }

    /// Keeps only the strata whose units all satisfy `keep`; units outside are
    /// fixed points.
    pub fn retain(&self, keep: impl Fn(usize) -> bool) -> StabilizerStrata {
        StabilizerStrata {
            strata: self
                .strata
                .iter()
                .filter(|s| s.iter().all(|&i| keep(i)))
                .cloned()
                .collect(),
            len: self.len,
        }
    }

    fn stratum_of(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.len];
        for (s, stratum) in self.strata.iter().enumerate() {
            for &i in stratum {
                owner[i] = Some(s);
            }
        }
        owner
    }

    /// Whether `perm` only moves units inside their own stratum.
    pub fn contains(&self, perm: &Permutation) -> bool {
        if perm.len() != self.len {
            return false;
        }
        let owner = self.stratum_of();
        perm.forward().iter().enumerate().all(|(i, &j)| {
            if i == j {
                true
            } else {
                owner[i].is_some() && owner[i] == owner[j]
            }
        })
    }
}

pub fn stabilizer_strata<T: Ord>(v: &[T]) -> StabilizerStrata {
    let mut by_value: BTreeMap<&T, Vec<usize>> = BTreeMap::new();
    for (i, x) in v.iter().enumerate() {
        by_value.entry(x).or_default().push(i);
    }
    StabilizerStrata {
        strata: by_value.into_values().collect(),
        len: v.len(),
    }
}

/// Strata of `G_i = (A_i, U_i)`: within-stratum permutations form the
/// stabilizer of the focal indicator inside `S_A`.
pub fn joint_strata(attributes: &AttributeVector, focal: &FocalSet) -> Result<StabilizerStrata> {
    check_len(attributes.len(), focal.members().len())?;
    let pairs: Vec<_> = attributes
        .values()
        .iter()
        .zip(focal.members())
        .map(|(&a, &u)| (a, u))
        .collect();
    Ok(stabilizer_strata(&pairs))
}

pub fn sample_stabilizer_permutation<R: Rng + ?Sized>(
    strata: &StabilizerStrata,
    rng: &mut R,
) -> Permutation {
    let mut forward: Vec<usize> = (0..strata.len).collect();
    for stratum in &strata.strata {
        let mut images = stratum.clone();
        images.shuffle(rng);
        for (&i, j) in stratum.iter().zip(images) {
            forward[i] = j;
        }
    }
    Permutation { forward }
}

/// Default cap on explicitly enumerated group elements or orbit points.
pub const ENUMERATION_GUARD: u64 = 1_000_000;

pub(crate) fn guard(size: &BigUint, limit: u64) -> Result<()> {
    if size > &BigUint::from(limit) {
        Err(Error::GuardExceeded {
            size: size.to_string(),
            guard: limit,
        })
    } else {
        Ok(())
    }
}

/// Every element of the group generated by the strata.
pub fn enumerate_group(strata: &StabilizerStrata, limit: u64) -> Result<Vec<Permutation>> {
    guard(&strata.group_order(), limit)?;
    let per_stratum: Vec<Vec<Vec<usize>>> = strata
        .strata
        .iter()
        .map(|s| distinct_permutations(s))
        .collect();
    let sizes = per_stratum.iter().map(Vec::len).collect();
    Ok(Odometer::new(sizes)
        .map(|choice| {
            let mut forward: Vec<usize> = (0..strata.len).collect();
            for ((stratum, images), &c) in strata.strata.iter().zip(&per_stratum).zip(&choice) {
                for (&i, &j) in stratum.iter().zip(&images[c]) {
                    forward[i] = j;
                }
            }
            Permutation { forward }
        })
        .collect())
}

/// The orbit `Π · x`, built directly as the distinct within-stratum
/// rearrangements of `x`.
pub fn orbit<T: Ord + Clone>(
    strata: &StabilizerStrata,
    x: &[T],
    limit: u64,
) -> Result<BTreeSet<Vec<T>>> {
    check_len(strata.len, x.len())?;
    let arrangements: Vec<Vec<Vec<T>>> = strata
        .strata
        .iter()
        .map(|s| {
            let values: Vec<T> = s.iter().map(|&i| x[i].clone()).collect();
            distinct_permutations(&values)
        })
        .collect();
    let size = arrangements
        .iter()
        .fold(BigUint::one(), |acc, a| acc * BigUint::from(a.len()));
    guard(&size, limit)?;
    let sizes = arrangements.iter().map(Vec::len).collect();
    Ok(Odometer::new(sizes)
        .map(|choice| {
            let mut y = x.to_vec();
            for ((stratum, arr), &c) in strata.strata.iter().zip(&arrangements).zip(&choice) {
                for (&i, v) in stratum.iter().zip(&arr[c]) {
                    y[i] = v.clone();
                }
            }
            y
        })
        .collect())
}

/// Orbit and stabilizer sizes of `x`, counted by enumerating every group
/// element.
pub fn orbit_stabilizer_counts<T: Ord + Clone>(
    strata: &StabilizerStrata,
    x: &[T],
    limit: u64,
) -> Result<(u64, u64)> {
    check_len(strata.len, x.len())?;
    let group = enumerate_group(strata, limit)?;
    let mut images = BTreeSet::new();
    let mut fixed = 0u64;
    for perm in &group {
        let y = perm.apply(x)?;
        if y == x {
            fixed += 1;
        }
        images.insert(y);
    }
    Ok((images.len() as u64, fixed))
}

/// Checks `c*(π·L) = π·c*(L)` for `trials` random pairs with `L` drawn from the
/// design and `π` uniform on `S_A`.
pub fn verify_equivariance<R: Rng + ?Sized>(
    design: &Design,
    attributes: &AttributeVector,
    mapping: &ExposureMapping,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    let strata = stabilizer_strata(attributes.values());
    for _ in 0..trials {
        let labels = design.sample(rng);
        let perm = sample_stabilizer_permutation(&strata, rng);
        let moved =
            crate::model::GroupLabels::new(perm.apply(labels.labels())?, labels.num_groups())?;
        let lhs = mapping.from_labels(&moved, attributes)?;
        let rhs = perm.apply(mapping.from_labels(&labels, attributes)?.values())?;
        if lhs.values() != rhs.as_slice() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Exposure, ExposureKind, ExposureVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn strata_by_value() {
        let s = stabilizer_strata(&[1, 1, 0, 0, 1, 0, 0]);
        assert_eq!(s.strata(), &[vec![2, 3, 5, 6], vec![0, 1, 4]]);
        assert_eq!(stabilizer_strata(&[5; 4]).strata().len(), 1);
        assert_eq!(stabilizer_strata(&[3, 1, 2]).strata().len(), 3);
    }

    #[test]
    fn joint_strata_toy_groups() {
        let a = AttributeVector::from_codes(vec![1, 1, 0, 0, 1, 0, 0]).unwrap();
        let w = ExposureVector::new(
            [1, 1, 2, 1, 0, 0, 0]
                .iter()
                .map(|&c| Exposure::Count(c))
                .collect(),
            ExposureKind::Count,
        )
        .unwrap();
        let u = crate::model::focal_set(&w, &Exposure::Count(0), &Exposure::Count(1)).unwrap();
        let s = joint_strata(&a, &u).unwrap();
        assert_eq!(s.strata(), &[vec![2], vec![3, 5, 6], vec![0, 1, 4]]);

        let w_all = ExposureVector::new(vec![Exposure::Count(0); 7], ExposureKind::Count).unwrap();
        let u_all =
            crate::model::focal_set(&w_all, &Exposure::Count(0), &Exposure::Count(1)).unwrap();
        assert_eq!(
            joint_strata(&a, &u_all).unwrap(),
            stabilizer_strata(a.values())
        );
    }

    #[test]
    fn permutation_action() {
        let id = Permutation::identity(3);
        assert_eq!(id.apply(&['a', 'b', 'c']).unwrap(), vec!['a', 'b', 'c']);
        // 0 -> 1 -> 2 -> 0
        let cycle = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(cycle.apply(&['a', 'b', 'c']).unwrap(), vec!['c', 'a', 'b']);
        assert!(cycle.apply(&['a']).is_err());
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(cycle.compose(&cycle.inverse()).unwrap().is_identity());
    }

    #[test]
    fn stabilizer_fixes_its_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = [2, 0, 2, 1, 0, 2, 1];
        let s = stabilizer_strata(&x);
        for _ in 0..100 {
            let p = sample_stabilizer_permutation(&s, &mut rng);
            let q = sample_stabilizer_permutation(&s, &mut rng);
            assert!(s.contains(&p));
            let pq = p.compose(&q).unwrap();
            assert!(s.contains(&pq));
            assert_eq!(pq.apply(&x).unwrap(), x.to_vec());
        }
    }

    #[test]
    fn singleton_strata_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = stabilizer_strata(&[0, 1, 2, 3]);
        for _ in 0..20 {
            assert!(sample_stabilizer_permutation(&s, &mut rng).is_identity());
        }
    }

    #[test]
    fn orbit_stabilizer_small() {
        let s3 = stabilizer_strata(&[0, 0, 0]);
        assert_eq!(
            orbit_stabilizer_counts(&s3, &['a', 'a', 'b'], ENUMERATION_GUARD).unwrap(),
            (3, 2)
        );
        assert_eq!(
            orbit_stabilizer_counts(&s3, &['a', 'a', 'a'], ENUMERATION_GUARD).unwrap(),
            (1, 6)
        );
        let s5 = stabilizer_strata(&[0; 5]);
        assert_eq!(
            orbit_stabilizer_counts(&s5, &[1, 2, 3, 4, 5], ENUMERATION_GUARD).unwrap(),
            (120, 1)
        );
        assert_eq!(
            orbit(&s3, &['a', 'a', 'b'], ENUMERATION_GUARD)
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn enumeration_guard_trips() {
        let big = stabilizer_strata(&[0; 12]);
        let err = orbit_stabilizer_counts(&big, &[0u8; 12], ENUMERATION_GUARD).unwrap_err();
        assert!(err.is_guard());
    }
}
