use num_bigint::BigUint;
use num_traits::One;

/// Rearranges `v` into the next lexicographically greater permutation.
/// Returns `false` (leaving `v` sorted ascending) once the last permutation
/// has been passed. Repeated elements yield each distinct arrangement once.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All distinct arrangements of `items`, in lexicographic order.
pub fn distinct_permutations<T: Ord + Clone>(items: &[T]) -> Vec<Vec<T>> {
    let mut current = items.to_vec();
    current.sort();
    let mut out = vec![current.clone()];
    while next_permutation(&mut current) {
        out.push(current.clone());
    }
    out
}

pub fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// `(Σ parts)! / Π parts!`
pub fn multinomial(parts: &[usize]) -> BigUint {
    let mut total = 0;
    let mut acc = BigUint::one();
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

/// Iterates the cartesian product of `0..sizes[i]` in odometer order
/// (last index fastest).
pub(crate) struct Odometer {
    sizes: Vec<usize>,
    state: Option<Vec<usize>>,
}

impl Odometer {
    pub fn new(sizes: Vec<usize>) -> Self {
        let state = if sizes.contains(&0) {
            None
        } else {
            Some(vec![0; sizes.len()])
        };
        Odometer { sizes, state }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        let mut next = current.clone();
        let mut pos = next.len();
        loop {
            if pos == 0 {
                self.state = None;
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.sizes[pos] {
                self.state = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_permutations_are_distinct() {
        let perms = distinct_permutations(&[1, 0, 0]);
        assert_eq!(perms, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(distinct_permutations(&[0, 1, 2]).len(), 6);
        assert_eq!(distinct_permutations::<u8>(&[]).len(), 1);
    }

    #[test]
    fn counting_functions() {
        assert_eq!(factorial(5), BigUint::from(120u32));
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(3, 4), BigUint::from(0u32));
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u32));
        assert_eq!(multinomial(&[1, 1, 1]), BigUint::from(6u32));
        assert_eq!(multinomial(&[4, 0, 0]), BigUint::from(1u32));
    }

    #[test]
    fn odometer_covers_product() {
        let all: Vec<_> = Odometer::new(vec![2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[5], vec![1, 2]);
        assert_eq!(Odometer::new(vec![]).count(), 1);
        assert_eq!(Odometer::new(vec![2, 0]).count(), 0);
    }
}
