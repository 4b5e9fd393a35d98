//! Index sets enumerating iterated integrals: compositions with bounded sum,
//! compositions with exact sum and length, integer partitions, multinomials.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on expansion orders.
pub const DEFAULT_ORDER_CAP: usize = 12;

/// Default cap on orthogonalization order in floating point.
pub const DEFAULT_FLOAT_ORTHO_CAP: usize = 8;

/// Environment variable overriding [`DEFAULT_ORDER_CAP`].
pub const ORDER_CAP_ENV: &str = "LEVY_CHAOS_KMAX";

fn env_cap() -> Option<usize> {
    static CAP: OnceLock<Option<usize>> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(ORDER_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v >= 1)
    })
}

/// Order cap in effect for this process. Read once from `LEVY_CHAOS_KMAX`.
pub fn order_cap() -> usize {
    env_cap().unwrap_or(DEFAULT_ORDER_CAP)
}

/// Orthogonalization cap in floating point; `LEVY_CHAOS_KMAX` overrides it too.
pub fn float_ortho_cap() -> usize {
    env_cap().unwrap_or(DEFAULT_FLOAT_ORTHO_CAP)
}

/// Tuple `(i_1, ..., i_j)` of positive integers labelling an iterated
/// integral. `i_1` drives the innermost (earliest) integrator.
///
/// Ordering is by sum, then length, then lexicographic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexTuple(Vec<usize>);

impl IndexTuple {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidTuple("empty tuple".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidTuple(format!("{parts:?} has a zero part")));
        }
        Ok(Self(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn max_part(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// The tuple without its last (outermost) entry.
    pub fn parent(&self) -> Option<IndexTuple> {
        (self.0.len() > 1).then(|| IndexTuple(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn reversed(&self) -> IndexTuple {
        IndexTuple(self.0.iter().rev().copied().collect())
    }
}

impl TryFrom<Vec<usize>> for IndexTuple {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        IndexTuple::new(v)
    }
}

impl From<IndexTuple> for Vec<usize> {
    fn from(t: IndexTuple) -> Self {
        t.0
    }
}

impl Ord for IndexTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sum()
            .cmp(&other.sum())
            .then(self.0.len().cmp(&other.0.len()))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for IndexTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Integer partition with parts in weakly decreasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<usize>,
    /// `multiplicities[r - 1]` counts the parts equal to `r`, for `r = 1..=k`.
    multiplicities: Vec<usize>,
}

impl Partition {
    pub fn from_parts(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidTuple(format!(
                "{parts:?} is not a partition"
            )));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let k: usize = parts.iter().sum();
        let mut multiplicities = vec![0; k];
        for &p in &parts {
            multiplicities[p - 1] += 1;
        }
        Ok(Self {
            parts,
            multiplicities,
        })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Count of parts equal to `r`.
    pub fn multiplicity(&self, r: usize) -> usize {
        r.checked_sub(1)
            .and_then(|i| self.multiplicities.get(i))
            .copied()
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }
}

fn check_cap(k: usize) -> Result<()> {
    let cap = order_cap();
    if k > cap {
        return Err(Error::OrderTooLarge { order: k, cap });
    }
    Ok(())
}

/// All tuples of positive integers with sum at most `k`, in the crate's
/// canonical order. Exactly `2^k - 1` of them.
pub fn index_set(k: usize) -> Result<Vec<IndexTuple>> {
    if k == 0 {
        return Err(Error::InvalidTuple("index set order must be >= 1".into()));
    }
    check_cap(k)?;
    let mut out = Vec::with_capacity((1usize << k) - 1);
    for n in 1..=k {
        for p in 1..=n {
            out.extend(exact_sum_compositions(n, p));
        }
    }
    Ok(out)
}

/// Length-`p` tuples of positive integers summing to `n`, lexicographic.
/// Empty when `p > n` or either argument is zero.
pub fn exact_sum_compositions(n: usize, p: usize) -> Vec<IndexTuple> {
    let mut out = Vec::new();
    if p == 0 || p > n {
        return out;
    }
    let mut cur = Vec::with_capacity(p);
    compositions_rec(n, p, &mut cur, &mut out);
    out
}

fn compositions_rec(rest: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<IndexTuple>) {
    if slots == 1 {
        cur.push(rest);
        out.push(IndexTuple(cur.clone()));
        cur.pop();
        return;
    }
    // leave at least one for each remaining slot
    for first in 1..=rest - (slots - 1) {
        cur.push(first);
        compositions_rec(rest - first, slots - 1, cur, out);
        cur.pop();
    }
}

/// Integer partitions of `k`, parts weakly decreasing, listed in reverse
/// lexicographic order (`(k)` first).
pub fn partitions(k: usize) -> Result<Vec<Partition>> {
    if k == 0 {
        return Err(Error::InvalidTuple("partition order must be >= 1".into()));
    }
    check_cap(k)?;
    let mut out = Vec::new();
    let mut cur = Vec::new();
    partitions_rec(k, k, &mut cur, &mut out);
    Ok(out)
}

fn partitions_rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition::from_parts(cur.clone()).expect("nonempty positive parts"));
        return;
    }
    for p in (1..=max.min(rest)).rev() {
        cur.push(p);
        partitions_rec(rest - p, p, cur, out);
        cur.pop();
    }
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// `(sum parts)! / prod(parts!)`, exact.
pub fn multinomial(parts: &[usize]) -> BigUint {
    let total: usize = parts.iter().sum();
    let denom = parts
        .iter()
        .fold(BigUint::one(), |acc, &p| acc * factorial(p));
    factorial(total) / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuples(v: &[&[usize]]) -> Vec<IndexTuple> {
        v.iter().map(|p| IndexTuple::new(p.to_vec()).unwrap()).collect()
    }

    #[test]
    fn index_set_small() {
        assert_eq!(index_set(2).unwrap(), tuples(&[&[1], &[2], &[1, 1]]));
        let i3 = index_set(3).unwrap();
        assert_eq!(i3.len(), 7);
        assert!(i3.contains(&IndexTuple::new(vec![1, 2]).unwrap()));
        assert!(i3.contains(&IndexTuple::new(vec![2, 1]).unwrap()));
    }

    #[test]
    fn index_set_is_sorted_and_prefix_closed() {
        let set = index_set(6).unwrap();
        assert!(set.windows(2).all(|w| w[0] < w[1]));
        for t in &set {
            if let Some(p) = t.parent() {
                assert!(set.binary_search(&p).is_ok(), "{t} has no parent {p}");
            }
        }
    }

    #[test]
    fn index_set_rejects_zero_and_cap() {
        assert!(index_set(0).is_err());
        assert_eq!(
            index_set(order_cap() + 1).unwrap_err().code(),
            "combinatorics.order_too_large"
        );
    }

    #[test]
    fn exact_sum_examples() {
        assert_eq!(exact_sum_compositions(3, 2), tuples(&[&[1, 2], &[2, 1]]));
        assert_eq!(exact_sum_compositions(4, 1), tuples(&[&[4]]));
        assert_eq!(exact_sum_compositions(5, 5), tuples(&[&[1, 1, 1, 1, 1]]));
        assert!(exact_sum_compositions(2, 3).is_empty());
    }

    #[test]
    fn partitions_examples() {
        let p3: Vec<Vec<usize>> = partitions(3)
            .unwrap()
            .iter()
            .map(|p| p.parts().to_vec())
            .collect();
        assert_eq!(p3, vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(partitions(4).unwrap().len(), 5);
        let two_one = Partition::from_parts(vec![1, 2]).unwrap();
        assert_eq!(two_one.parts(), &[2, 1]);
        assert_eq!(two_one.multiplicity(1), 1);
        assert_eq!(two_one.multiplicity(2), 1);
        assert_eq!(two_one.multiplicity(3), 0);
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(&[1, 1, 2]), BigUint::from(12u32));
        assert_eq!(multinomial(&[7]), BigUint::from(1u32));
        assert_eq!(multinomial(&[2, 1, 1]), BigUint::from(12u32));
        assert_eq!(multinomial(&[2, 1, 0]), BigUint::from(3u32));
    }

    #[test]
    fn tuple_validation() {
        assert!(IndexTuple::new(vec![]).is_err());
        assert!(IndexTuple::new(vec![1, 0]).is_err());
        let t: IndexTuple = serde_json::from_str("[2,1]").unwrap();
        assert_eq!(t.to_string(), "(2,1)");
        assert!(serde_json::from_str::<IndexTuple>("[0]").is_err());
    }
}
