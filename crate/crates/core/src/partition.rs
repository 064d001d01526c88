//! Integer partitions as isomorphism types of finite abelian p-groups.
//!
//! The partition `(λ_1 ≥ … ≥ λ_k)` stands for `⊕ Z/p^{λ_i}`. The empty
//! partition is the trivial group.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Label used for the empty partition in text output.
pub const TRIVIAL_LABEL: &str = "trivial";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Builds a partition from nonincreasing positive parts.
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.iter().any(|&x| x == 0) {
            return Err(Error::InvalidPartition(format!("{parts:?} has a zero part")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!("{parts:?} is not nonincreasing")));
        }
        Ok(Partition(parts))
    }

    /// Sorts and drops zero parts.
    pub fn from_unsorted(mut parts: Vec<u32>) -> Self {
        parts.retain(|&x| x > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    pub fn trivial() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn is_trivial(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of parts (the p-rank of the group).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ λ_i`, i.e. `log_p` of the group order.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Largest part; 0 for the trivial group.
    pub fn largest(&self) -> u32 {
        self.0.first().copied().unwrap_or(0)
    }

    /// `λ'_j`, 1-based; zero past the largest part.
    pub fn conjugate_part(&self, j: u32) -> u32 {
        self.0.iter().filter(|&&x| x >= j).count() as u32
    }

    pub fn conjugate(&self) -> Partition {
        Partition((1..=self.largest()).map(|j| self.conjugate_part(j)).collect())
    }

    /// Multiplicities `m_i` of each part size `i = 1..=largest`.
    pub fn multiplicities(&self) -> Vec<u32> {
        let mut m = vec![0u32; self.largest() as usize];
        for &x in &self.0 {
            m[x as usize - 1] += 1;
        }
        m
    }

    /// Whether `other` fits inside `self` as a Young diagram, i.e. `G_other`
    /// occurs as a subgroup (equivalently a quotient) of `G_self`.
    pub fn contains(&self, other: &Partition) -> bool {
        other.len() <= self.len() && other.0.iter().zip(&self.0).all(|(a, b)| a <= b)
    }

    /// All partitions contained in `self`, graded order, `self` included.
    pub fn subtypes(&self) -> Vec<Partition> {
        fn rec(bound: &[u32], cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
            out.push(Partition(cur.clone()));
            let i = cur.len();
            if i == bound.len() {
                return;
            }
            for x in 1..=cap.min(bound[i]) {
                cur.push(x);
                rec(bound, x, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(&self.0, self.largest(), &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    /// Comma-joined parts, or `trivial` for the empty partition.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            TRIVIAL_LABEL.to_string()
        } else {
            self.0.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        }
    }
}

/// Graded order: by size, then reverse lexicographic within a size, so
/// `(2)` precedes `(1,1)`.
impl Ord for Partition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size().cmp(&other.size()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `trivial`, the empty string, or comma-joined parts in any order.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case(TRIVIAL_LABEL) || s == "()" {
            return Ok(Partition::trivial());
        }
        let s = s.trim_start_matches('(').trim_end_matches(')');
        let parts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidPartition(format!("cannot parse {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.iter().any(|&x| x == 0) {
            return Err(Error::InvalidPartition(format!("{s:?} has a zero part")));
        }
        Ok(Partition::from_unsorted(parts))
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Partitions of exactly `n`, reverse lexicographic.
pub fn partitions_of(n: u32) -> Vec<Partition> {
    fn rec(rem: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        for x in (1..=cap.min(rem)).rev() {
            cur.push(x);
            rec(rem - x, x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// All partitions of size `0..=max_size` in graded order.
pub fn enumerate_partitions(max_size: u32) -> Vec<Partition> {
    (0..=max_size).flat_map(partitions_of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn conjugates() {
        assert_eq!(p(&[]).conjugate(), p(&[]));
        assert_eq!(p(&[2, 1]).conjugate(), p(&[2, 1]));
        assert_eq!(p(&[3, 1]).conjugate(), p(&[2, 1, 1]));
    }

    #[test]
    fn rejects_bad_parts() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
        assert!("1,,2".parse::<Partition>().is_err());
        assert!("0".parse::<Partition>().is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_partitions(0), vec![p(&[])]);
        assert_eq!(enumerate_partitions(2), vec![p(&[]), p(&[1]), p(&[2]), p(&[1, 1])]);
        let sizes: Vec<usize> = (0..=5).map(|n| partitions_of(n).len()).collect();
        assert_eq!(sizes, vec![1, 1, 2, 3, 5, 7]);
        assert_eq!(enumerate_partitions(5).len(), 19);
        // partition numbers p(20) = 627
        assert_eq!(partitions_of(20).len(), 627);
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let all = enumerate_partitions(9);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn labels_round_trip() {
        assert_eq!(p(&[]).label(), "trivial");
        assert_eq!(p(&[2, 1]).label(), "2,1");
        assert_eq!("1,2".parse::<Partition>().unwrap(), p(&[2, 1]));
        assert_eq!("trivial".parse::<Partition>().unwrap(), p(&[]));
        let json = serde_json::to_string(&p(&[3, 1, 1])).unwrap();
        assert_eq!(json, "\"3,1,1\"");
        assert_eq!(serde_json::from_str::<Partition>(&json).unwrap(), p(&[3, 1, 1]));
    }

    #[test]
    fn subtypes_of_21() {
        let subs = p(&[2, 1]).subtypes();
        assert_eq!(subs, vec![p(&[]), p(&[1]), p(&[2]), p(&[1, 1]), p(&[2, 1])]);
        assert!(p(&[2, 1]).contains(&p(&[1, 1])));
        assert!(!p(&[2, 1]).contains(&p(&[1, 1, 1])));
        assert!(!p(&[1, 1]).contains(&p(&[2])));
    }

    #[test]
    fn multiplicities() {
        assert_eq!(p(&[3, 1, 1]).multiplicities(), vec![2, 0, 1]);
        assert!(p(&[]).multiplicities().is_empty());
    }

    proptest::proptest! {
        #[test]
        fn conjugate_is_an_involution(parts in proptest::collection::vec(1u32..8, 0..8)) {
            let lam = Partition::from_unsorted(parts);
            proptest::prop_assert_eq!(lam.conjugate().conjugate(), lam.clone());
            proptest::prop_assert_eq!(lam.conjugate().size(), lam.size());
        }

        #[test]
        fn containment_matches_conjugates(a in proptest::collection::vec(1u32..5, 0..5),
                                          b in proptest::collection::vec(1u32..5, 0..5)) {
            let (a, b) = (Partition::from_unsorted(a), Partition::from_unsorted(b));
            let (ac, bc) = (a.conjugate(), b.conjugate());
            let by_conj = bc.len() <= ac.len()
                && bc.parts().iter().zip(ac.parts()).all(|(x, y)| x <= y);
            proptest::prop_assert_eq!(a.contains(&b), by_conj);
        }
    }
}
