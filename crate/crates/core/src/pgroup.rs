//! Exact counting for finite abelian p-groups `G_λ = ⊕ Z/p^{λ_i}`.
//!
//! Everything here is an arbitrary-precision integer; counts like
//! `|Aut G_λ|` overflow machine words almost immediately.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::partition::{partitions_of, Partition};
use crate::prime::Prime;

pub(crate) fn pow(p: Prime, e: u64) -> BigUint {
    BigUint::from(p.get()).pow(e as u32)
}

pub fn group_order(lambda: &Partition, p: Prime) -> BigUint {
    pow(p, lambda.size() as u64)
}

/// `|Aut G_λ| = p^{Σ_j (λ'_j)²} ∏_i ∏_{j=1}^{m_i} (1 − p^{−j})`, with the
/// negative powers cleared so the product stays integral.
pub fn aut_order(lambda: &Partition, p: Prime) -> BigUint {
    let conj = lambda.conjugate();
    let square_sum: u64 = conj.parts().iter().map(|&c| (c as u64) * (c as u64)).sum();
    let mut cleared = 0u64;
    let mut acc = BigUint::one();
    for &m in &lambda.multiplicities() {
        for j in 1..=m {
            acc *= pow(p, j as u64) - 1u32;
            cleared += j as u64;
        }
    }
    acc * pow(p, square_sum - cleared)
}

/// `#Hom(G_λ, G_μ) = p^{Σ_{i,j} min(λ_i, μ_j)}`.
pub fn hom_count(lambda: &Partition, mu: &Partition, p: Prime) -> BigUint {
    let exp: u64 = lambda
        .parts()
        .iter()
        .flat_map(|&a| mu.parts().iter().map(move |&b| a.min(b) as u64))
        .sum();
    pow(p, exp)
}

/// Gaussian binomial `[n choose k]_p`.
pub fn gaussian_binomial(n: u32, k: u32, p: Prime) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= pow(p, (n - i) as u64) - 1u32;
        den *= pow(p, (i + 1) as u64) - 1u32;
    }
    num / den
}

/// Number of subgroups of `G_λ` isomorphic to `G_μ`:
/// `∏_{i≥1} p^{μ'_{i+1}(λ'_i − μ'_i)} [λ'_i − μ'_{i+1} choose μ'_i − μ'_{i+1}]_p`.
pub fn count_subgroups_of_type(lambda: &Partition, mu: &Partition, p: Prime) -> BigUint {
    if !lambda.contains(mu) {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 1..=mu.largest() {
        let (li, mi, mnext) = (
            lambda.conjugate_part(i),
            mu.conjugate_part(i),
            mu.conjugate_part(i + 1),
        );
        acc *= pow(p, mnext as u64 * (li - mi) as u64);
        acc *= gaussian_binomial(li - mnext, mi - mnext, p);
    }
    acc
}

/// Memoized surjection counts out of `Z_p^f ⊕ G_λ`.
///
/// Uses the subgroup-sum inversion
/// `#Sur(A, G_μ) = #Hom(A, G_μ) − Σ_{ν ⊊ μ} #{H ≤ G_μ : H ≅ G_ν} · #Sur(A, G_ν)`,
/// recursing on strictly smaller `|ν|`.
pub struct SurCounter {
    p: Prime,
    cache: Mutex<HashMap<(u32, Partition, Partition), BigUint>>,
}

impl SurCounter {
    pub fn new(p: Prime) -> Self {
        SurCounter {
            p,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    /// `#Hom(Z_p^f ⊕ G_λ, G_μ)`.
    pub fn hom_mixed(&self, free_rank: u32, lambda: &Partition, mu: &Partition) -> BigUint {
        pow(self.p, free_rank as u64 * mu.size() as u64) * hom_count(lambda, mu, self.p)
    }

    /// `#Sur(Z_p^f ⊕ G_λ, G_μ)`.
    pub fn sur_mixed(&self, free_rank: u32, lambda: &Partition, mu: &Partition) -> BigUint {
        if mu.len() > free_rank as usize + lambda.len() {
            return BigUint::zero();
        }
        if free_rank == 0 && !lambda.contains(mu) {
            return BigUint::zero();
        }
        if mu.is_trivial() {
            return BigUint::one();
        }
        let key = (free_rank, lambda.clone(), mu.clone());
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let mut value = self.hom_mixed(free_rank, lambda, mu);
        for nu in mu.subtypes() {
            if nu == *mu {
                continue;
            }
            let sur = self.sur_mixed(free_rank, lambda, &nu);
            if !sur.is_zero() {
                value -= count_subgroups_of_type(mu, &nu, self.p) * sur;
            }
        }
        self.cache.lock().unwrap().insert(key, value.clone());
        value
    }

    pub fn sur(&self, lambda: &Partition, mu: &Partition) -> BigUint {
        self.sur_mixed(0, lambda, mu)
    }
}

/// `#Sur(G_λ, G_μ)`; 0 unless `μ ⊆ λ`.
pub fn sur_count(lambda: &Partition, mu: &Partition, p: Prime) -> BigUint {
    SurCounter::new(p).sur(lambda, mu)
}

/// `#Sur(Z_p^m, G_μ) = p^{m|μ|} ∏_{i=0}^{k−1} (1 − p^{−m+i})` with `k = μ'_1`.
pub fn sur_count_from_free(m: u32, mu: &Partition, p: Prime) -> BigUint {
    let k = mu.len() as u32;
    if k > m {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    let mut cleared = 0u64;
    for i in 0..k {
        acc *= pow(p, (m - i) as u64) - 1u32;
        cleared += (m - i) as u64;
    }
    acc * pow(p, m as u64 * mu.size() as u64 - cleared)
}

/// Outcome of comparing subgroup counts by order against counts by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualityReport {
    /// `counts_by_order[d]` = number of subgroups of order `p^d`.
    pub counts_by_order: Vec<BigUint>,
    /// First `d` where the order-`p^d` and index-`p^d` counts differ.
    pub counterexample: Option<DualityFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualityFailure {
    pub d: u32,
    pub order_count: BigUint,
    pub index_count: BigUint,
}

impl DualityReport {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Checks that `G_λ` has as many subgroups of order `p^d` as of index `p^d`
/// for every `d`.
pub fn verify_order_index_duality(lambda: &Partition, p: Prime) -> DualityReport {
    let total = lambda.size();
    let counts_by_order: Vec<BigUint> = (0..=total)
        .map(|d| {
            partitions_of(d)
                .iter()
                .map(|mu| count_subgroups_of_type(lambda, mu, p))
                .sum()
        })
        .collect();
    let counterexample = (0..=total).find_map(|d| {
        let (a, b) = (&counts_by_order[d as usize], &counts_by_order[(total - d) as usize]);
        (a != b).then(|| DualityFailure {
            d,
            order_count: a.clone(),
            index_count: b.clone(),
        })
    });
    DualityReport {
        counts_by_order,
        counterexample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn orders() {
        assert_eq!(group_order(&part(&[]), pr(2)), big(1));
        assert_eq!(group_order(&part(&[2, 1]), pr(2)), big(8));
        assert_eq!(group_order(&part(&[1, 1, 1]), pr(3)), big(27));
    }

    #[test]
    fn automorphism_orders() {
        assert_eq!(aut_order(&part(&[]), pr(2)), big(1));
        assert_eq!(aut_order(&part(&[1]), pr(2)), big(1));
        assert_eq!(aut_order(&part(&[1, 1]), pr(2)), big(6));
        assert_eq!(aut_order(&part(&[2]), pr(2)), big(2));
        // Aut(Z/4 ⊕ Z/2) is dihedral of order 8
        assert_eq!(aut_order(&part(&[2, 1]), pr(2)), big(8));
        assert_eq!(aut_order(&part(&[2]), pr(3)), big(6));
        assert_eq!(aut_order(&part(&[1, 1]), pr(3)), big(48));
        // |GL_3(F_2)| = 168
        assert_eq!(aut_order(&part(&[1, 1, 1]), pr(2)), big(168));
    }

    #[test]
    fn homs() {
        assert_eq!(hom_count(&part(&[2]), &part(&[1]), pr(2)), big(2));
        assert_eq!(hom_count(&part(&[1, 1]), &part(&[2, 1]), pr(2)), big(16));
        assert_eq!(hom_count(&part(&[]), &part(&[3]), pr(2)), big(1));
    }

    #[test]
    fn subgroup_counts() {
        assert_eq!(count_subgroups_of_type(&part(&[1, 1]), &part(&[1]), pr(2)), big(3));
        assert_eq!(count_subgroups_of_type(&part(&[2, 1]), &part(&[1]), pr(2)), big(3));
        assert_eq!(count_subgroups_of_type(&part(&[2]), &part(&[1]), pr(5)), big(1));
        assert_eq!(count_subgroups_of_type(&part(&[3, 2, 1]), &part(&[]), pr(7)), big(1));
        assert_eq!(count_subgroups_of_type(&part(&[1, 1]), &part(&[2]), pr(2)), big(0));
    }

    #[test]
    fn surjections() {
        assert_eq!(sur_count(&part(&[2]), &part(&[1]), pr(2)), big(1));
        assert_eq!(sur_count(&part(&[1, 1]), &part(&[1, 1]), pr(2)), big(6));
        assert_eq!(sur_count(&part(&[1]), &part(&[2]), pr(3)), big(0));
    }

    #[test]
    fn surjections_from_free() {
        assert_eq!(sur_count_from_free(2, &part(&[1, 1]), pr(2)), big(6));
        assert_eq!(sur_count_from_free(1, &part(&[1]), pr(5)), big(4));
        assert_eq!(sur_count_from_free(0, &part(&[]), pr(2)), big(1));
        assert_eq!(sur_count_from_free(1, &part(&[1, 1]), pr(2)), big(0));
    }

    #[test]
    fn gaussian_binomials() {
        assert_eq!(gaussian_binomial(3, 1, pr(3)), big(13));
        assert_eq!(gaussian_binomial(4, 2, pr(2)), big(35));
        assert_eq!(gaussian_binomial(2, 3, pr(2)), big(0));
    }

    #[test]
    fn duality_examples() {
        let r = verify_order_index_duality(&part(&[2, 1]), pr(2));
        assert!(r.holds());
        assert_eq!(r.counts_by_order, vec![big(1), big(3), big(3), big(1)]);
        assert!(verify_order_index_duality(&part(&[]), pr(5)).holds());
        let r = verify_order_index_duality(&part(&[1, 1, 1]), pr(3));
        assert!(r.holds());
        assert_eq!(r.counts_by_order[1], big(13));
        assert_eq!(r.counts_by_order[2], big(13));
    }

    #[test]
    fn mixed_source_agrees_with_closed_form() {
        // two independent routes to #Sur(Z_p^m, G_μ)
        for p in [2, 3, 5] {
            let c = SurCounter::new(pr(p));
            for mu in crate::partition::enumerate_partitions(4) {
                for m in 0..5 {
                    assert_eq!(
                        c.sur_mixed(m, &part(&[]), &mu),
                        sur_count_from_free(m, &mu, pr(p)),
                        "p={p} m={m} mu={mu}"
                    );
                }
            }
        }
    }

    #[test]
    fn free_surjection_ratio_increases_to_one() {
        let p = pr(2);
        let mu = part(&[2, 1, 1]);
        let mut prev = 0.0f64;
        for m in 3..30 {
            let ratio = crate::numeric::ratio_to_f64(
                &sur_count_from_free(m, &mu, p),
                &pow(p, m as u64 * mu.size() as u64),
            );
            assert!(ratio > prev && ratio < 1.0);
            prev = ratio;
        }
        assert!(prev > 1.0 - 1e-7);
    }

    #[test]
    fn sur_of_self_is_aut() {
        for p in [2, 3] {
            for lam in crate::partition::enumerate_partitions(6) {
                assert_eq!(sur_count(&lam, &lam, pr(p)), aut_order(&lam, pr(p)));
            }
        }
    }

    #[test]
    fn hom_is_sum_of_sur_over_subgroups() {
        let p = pr(3);
        let c = SurCounter::new(p);
        for lam in crate::partition::enumerate_partitions(5) {
            for mu in crate::partition::enumerate_partitions(4) {
                let total: BigUint = mu
                    .subtypes()
                    .iter()
                    .map(|nu| count_subgroups_of_type(&mu, nu, p) * c.sur(&lam, nu))
                    .sum();
                assert_eq!(total, hom_count(&lam, &mu, p), "lam={lam} mu={mu}");
            }
        }
    }

    #[test]
    fn hom_is_symmetric() {
        let all = crate::partition::enumerate_partitions(5);
        for a in &all {
            for b in &all {
                assert_eq!(hom_count(a, b, pr(5)), hom_count(b, a, pr(5)));
            }
        }
    }
}
