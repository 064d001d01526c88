//! The u-weighted Cohen–Lenstra measure on finite abelian p-groups,
//! `P(G) = ∏_{i≥1}(1 − p^{−i−u}) / (|G|^u |Aut G|)`, and the moment
//! predictions that go with it.
//!
//! The infinite product is truncated and then evaluated exactly as a
//! rational, so the only floating-point error is the final rounding; the
//! truncation error is bounded and carried alongside.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{rational_to_f64, to_rational};
use crate::partition::{enumerate_partitions, Partition};
use crate::pgroup::{aut_order, pow, sur_count_from_free, SurCounter};
use crate::prime::Prime;

pub const DEFAULT_PRODUCT_TOLERANCE: f64 = 1e-12;

/// `∏_{i≥1}(1 − p^{−i−u})` cut after `factors` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedProduct {
    pub value: f64,
    pub factors: u32,
    /// Bound on `value / true_value − 1` (the truncated product is never
    /// smaller than the true one).
    pub relative_tail_bound: f64,
}

#[derive(Debug, Clone)]
pub struct CLMeasure {
    p: Prime,
    u: u32,
    tolerance: f64,
    max_size: u32,
    product_exact: BigRational,
    product: TruncatedProduct,
}

impl CLMeasure {
    pub fn new(p: Prime, u: u32) -> Self {
        Self::with_tolerance(p, u, DEFAULT_PRODUCT_TOLERANCE, 20).expect("default tolerance is valid")
    }

    pub fn with_tolerance(p: Prime, u: u32, tolerance: f64, max_size: u32) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= 1e-6) {
            return Err(Error::InvalidConfig(format!(
                "product tolerance {tolerance} outside (0, 1e-6]"
            )));
        }
        let pf = p.get() as f64;
        // keep factor i while p^{-(i+u)} ≥ tolerance / 10
        let mut factors = 0u32;
        while pf.powi(-((factors + 1 + u) as i32)) >= tolerance / 10.0 {
            factors += 1;
        }
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for i in 1..=factors {
            let q = pow(p, (i + u) as u64);
            num *= &q - 1u32;
            den *= q;
        }
        let product_exact = to_rational(num, den);
        let first_dropped = pf.powi(-((factors + 1 + u) as i32));
        let relative_tail_bound = first_dropped / ((1.0 - first_dropped) * (1.0 - 1.0 / pf));
        let product = TruncatedProduct {
            value: rational_to_f64(&product_exact),
            factors,
            relative_tail_bound,
        };
        Ok(CLMeasure {
            p,
            u,
            tolerance,
            max_size,
            product_exact,
            product,
        })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }
    pub fn u(&self) -> u32 {
        self.u
    }
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
    pub fn max_size(&self) -> u32 {
        self.max_size
    }

    /// `∏_{i≥1}(1 − p^{−i−u})`, truncated.
    pub fn product(&self) -> &TruncatedProduct {
        &self.product
    }

    /// `1 / (p^{u|λ|} |Aut G_λ|)` exactly.
    pub fn weight(&self, lambda: &Partition) -> BigRational {
        let den = pow(self.p, self.u as u64 * lambda.size() as u64) * aut_order(lambda, self.p);
        to_rational(BigUint::one(), den)
    }

    pub fn limiting_probability_exact(&self, lambda: &Partition) -> BigRational {
        &self.product_exact * self.weight(lambda)
    }

    /// Limit as `n → ∞` of `P(coker M ≅ Z_p^u ⊕ G_λ)`.
    pub fn limiting_probability(&self, lambda: &Partition) -> f64 {
        rational_to_f64(&self.limiting_probability_exact(lambda))
    }

    /// `Σ_{|λ| ≤ bound} 1 / (p^{u|λ|} |Aut G_λ|)`.
    pub fn total_mass_partial_sum(&self, bound: u32) -> f64 {
        let sum = enumerate_partitions(bound)
            .iter()
            .fold(BigRational::zero(), |acc, lam| acc + self.weight(lam));
        rational_to_f64(&sum)
    }

    /// `∏_{i≥1}(1 − p^{−i−u})^{−1}`, the limit of the partial sums.
    pub fn total_mass_limit(&self) -> f64 {
        rational_to_f64(&self.product_exact.recip())
    }

    /// Rows `(λ, P(λ), cumulative)` for `|λ| ≤ max_size`.
    pub fn table(&self) -> MeasureTable {
        let mut cumulative = BigRational::zero();
        let rows = enumerate_partitions(self.max_size)
            .into_iter()
            .map(|lam| {
                let prob = self.limiting_probability_exact(&lam);
                cumulative += &prob;
                MeasureRow {
                    probability: rational_to_f64(&prob),
                    cumulative: rational_to_f64(&cumulative),
                    partition: lam,
                }
            })
            .collect();
        let covered = rational_to_f64(&cumulative);
        MeasureTable {
            p: self.p,
            u: self.u,
            max_size: self.max_size,
            product: self.product.clone(),
            rows,
            tail_mass: 1.0 - covered,
        }
    }

    /// `Σ_{|λ| ≤ bound} P(λ) · #Sur(G_λ, G_μ)`, which should approach
    /// `p^{−u|μ|}`.
    pub fn truncated_sur_moment(&self, mu: &Partition, bound: u32) -> f64 {
        let counter = SurCounter::new(self.p);
        let sum = enumerate_partitions(bound).iter().fold(BigRational::zero(), |acc, lam| {
            let s = counter.sur(lam, mu);
            if s.is_zero() {
                acc
            } else {
                acc + self.limiting_probability_exact(lam) * BigRational::from(BigInt::from(s))
            }
        });
        rational_to_f64(&sum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub partition: Partition,
    pub probability: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureTable {
    pub p: Prime,
    pub u: u32,
    pub max_size: u32,
    pub product: TruncatedProduct,
    pub rows: Vec<MeasureRow>,
    /// Mass of all partitions larger than `max_size`.
    pub tail_mass: f64,
}

/// `E[#Sur(coker M, G_μ)]` for a Haar `(n+u) × n` matrix: every surjection
/// `Z_p^{n+u} ↠ G_μ` kills the image with probability `|G_μ|^{−n}`, so the
/// expectation is `#Sur(Z_p^{n+u}, G_μ) / |G_μ|^n`, exactly.
pub fn exact_moment_coker(n: u32, u: u32, mu: &Partition, p: Prime) -> BigRational {
    to_rational(
        sur_count_from_free(n + u, mu, p),
        pow(p, n as u64 * mu.size() as u64),
    )
}

/// Limiting torsion moment `E[#Sur(T, G_μ)] = |G_μ|^{−u}`.
pub fn limiting_moment_torsion_exact(u: u32, mu: &Partition, p: Prime) -> BigRational {
    to_rational(BigUint::one(), pow(p, u as u64 * mu.size() as u64))
}

pub fn limiting_moment_torsion(u: u32, mu: &Partition, p: Prime) -> f64 {
    rational_to_f64(&limiting_moment_torsion_exact(u, mu, p))
}

/// Limiting full-cokernel moment `E[#Sur(Z_p^u ⊕ T, G_μ)] = |G_μ|^u`.
pub fn limiting_moment_coker(u: u32, mu: &Partition, p: Prime) -> BigRational {
    to_rational(pow(p, u as u64 * mu.size() as u64), BigUint::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgroup::count_subgroups_of_type;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn part(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Independent evaluation of the product: straight f64 loop over many
    /// more factors than the truncation keeps.
    fn product_oracle(p: u64, u: u32) -> f64 {
        (1..=200).map(|i| 1.0 - (p as f64).powi(-((i + u) as i32))).product()
    }

    #[test]
    fn limiting_probabilities() {
        let m20 = CLMeasure::new(pr(2), 0);
        let m21 = CLMeasure::new(pr(2), 1);
        let m30 = CLMeasure::new(pr(3), 0);
        // reference digits from a 40-digit evaluation
        assert!((m20.limiting_probability(&part(&[])) - 0.288_788_095_086_602_4).abs() < 1e-9);
        assert!((m21.limiting_probability(&part(&[])) - 0.577_576_190_173_204_8).abs() < 1e-9);
        assert!((m30.limiting_probability(&part(&[1])) - 0.280_063_038_963_974_5).abs() < 1e-6);
        let ratio = m21.limiting_probability(&part(&[])) / m20.limiting_probability(&part(&[]));
        assert!((ratio - 2.0).abs() < 1e-12);
        for (p, u) in [(2, 0), (2, 3), (3, 1), (5, 0)] {
            let m = CLMeasure::new(pr(p), u);
            assert!((m.product().value - product_oracle(p, u)).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_length_and_tail() {
        let m = CLMeasure::new(pr(2), 0);
        let t = m.product();
        assert!(t.factors >= 40);
        assert!(t.relative_tail_bound < 1e-12);
        assert!(t.value >= product_oracle(2, 0));
        assert!(CLMeasure::with_tolerance(pr(2), 0, 1e-3, 5).is_err());
        assert!(CLMeasure::with_tolerance(pr(2), 0, 0.0, 5).is_err());
    }

    #[test]
    fn total_mass() {
        let m = CLMeasure::new(pr(2), 0);
        assert_eq!(m.total_mass_partial_sum(0), 1.0);
        assert!((m.total_mass_partial_sum(20) - 3.462_746_619).abs() < 1e-3);
        let m = CLMeasure::new(pr(2), 1);
        assert!((m.total_mass_partial_sum(20) - 1.731_373_309).abs() < 1e-4);
        assert!((m.total_mass_limit() - 1.731_373_309_727_531_8).abs() < 1e-12);
        let sums: Vec<f64> = (0..10).map(|b| m.total_mass_partial_sum(b)).collect();
        assert!(sums.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn exact_moments() {
        assert_eq!(exact_moment_coker(1, 0, &part(&[1]), pr(2)), rat(1, 2));
        assert_eq!(exact_moment_coker(2, 1, &part(&[1]), pr(2)), rat(7, 4));
        assert_eq!(exact_moment_coker(5, 3, &part(&[]), pr(7)), rat(1, 1));
    }

    #[test]
    fn exact_moment_approaches_limit_within_gap() {
        let p = pr(2);
        for (u, mu) in [(0, part(&[1])), (1, part(&[1, 1])), (2, part(&[2, 1]))] {
            let limit = rational_to_f64(&limiting_moment_coker(u, &mu, p));
            let k = mu.len() as i32;
            let mut prev = 0.0;
            for n in 1..20u32 {
                let v = rational_to_f64(&exact_moment_coker(n, u, &mu, p));
                assert!(v >= prev && v <= limit);
                let gap = 1.0 - v / limit;
                let bound = k as f64 * 2f64.powi(-((n + u) as i32) + k - 1);
                assert!(gap <= bound + 1e-15, "u={u} mu={mu} n={n}: {gap} > {bound}");
                prev = v;
            }
        }
    }

    /// `Σ_{H≤G}|H|^u/|G|^u − Σ_{H⊊G}|H|^{−u}`, summed over subgroup types.
    fn h_sum(u: u32, mu: &Partition, p: Prime) -> BigRational {
        let order = |nu: &Partition| BigRational::from(BigInt::from(pow(p, nu.size() as u64)));
        let g = order(mu);
        let mut acc = BigRational::zero();
        for nu in mu.subtypes() {
            let c = BigRational::from(BigInt::from(count_subgroups_of_type(mu, &nu, p)));
            let h = order(&nu);
            acc += &c * num_traits::pow(h.clone(), u as usize) / num_traits::pow(g.clone(), u as usize);
            if nu != *mu {
                acc -= c / num_traits::pow(h, u as usize);
            }
        }
        acc
    }

    #[test]
    fn torsion_moment_limits() {
        assert_eq!(limiting_moment_torsion(0, &part(&[1]), pr(2)), 1.0);
        assert_eq!(limiting_moment_torsion(1, &part(&[1]), pr(2)), 0.5);
        assert_eq!(limiting_moment_torsion(2, &part(&[1, 1]), pr(3)), 3f64.powi(-4));
        for p in [2, 3, 5] {
            for mu in enumerate_partitions(4) {
                for u in 0..4 {
                    assert_eq!(
                        h_sum(u, &mu, pr(p)),
                        limiting_moment_torsion_exact(u, &mu, pr(p)),
                        "p={p} u={u} mu={mu}"
                    );
                }
            }
        }
    }

    #[test]
    fn measure_moments_match_limit() {
        for (p, u) in [(2, 1), (2, 2), (3, 0), (3, 1)] {
            let m = CLMeasure::new(pr(p), u);
            for mu in [part(&[]), part(&[1]), part(&[2]), part(&[1, 1])] {
                let got = m.truncated_sur_moment(&mu, 20);
                let want = limiting_moment_torsion(u, &mu, pr(p));
                assert!((got - want).abs() < 1e-3, "p={p} u={u} mu={mu}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn table_accumulates() {
        let m = CLMeasure::with_tolerance(pr(2), 1, 1e-12, 0).unwrap();
        let t = m.table();
        assert_eq!(t.rows.len(), 1);
        assert!((t.rows[0].probability - 0.577_576).abs() < 1e-6);
        assert!((t.tail_mass - 0.422_424).abs() < 1e-6);
        let t = CLMeasure::with_tolerance(pr(3), 0, 1e-12, 6).unwrap().table();
        assert!(t.rows.windows(2).all(|w| w[0].cumulative <= w[1].cumulative));
    }
}
