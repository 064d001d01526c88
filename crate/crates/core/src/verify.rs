//! Cross-checks of the closed-form counts against brute force, the
//! order/index duality, and the modular Smith form against integer SNF.

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::oracle::{
    enumerate_automorphisms, enumerate_homs, enumerate_subgroups, enumerate_surjections, ExplicitGroup,
    DEFAULT_BUDGET,
};
use crate::partition::{enumerate_partitions, Partition};
use crate::pgroup::{
    aut_order, count_subgroups_of_type, hom_count, sur_count_from_free, verify_order_index_duality, SurCounter,
};
use crate::prime::Prime;
use crate::sampler::{sample_rng, uniform_below};
use crate::zpe::{integer_snf_oracle, smith_normal_form, MatrixModPE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub name: String,
    pub instances: u64,
    /// Instances the brute force could not finish within its budget.
    pub skipped: u64,
    pub mismatches: Vec<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.skipped == 0
    }
}

/// Partitions whose group order is at most `max_order`.
pub fn partitions_up_to_order(p: Prime, max_order: u64) -> Vec<Partition> {
    let mut size = 0;
    while (p.get() as u128).pow(size + 1) <= max_order as u128 {
        size += 1;
    }
    enumerate_partitions(size)
}

fn merge(name: &str, parts: Vec<VerifyOutcome>) -> VerifyOutcome {
    parts.into_iter().fold(
        VerifyOutcome {
            name: name.into(),
            instances: 0,
            skipped: 0,
            mismatches: Vec::new(),
        },
        |mut acc, o| {
            acc.instances += o.instances;
            acc.skipped += o.skipped;
            acc.mismatches.extend(o.mismatches);
            acc
        },
    )
}

fn compare(out: &mut VerifyOutcome, what: &str, formula: &BigUint, oracle: crate::Result<BigUint>) {
    out.instances += 1;
    match oracle {
        Ok(v) if v == *formula => {}
        Ok(v) => out.mismatches.push(format!("{what}: formula {formula}, brute force {v}")),
        Err(crate::Error::BudgetExceeded { .. }) => out.skipped += 1,
        Err(e) => out.mismatches.push(format!("{what}: {e}")),
    }
}

/// `hom_count`, `sur_count`, `aut_order` and `count_subgroups_of_type`
/// against brute force for every pair of groups of order `≤ max_order`.
pub fn verify_counts(p: Prime, max_order: u64) -> Vec<VerifyOutcome> {
    let all = partitions_up_to_order(p, max_order);
    let groups: Vec<ExplicitGroup> = all
        .iter()
        .map(|l| ExplicitGroup::new(l, p).expect("order within cap"))
        .collect();
    let counter = SurCounter::new(p);
    let per_source: Vec<[VerifyOutcome; 4]> = (0..all.len())
        .into_par_iter()
        .map(|i| {
            let lam = &all[i];
            let new = |name: &str| VerifyOutcome {
                name: name.into(),
                instances: 0,
                skipped: 0,
                mismatches: Vec::new(),
            };
            let (mut hom, mut sur, mut aut, mut sub) = (new("hom"), new("sur"), new("aut"), new("subgroups"));
            for (j, mu) in all.iter().enumerate() {
                let tag = format!("p={p} {lam} -> {mu}");
                compare(
                    &mut hom,
                    &tag,
                    &hom_count(lam, mu, p),
                    enumerate_homs(&groups[i], &groups[j], false, DEFAULT_BUDGET).map(|h| h.count),
                );
                compare(
                    &mut sur,
                    &tag,
                    &counter.sur(lam, mu),
                    enumerate_surjections(&groups[i], &groups[j], DEFAULT_BUDGET),
                );
            }
            compare(
                &mut aut,
                &format!("p={p} Aut {lam}"),
                &aut_order(lam, p),
                enumerate_automorphisms(&groups[i], DEFAULT_BUDGET),
            );
            match enumerate_subgroups(&groups[i], DEFAULT_BUDGET) {
                Ok(found) => {
                    for mu in enumerate_partitions(lam.size()) {
                        let brute = found
                            .iter()
                            .find(|(t, _)| *t == mu)
                            .map(|(_, c)| c.clone())
                            .unwrap_or_else(BigUint::zero);
                        compare(
                            &mut sub,
                            &format!("p={p} subgroups of type {mu} in {lam}"),
                            &count_subgroups_of_type(lam, &mu, p),
                            Ok(brute),
                        );
                    }
                    if found.iter().any(|(t, _)| t.size() > lam.size()) {
                        sub.mismatches.push(format!("p={p} {lam}: subgroup larger than group"));
                    }
                }
                Err(_) => sub.skipped += 1,
            }
            [hom, sur, aut, sub]
        })
        .collect();
    let mut buckets: [Vec<VerifyOutcome>; 4] = Default::default();
    for outcomes in per_source {
        for (b, o) in buckets.iter_mut().zip(outcomes) {
            b.push(o);
        }
    }
    let names = ["hom_count", "sur_count", "aut_order", "count_subgroups_of_type"];
    names
        .iter()
        .zip(buckets)
        .map(|(n, parts)| merge(&format!("{n} (p={p}, order <= {max_order})"), parts))
        .collect()
}

/// `sur_count_from_free(m, μ)` against brute-force surjections
/// `(Z/p^L)^m ↠ G_μ` with `L = μ_1`, for source orders `≤ max_order`.
pub fn verify_free_surjections(p: Prime, max_order: u64) -> VerifyOutcome {
    let mut out = VerifyOutcome {
        name: format!("sur_count_from_free (p={p}, order <= {max_order})"),
        instances: 0,
        skipped: 0,
        mismatches: Vec::new(),
    };
    for mu in partitions_up_to_order(p, max_order) {
        let level = mu.largest().max(1);
        let target = ExplicitGroup::new(&mu, p).expect("order within cap");
        for m in 0.. {
            let source_order = (p.get() as u128).pow(level * m);
            if source_order > max_order as u128 {
                break;
            }
            let Ok(source) = ExplicitGroup::from_exponents(vec![level; m as usize], p, max_order as usize) else {
                break;
            };
            compare(
                &mut out,
                &format!("p={p} Z_p^{m} -> {mu}"),
                &sur_count_from_free(m, &mu, p),
                enumerate_surjections(&source, &target, DEFAULT_BUDGET),
            );
        }
    }
    out
}

/// Order/index duality of subgroup counts for all `|λ| ≤ max_size`.
pub fn verify_duality(p: Prime, max_size: u32) -> VerifyOutcome {
    let all = enumerate_partitions(max_size);
    let mismatches: Vec<String> = all
        .par_iter()
        .filter_map(|lam| {
            verify_order_index_duality(lam, p).counterexample.map(|f| {
                format!(
                    "p={p} {lam}: order p^{} has {}, index p^{} has {}",
                    f.d, f.order_count, f.d, f.index_count
                )
            })
        })
        .collect();
    VerifyOutcome {
        name: format!("order/index duality (p={p}, |lambda| <= {max_size})"),
        instances: all.len() as u64,
        skipped: 0,
        mismatches,
    }
}

/// Valuations of integer invariant factors, clamped at `e` (zero maps to `e`).
pub fn clamped_valuations(factors: &[num_bigint::BigInt], p: Prime, e: u32) -> Vec<u32> {
    factors
        .iter()
        .map(|d| {
            let mut d = d.magnitude().clone();
            if d.is_zero() {
                return e;
            }
            let mut v = 0;
            while v < e && (&d % p.get()).is_zero() {
                d /= p.get();
                v += 1;
            }
            v
        })
        .collect()
}

/// A random integer matrix with dimensions in `1..=max_dim` and entries in
/// `[-bound, bound]`, as `(rows, cols, entries)`.
pub fn random_integer_matrix(seed: u64, index: u64, max_dim: usize, bound: i64) -> (usize, usize, Vec<i64>) {
    let mut rng = sample_rng(seed, 0xC0FFEE, index);
    let rows = 1 + uniform_below(&mut rng, max_dim as u64) as usize;
    let cols = 1 + uniform_below(&mut rng, max_dim as u64) as usize;
    let span = (2 * bound + 1) as u64;
    let entries = (0..rows * cols)
        .map(|_| uniform_below(&mut rng, span) as i64 - bound)
        .collect();
    (rows, cols, entries)
}

/// Modular Smith form against integer SNF on `count` random matrices.
pub fn verify_integer_snf(primes: &[Prime], e: u32, count: u64, seed: u64) -> VerifyOutcome {
    let mismatches: Vec<String> = (0..count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (rows, cols, entries) = random_integer_matrix(seed, i, 5, 50);
            let factors = integer_snf_oracle(rows, cols, &entries);
            primes
                .iter()
                .filter_map(|&p| {
                    let m = MatrixModPE::from_signed(p, e, rows, cols, &entries).expect("small modulus");
                    let got = smith_normal_form(&m, false).valuations;
                    let want = clamped_valuations(&factors, p, e);
                    (got != want).then(|| {
                        format!("matrix #{i} {rows}x{cols} {entries:?} p={p}: got {got:?}, want {want:?}")
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    VerifyOutcome {
        name: format!("Smith form mod p^{e} vs integer SNF ({count} matrices)"),
        instances: count * primes.len() as u64,
        skipped: 0,
        mismatches,
    }
}

/// Size of the largest `|λ|` with `p^{|λ|} ≤ max_order`, for display.
pub fn max_size_for_order(p: Prime, max_order: u64) -> u32 {
    partitions_up_to_order(p, max_order)
        .last()
        .map_or(0, |l| l.size())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn small_suite_passes() {
        for o in verify_counts(pr(2), 16) {
            assert!(o.passed(), "{o:?}");
        }
        for o in verify_counts(pr(3), 27) {
            assert!(o.passed(), "{o:?}");
        }
        assert!(verify_free_surjections(pr(2), 64).passed());
        assert!(verify_duality(pr(5), 6).passed());
        assert!(verify_integer_snf(&[pr(2), pr(3)], 12, 300, 1).passed());
    }

    #[test]
    fn order_bounds() {
        assert_eq!(max_size_for_order(pr(2), 256), 8);
        assert_eq!(max_size_for_order(pr(3), 256), 5);
        assert_eq!(max_size_for_order(pr(5), 125), 3);
        assert_eq!(partitions_up_to_order(pr(2), 1), vec![Partition::trivial()]);
    }

    #[test]
    fn valuation_clamping() {
        let f: Vec<num_bigint::BigInt> = vec![2.into(), 0.into(), 48.into()];
        assert_eq!(clamped_valuations(&f, pr(2), 3), vec![1, 3, 3]);
    }
}
