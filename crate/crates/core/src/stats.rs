//! Small statistical helpers for the Monte Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided standard-normal quantile for confidence level `1 - alpha`.
pub fn normal_quantile(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(1.0 - alpha / 2.0)
}

/// Wilson score interval for `successes / trials` at confidence `1 - alpha`.
pub fn wilson_interval(successes: u64, trials: u64, alpha: f64) -> Option<(f64, f64)> {
    if trials == 0 {
        return None;
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z = normal_quantile(alpha);
    let z2 = z * z;
    let center = (phat + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    Some(((center - half).max(0.0), (center + half).min(1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub p_value: f64,
}

/// Pearson goodness of fit of `observed` counts against bin probabilities
/// `expected` (which must sum to one over the bins given).
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Option<ChiSquareResult> {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    if observed.len() < 2 || total == 0 {
        return None;
    }
    let n = total as f64;
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &q)| {
            let e = q * n;
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let df = observed.len() as u32 - 1;
    Some(ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        p_value: chi_square_sf(statistic, df),
    })
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(x)
}

/// Pearson test of independence for an `r × c` contingency table.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Option<ChiSquareResult> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return None;
    }
    let total: u64 = table.iter().flatten().sum();
    if total == 0 {
        return None;
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64).collect();
    if row_sums.iter().chain(&col_sums).any(|&s| s == 0.0) {
        return None;
    }
    let n = total as f64;
    let mut statistic = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = row_sums[r] * col_sums[c] / n;
            statistic += (o as f64 - e).powi(2) / e;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as u32;
    Some(ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        p_value: chi_square_sf(statistic, df),
    })
}

/// Half the L1 distance between two mass functions on the same bins.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
