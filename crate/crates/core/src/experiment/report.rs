//! Serializable experiment reports.
//!
//! Field names are stable within a schema version. Everything except the
//! `execution` section is a deterministic function of the configuration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::TruncatedProduct;
use crate::partition::Partition;
use crate::stats::ChiSquareResult;

use super::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Distribution,
    Moments,
    SaturationSweep,
    ConvergenceSweep,
    Multiprime,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleAccounting {
    pub total: u64,
    /// Samples entering the statistics (total minus discarded).
    pub used: u64,
    pub discarded: u64,
    /// Samples still saturated after any escalation.
    pub saturated: u64,
    /// Samples re-run at doubled precision.
    pub escalated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    /// Partition label, or `other`.
    pub bin: String,
    pub observed: u64,
    pub frequency: Option<f64>,
    pub theory: f64,
    pub expected: f64,
    pub wilson_99: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialTorsionCheck {
    pub observed: u64,
    pub frequency: Option<f64>,
    pub theory: f64,
    pub wilson_99: Option<(f64, f64)>,
    pub theory_inside_interval: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSection {
    pub product: TruncatedProduct,
    pub bins: Vec<BinRow>,
    /// Bins actually entering the goodness-of-fit statistic.
    pub chi_square_bins: Vec<String>,
    pub chi_square: Option<ChiSquareResult>,
    pub trivial: TrivialTorsionCheck,
    pub total_variation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub mu: Partition,
    /// Mean of `#Sur(Z_p^u ⊕ T, G_μ)` over used samples.
    pub coker_mean: Option<f64>,
    pub coker_std_error: Option<f64>,
    /// Exact finite-n expectation, as `numerator/denominator` and float.
    pub coker_exact: String,
    pub coker_exact_value: f64,
    /// `|G_μ|^u`, the n → ∞ limit.
    pub coker_limit: f64,
    /// Mean of `#Sur(T, G_μ)`.
    pub torsion_mean: Option<f64>,
    pub torsion_std_error: Option<f64>,
    /// `|G_μ|^{-u}`.
    pub torsion_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationRow {
    pub e: u32,
    pub samples: u64,
    pub saturated: u64,
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub samples: u64,
    pub total_variation: Option<f64>,
    pub trivial_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiprimeSection {
    /// Target torsion type per prime, in prime order.
    pub target: Vec<Partition>,
    pub joint_observed: u64,
    pub joint_frequency: Option<f64>,
    /// Product of single-prime limiting probabilities.
    pub joint_theory: f64,
    pub std_error: f64,
    pub marginal_trivial_frequency: Vec<Option<f64>>,
    pub marginal_trivial_theory: Vec<f64>,
    pub joint_bins: Vec<BinRow>,
    pub joint_chi_square: Option<ChiSquareResult>,
    /// Trivial/nontrivial at the first prime against the joint pattern at
    /// the remaining primes.
    pub independence_chi_square: Option<ChiSquareResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub workers: usize,
    pub wall_clock_secs: f64,
    pub samples_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub library_version: String,
    pub kind: ExperimentKind,
    pub invocation: Option<String>,
    pub config: ExperimentConfig,
    pub samples: SampleAccounting,
    pub saturation_fraction: Option<f64>,
    pub distribution: Option<DistributionSection>,
    pub moments: Option<Vec<MomentRow>>,
    pub saturation_sweep: Option<Vec<SaturationRow>>,
    pub convergence: Option<Vec<ConvergenceRow>>,
    pub multiprime: Option<MultiprimeSection>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub execution: Execution,
}

impl ExperimentReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::Io(e.to_string()))
    }

    /// JSON with the `execution` section removed; equal for any two runs of
    /// the same configuration.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| crate::Error::Io(e.to_string()))?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("execution");
        }
        serde_json::to_string_pretty(&v).map_err(|e| crate::Error::Io(e.to_string()))
    }

    /// Writes the report's main table as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| crate::Error::Io(e.to_string());
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        match self.kind {
            ExperimentKind::Distribution => {
                w.write_record(["bin", "observed", "frequency", "theory", "expected", "wilson_lo", "wilson_hi"])
                    .map_err(err)?;
                for b in self.distribution.iter().flat_map(|d| &d.bins) {
                    write_bin(&mut w, b).map_err(err)?;
                }
            }
            ExperimentKind::Multiprime => {
                w.write_record(["bin", "observed", "frequency", "theory", "expected", "wilson_lo", "wilson_hi"])
                    .map_err(err)?;
                for b in self.multiprime.iter().flat_map(|m| &m.joint_bins) {
                    write_bin(&mut w, b).map_err(err)?;
                }
            }
            ExperimentKind::Moments => {
                w.write_record([
                    "mu",
                    "coker_mean",
                    "coker_std_error",
                    "coker_exact",
                    "coker_limit",
                    "torsion_mean",
                    "torsion_std_error",
                    "torsion_limit",
                ])
                .map_err(err)?;
                for r in self.moments.iter().flatten() {
                    w.write_record([
                        r.mu.label(),
                        opt(r.coker_mean),
                        opt(r.coker_std_error),
                        r.coker_exact_value.to_string(),
                        r.coker_limit.to_string(),
                        opt(r.torsion_mean),
                        opt(r.torsion_std_error),
                        r.torsion_limit.to_string(),
                    ])
                    .map_err(err)?;
                }
            }
            ExperimentKind::SaturationSweep => {
                w.write_record(["e", "samples", "saturated", "fraction"]).map_err(err)?;
                for r in self.saturation_sweep.iter().flatten() {
                    w.write_record([r.e.to_string(), r.samples.to_string(), r.saturated.to_string(), opt(r.fraction)])
                        .map_err(err)?;
                }
            }
            ExperimentKind::ConvergenceSweep => {
                w.write_record(["n", "samples", "total_variation", "trivial_frequency"]).map_err(err)?;
                for r in self.convergence.iter().flatten() {
                    w.write_record([
                        r.n.to_string(),
                        r.samples.to_string(),
                        opt(r.total_variation),
                        opt(r.trivial_frequency),
                    ])
                    .map_err(err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn write_bin<W: Write>(w: &mut csv::Writer<W>, b: &BinRow) -> std::result::Result<(), csv::Error> {
    let (lo, hi) = b
        .wilson_99
        .map(|(l, h)| (l.to_string(), h.to_string()))
        .unwrap_or_default();
    w.write_record([
        b.bin.clone(),
        b.observed.to_string(),
        b.frequency.map(|f| f.to_string()).unwrap_or_default(),
        b.theory.to_string(),
        b.expected.to_string(),
        lo,
        hi,
    ])
}
