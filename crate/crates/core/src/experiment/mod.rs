//! Monte Carlo runs comparing sampled cokernels against the limiting
//! measure and the exact moment formulas.
//!
//! Every run first reduces its samples to a histogram of outcomes. Workers
//! merge histograms by adding counts, so the result does not depend on the
//! number of workers or on scheduling, and all statistics are computed
//! afterwards from the histogram in a fixed order.

mod report;

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::*;

use crate::error::{Error, Result};
use crate::measure::{exact_moment_coker, limiting_moment_coker, limiting_moment_torsion, CLMeasure};
use crate::numeric::{rational_to_f64, ratio_to_f64};
use crate::partition::{enumerate_partitions, Partition};
use crate::pgroup::SurCounter;
use crate::sampler::{refine_precision, sample_multiprime, SampleSpec};
use crate::stats::{chi_square_gof, chi_square_independence, total_variation, wilson_interval};
use crate::zpe::observe_cokernel;

/// Confidence level of the reported Wilson intervals.
pub const WILSON_ALPHA: f64 = 0.01;
/// Largest `|μ|` accepted by the moment experiment.
pub const MAX_MOMENT_SIZE: u32 = 6;
/// Smallest `n` at which n → ∞ limits are asserted.
pub const LIMIT_CHECK_MIN_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaturationPolicy {
    /// Drop saturated samples and count them.
    DiscardAndCount,
    /// Re-run a saturated sample once at doubled precision; if it is still
    /// saturated, tally it under `other`.
    #[default]
    EscalatePrecision,
    /// Tally saturated samples under `other`.
    TallyAsOther,
}

impl std::str::FromStr for SaturationPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" | "discard-and-count" => Ok(SaturationPolicy::DiscardAndCount),
            "escalate" | "escalate-precision" => Ok(SaturationPolicy::EscalatePrecision),
            "other" | "tally-as-other" => Ok(SaturationPolicy::TallyAsOther),
            _ => Err(Error::InvalidConfig(format!("unknown saturation policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: SampleSpec,
    pub tracked_max_size: u32,
    pub saturation_policy: SaturationPolicy,
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn new(spec: SampleSpec) -> Self {
        ExperimentConfig {
            spec,
            tracked_max_size: 8,
            saturation_policy: SaturationPolicy::default(),
            alpha: 0.001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.tracked_max_size > 20 {
            return Err(Error::InvalidConfig("tracked_max_size above 20".into()));
        }
        Ok(())
    }

    fn measure(&self, prime_index: usize) -> CLMeasure {
        CLMeasure::with_tolerance(
            self.spec.primes[prime_index].p,
            self.spec.u as u32,
            crate::measure::DEFAULT_PRODUCT_TOLERANCE,
            self.tracked_max_size,
        )
        .expect("default tolerance is valid")
    }
}

/// Result of one sample after the saturation policy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Outcome {
    torsion: Vec<Partition>,
    saturated: bool,
    escalated: bool,
}

fn observe_sample(spec: &SampleSpec, policy: SaturationPolicy, index: u64) -> Outcome {
    let mut torsion = Vec::with_capacity(spec.primes.len());
    let mut saturated = false;
    let mut escalated = false;
    for (lane, m) in sample_multiprime(spec, index).into_iter().enumerate() {
        let mut obs = observe_cokernel(&m);
        if obs.saturated && policy == SaturationPolicy::EscalatePrecision {
            if let Some(hi) = refine_precision(&m, spec.seed, lane as u64, index) {
                obs = observe_cokernel(&hi);
                escalated = true;
            }
        }
        saturated |= obs.saturated;
        torsion.push(obs.torsion);
    }
    Outcome { torsion, saturated, escalated }
}

type Histogram = BTreeMap<Outcome, u64>;

fn collect(spec: &SampleSpec, policy: SaturationPolicy, workers: usize) -> Result<Histogram> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let merged = pool.install(|| {
        (0..spec.count)
            .into_par_iter()
            .fold(HashMap::new, |mut acc: HashMap<Outcome, u64>, i| {
                *acc.entry(observe_sample(spec, policy, i)).or_default() += 1;
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                a
            })
    });
    Ok(merged.into_iter().collect())
}

fn accounting(hist: &Histogram, policy: SaturationPolicy) -> SampleAccounting {
    let mut acc = SampleAccounting::default();
    for (o, &c) in hist {
        acc.total += c;
        if o.saturated {
            acc.saturated += c;
            if policy == SaturationPolicy::DiscardAndCount {
                acc.discarded += c;
            }
        }
        if o.escalated {
            acc.escalated += c;
        }
    }
    acc.used = acc.total - acc.discarded;
    acc
}

/// Samples counted in the distribution tallies: unsaturated ones.
fn tally(hist: &Histogram, prime_index: usize) -> BTreeMap<Partition, u64> {
    let mut out = BTreeMap::new();
    for (o, &c) in hist.iter().filter(|(o, _)| !o.saturated) {
        *out.entry(o.torsion[prime_index].clone()).or_default() += c;
    }
    out
}

fn frac(k: u64, n: u64) -> Option<f64> {
    (n > 0).then(|| k as f64 / n as f64)
}

fn wilson(k: u64, n: u64) -> Option<(f64, f64)> {
    wilson_interval(k, n, WILSON_ALPHA)
}

struct Timer {
    start: Instant,
    workers: usize,
}

impl Timer {
    fn start(workers: usize) -> Self {
        Timer { start: Instant::now(), workers }
    }

    fn finish(&self, samples: u64) -> Execution {
        let secs = self.start.elapsed().as_secs_f64();
        Execution {
            workers: self.workers,
            wall_clock_secs: secs,
            samples_per_sec: if secs > 0.0 { samples as f64 / secs } else { 0.0 },
        }
    }
}

fn empty_report(kind: ExperimentKind, cfg: &ExperimentConfig, samples: SampleAccounting) -> ExperimentReport {
    ExperimentReport {
        schema_version: SCHEMA_VERSION,
        library_version: crate::VERSION.to_string(),
        kind,
        invocation: None,
        config: cfg.clone(),
        saturation_fraction: frac(samples.saturated, samples.total),
        samples,
        distribution: None,
        moments: None,
        saturation_sweep: None,
        convergence: None,
        multiprime: None,
        checks: Vec::new(),
        warnings: Vec::new(),
        execution: Execution {
            workers: 0,
            wall_clock_secs: 0.0,
            samples_per_sec: 0.0,
        },
    }
}

fn precision_warning(report: &mut ExperimentReport) {
    if report.config.saturation_policy == SaturationPolicy::DiscardAndCount
        && report.saturation_fraction.is_some_and(|f| f > 0.01)
    {
        report.warnings.push(format!(
            "precision warning: {:.3}% of samples saturated and were discarded",
            100.0 * report.saturation_fraction.unwrap_or(0.0)
        ));
    }
}

/// Tracked bins plus `other`, with empirical and theoretical mass.
fn distribution_bins(
    counts: &BTreeMap<Partition, u64>,
    used: u64,
    measure: &CLMeasure,
) -> Vec<BinRow> {
    let mut rows = Vec::new();
    let mut tracked_obs = 0u64;
    let mut tracked_theory = 0.0;
    for lam in enumerate_partitions(measure.max_size()) {
        let observed = counts.get(&lam).copied().unwrap_or(0);
        let theory = measure.limiting_probability(&lam);
        tracked_obs += observed;
        tracked_theory += theory;
        rows.push(BinRow {
            bin: lam.label(),
            observed,
            frequency: frac(observed, used),
            theory,
            expected: theory * used as f64,
            wilson_99: wilson(observed, used),
        });
    }
    let observed = used - tracked_obs;
    let theory = (1.0 - tracked_theory).max(0.0);
    rows.push(BinRow {
        bin: "other".into(),
        observed,
        frequency: frac(observed, used),
        theory,
        expected: theory * used as f64,
        wilson_99: wilson(observed, used),
    });
    rows
}

/// Keeps bins with expected count ≥ 5 and merges the rest into one bin.
fn chi_square_over(bins: &[BinRow]) -> (Vec<String>, Option<crate::stats::ChiSquareResult>) {
    let mut names = Vec::new();
    let mut obs = Vec::new();
    let mut probs = Vec::new();
    let (mut rest_obs, mut rest_p) = (0u64, 0.0);
    for b in bins {
        if b.expected >= 5.0 && b.bin != "other" {
            names.push(b.bin.clone());
            obs.push(b.observed);
            probs.push(b.theory);
        } else {
            rest_obs += b.observed;
            rest_p += b.theory;
        }
    }
    let used: u64 = bins.iter().map(|b| b.observed).sum();
    if rest_p * used as f64 >= 5.0 {
        names.push("merged".into());
        obs.push(rest_obs);
        probs.push(rest_p);
    } else if let (Some(o), Some(p)) = (obs.last_mut(), probs.last_mut()) {
        *o += rest_obs;
        *p += rest_p;
    }
    (names, chi_square_gof(&obs, &probs))
}

fn distribution_section(cfg: &ExperimentConfig, hist: &Histogram, used: u64) -> DistributionSection {
    let measure = cfg.measure(0);
    let counts = tally(hist, 0);
    let bins = distribution_bins(&counts, used, &measure);
    let (chi_square_bins, chi_square) = chi_square_over(&bins);
    let trivial_obs = counts.get(&Partition::trivial()).copied().unwrap_or(0);
    let theory = measure.limiting_probability(&Partition::trivial());
    let interval = wilson(trivial_obs, used);
    let total_variation = (used > 0).then(|| {
        let emp: Vec<f64> = bins.iter().map(|b| b.frequency.unwrap_or(0.0)).collect();
        let th: Vec<f64> = bins.iter().map(|b| b.theory).collect();
        total_variation(&emp, &th)
    });
    DistributionSection {
        product: measure.product().clone(),
        bins,
        chi_square_bins,
        chi_square,
        trivial: TrivialTorsionCheck {
            observed: trivial_obs,
            frequency: frac(trivial_obs, used),
            theory,
            wilson_99: interval,
            theory_inside_interval: interval.map(|(lo, hi)| lo <= theory && theory <= hi),
        },
        total_variation,
    }
}

/// Compares the cokernel distribution with the limiting measure.
pub fn run_distribution_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    let timer = Timer::start(workers);
    let hist = collect(&cfg.spec, cfg.saturation_policy, workers)?;
    let samples = accounting(&hist, cfg.saturation_policy);
    let used = samples.used;
    let mut report = empty_report(ExperimentKind::Distribution, cfg, samples);
    let section = distribution_section(cfg, &hist, used);
    if let Some(chi) = &section.chi_square {
        report.checks.push(Check {
            name: "chi_square_gof".into(),
            passed: chi.p_value >= cfg.alpha,
            detail: format!(
                "statistic {:.4} on {} df, p-value {:.4e} (alpha {})",
                chi.statistic, chi.degrees_of_freedom, chi.p_value, cfg.alpha
            ),
        });
    }
    if let (Some(inside), Some((lo, hi))) = (section.trivial.theory_inside_interval, section.trivial.wilson_99) {
        report.checks.push(Check {
            name: "trivial_torsion_wilson99".into(),
            passed: inside,
            detail: format!(
                "theory {:.6} vs observed {:.6}, interval [{lo:.6}, {hi:.6}]",
                section.trivial.theory,
                section.trivial.frequency.unwrap_or(f64::NAN)
            ),
        });
    }
    report.distribution = Some(section);
    precision_warning(&mut report);
    report.execution = timer.finish(report.samples.total);
    Ok(report)
}

/// Exact mean and standard error of a statistic taking value `x` with
/// multiplicity `c`.
fn mean_and_stderr(values: &[(BigUint, u64)]) -> (Option<f64>, Option<f64>) {
    let n: u64 = values.iter().map(|(_, c)| c).sum();
    if n == 0 {
        return (None, None);
    }
    let mut s1 = BigUint::zero();
    let mut s2 = BigUint::zero();
    for (x, c) in values {
        s1 += x * *c;
        s2 += x * x * *c;
    }
    let nb = BigUint::from(n);
    let mean = ratio_to_f64(&s1, &nb);
    if n < 2 {
        return (Some(mean), None);
    }
    // sample variance (s2 - s1²/n) / (n - 1), exactly
    let num = BigInt::from(&s2 * &nb) - BigInt::from(&s1 * &s1);
    let var = BigRational::new(num, BigInt::from(&nb * (n - 1)));
    let stderr = (rational_to_f64(&var) / n as f64).sqrt();
    (Some(mean), Some(stderr))
}

fn within_sigmas(mean: f64, stderr: f64, target: f64, k: f64) -> bool {
    if stderr == 0.0 {
        (mean - target).abs() <= 1e-12 * target.abs().max(1.0)
    } else {
        (mean - target).abs() <= k * stderr
    }
}

/// Surjection moments `E[#Sur(coker M, G_μ)]` and `E[#Sur(T, G_μ)]`.
///
/// Saturated samples are used unless the policy discards them: a summand
/// `Z/p^e` standing for `Z/p^a` with `a ≥ e` gives the same surjection count
/// onto `G_μ` whenever `μ_1 ≤ e`, which is required here.
pub fn run_moment_experiment(
    cfg: &ExperimentConfig,
    mus: &[Partition],
    workers: usize,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pp = cfg.spec.prime().clone();
    for mu in mus {
        if mu.size() > MAX_MOMENT_SIZE {
            return Err(Error::InvalidConfig(format!("|mu| = {} exceeds {MAX_MOMENT_SIZE}", mu.size())));
        }
        if mu.largest() > pp.e {
            return Err(Error::InvalidConfig(format!(
                "mu = {mu} has a part above the precision e = {}",
                pp.e
            )));
        }
    }
    let timer = Timer::start(workers);
    let hist = collect(&cfg.spec, cfg.saturation_policy, workers)?;
    let samples = accounting(&hist, cfg.saturation_policy);
    let mut report = empty_report(ExperimentKind::Moments, cfg, samples);
    let discard = cfg.saturation_policy == SaturationPolicy::DiscardAndCount;
    let mut torsion_counts: BTreeMap<Partition, u64> = BTreeMap::new();
    for (o, &c) in &hist {
        if !(discard && o.saturated) {
            *torsion_counts.entry(o.torsion[0].clone()).or_default() += c;
        }
    }
    let (n, u) = (cfg.spec.n as u32, cfg.spec.u as u32);
    let counter = SurCounter::new(pp.p);
    let mut rows = Vec::new();
    for mu in mus {
        let coker: Vec<(BigUint, u64)> = torsion_counts
            .iter()
            .map(|(t, &c)| (counter.sur_mixed(u, t, mu), c))
            .collect();
        let torsion: Vec<(BigUint, u64)> = torsion_counts
            .iter()
            .map(|(t, &c)| (counter.sur(t, mu), c))
            .collect();
        let (coker_mean, coker_std_error) = mean_and_stderr(&coker);
        let (torsion_mean, torsion_std_error) = mean_and_stderr(&torsion);
        let exact = exact_moment_coker(n, u, mu, pp.p);
        let row = MomentRow {
            mu: mu.clone(),
            coker_mean,
            coker_std_error,
            coker_exact: exact.to_string(),
            coker_exact_value: rational_to_f64(&exact),
            coker_limit: rational_to_f64(&limiting_moment_coker(u, mu, pp.p)),
            torsion_mean,
            torsion_std_error,
            torsion_limit: limiting_moment_torsion(u, mu, pp.p),
        };
        if let (Some(m), Some(s)) = (row.coker_mean, row.coker_std_error) {
            report.checks.push(Check {
                name: format!("coker_moment_exact[{mu}]"),
                passed: within_sigmas(m, s, row.coker_exact_value, 3.0),
                detail: format!("mean {m:.6} ± {s:.6} vs exact {} = {:.6}", row.coker_exact, row.coker_exact_value),
            });
        }
        if cfg.spec.n >= LIMIT_CHECK_MIN_N {
            if let (Some(m), Some(s)) = (row.torsion_mean, row.torsion_std_error) {
                report.checks.push(Check {
                    name: format!("torsion_moment_limit[{mu}]"),
                    passed: within_sigmas(m, s, row.torsion_limit, 3.0),
                    detail: format!("mean {m:.6} ± {s:.6} vs limit {:.6}", row.torsion_limit),
                });
            }
        }
        rows.push(row);
    }
    report.moments = Some(rows);
    precision_warning(&mut report);
    report.execution = timer.finish(report.samples.total);
    Ok(report)
}

/// Probability that an `(n+u) × 1` Haar matrix is zero mod `p^e`.
fn single_column_saturation(p: u64, e: u32, rows: usize) -> f64 {
    (p as f64).powi(-((e as usize * rows) as i32))
}

/// Fraction of samples whose Smith form hits the working precision, per `e`.
pub fn run_saturation_sweep(cfg: &ExperimentConfig, e_list: &[u32], workers: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    if e_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("precision list must be increasing".into()));
    }
    let timer = Timer::start(workers);
    let mut rows = Vec::new();
    let mut total = SampleAccounting::default();
    for &e in e_list {
        let spec = cfg.spec.with_precision(e)?;
        let hist = collect(&spec, SaturationPolicy::TallyAsOther, workers)?;
        let acc = accounting(&hist, SaturationPolicy::TallyAsOther);
        total.total += acc.total;
        total.used += acc.used;
        total.saturated += acc.saturated;
        rows.push(SaturationRow {
            e,
            samples: acc.total,
            saturated: acc.saturated,
            fraction: frac(acc.saturated, acc.total),
        });
    }
    let mut report = empty_report(ExperimentKind::SaturationSweep, cfg, total);
    let p = cfg.spec.prime().p.get();
    if cfg.spec.n == 1 {
        for r in &rows {
            if let Some(f) = r.fraction {
                let q = single_column_saturation(p, r.e, cfg.spec.rows());
                let sigma = (q * (1.0 - q) / r.samples as f64).sqrt();
                report.checks.push(Check {
                    name: format!("saturation_exact[e={}]", r.e),
                    passed: within_sigmas(f, sigma, q, 3.0),
                    detail: format!("fraction {f:.6} vs exact {q:.6} (sigma {sigma:.2e})"),
                });
            }
        }
    }
    let fr: Vec<(f64, u64)> = rows.iter().filter_map(|r| r.fraction.map(|f| (f, r.samples))).collect();
    if fr.len() >= 2 {
        // nonincreasing up to three standard errors of the difference
        let ok = fr.windows(2).all(|w| {
            let (a, na) = w[0];
            let (b, nb) = w[1];
            let se = (a * (1.0 - a) / na as f64 + b * (1.0 - b) / nb as f64).sqrt();
            b <= a + 3.0 * se
        });
        report.checks.push(Check {
            name: "saturation_nonincreasing".into(),
            passed: ok,
            detail: format!("fractions {:?}", fr.iter().map(|x| x.0).collect::<Vec<_>>()),
        });
    }
    report.saturation_sweep = Some(rows);
    report.execution = timer.finish(report.samples.total);
    Ok(report)
}

/// Total-variation distance to the limiting measure for each `n`.
pub fn run_convergence_sweep(cfg: &ExperimentConfig, n_list: &[usize], workers: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n list must be increasing".into()));
    }
    let timer = Timer::start(workers);
    let mut rows = Vec::new();
    let mut total = SampleAccounting::default();
    for &n in n_list {
        let mut sub = cfg.clone();
        sub.spec.n = n;
        sub.validate()?;
        let hist = collect(&sub.spec, sub.saturation_policy, workers)?;
        let acc = accounting(&hist, sub.saturation_policy);
        let section = distribution_section(&sub, &hist, acc.used);
        total.total += acc.total;
        total.used += acc.used;
        total.discarded += acc.discarded;
        total.saturated += acc.saturated;
        total.escalated += acc.escalated;
        rows.push(ConvergenceRow {
            n,
            samples: acc.used,
            total_variation: section.total_variation,
            trivial_frequency: section.trivial.frequency,
        });
    }
    let mut report = empty_report(ExperimentKind::ConvergenceSweep, cfg, total);
    let tvs: Vec<(usize, f64)> = rows.iter().filter_map(|r| r.total_variation.map(|t| (r.n, t))).collect();
    if let (Some(first), Some(last)) = (tvs.first(), tvs.last()) {
        if tvs.len() >= 2 {
            report.checks.push(Check {
                name: "total_variation_decreases".into(),
                passed: last.1 < first.1,
                detail: format!("TV(n={}) = {:.5}, TV(n={}) = {:.5}", first.0, first.1, last.0, last.1),
            });
        }
    }
    report.convergence = Some(rows);
    precision_warning(&mut report);
    report.execution = timer.finish(report.samples.total);
    Ok(report)
}

fn tuple_label(parts: &[Partition]) -> String {
    parts.iter().map(Partition::label).collect::<Vec<_>>().join(" | ")
}

/// Joint cokernel statistics over several primes against the product of
/// single-prime limits.
pub fn run_multiprime_experiment(
    cfg: &ExperimentConfig,
    target: &[Partition],
    workers: usize,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let k = cfg.spec.primes.len();
    if target.len() != k {
        return Err(Error::InvalidConfig(format!("{} target types for {k} primes", target.len())));
    }
    let timer = Timer::start(workers);
    let hist = collect(&cfg.spec, cfg.saturation_policy, workers)?;
    let samples = accounting(&hist, cfg.saturation_policy);
    let used = samples.used;
    let mut report = empty_report(ExperimentKind::Multiprime, cfg, samples);
    let measures: Vec<CLMeasure> = (0..k).map(|i| cfg.measure(i)).collect();

    let mut joint: BTreeMap<Vec<Partition>, u64> = BTreeMap::new();
    for (o, &c) in hist.iter().filter(|(o, _)| !o.saturated) {
        *joint.entry(o.torsion.clone()).or_default() += c;
    }
    let joint_observed = joint.get(target).copied().unwrap_or(0);
    let joint_theory: f64 = measures.iter().zip(target).map(|(m, g)| m.limiting_probability(g)).product();
    let std_error = (joint_theory * (1.0 - joint_theory) / used.max(1) as f64).sqrt();
    let marginal_trivial_frequency = (0..k)
        .map(|i| {
            let c: u64 = joint.iter().filter(|(t, _)| t[i].is_trivial()).map(|(_, c)| c).sum();
            frac(c, used)
        })
        .collect();
    let marginal_trivial_theory = measures.iter().map(|m| m.limiting_probability(&Partition::trivial())).collect();

    // joint bins over small per-prime types
    let small = enumerate_partitions(cfg.tracked_max_size.min(3));
    let mut tuples: Vec<Vec<Partition>> = vec![Vec::new()];
    for _ in 0..k {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                small.iter().map(move |lam| {
                    let mut t = t.clone();
                    t.push(lam.clone());
                    t
                })
            })
            .collect();
    }
    let mut joint_bins = Vec::new();
    let (mut seen_obs, mut seen_theory) = (0u64, 0.0);
    for t in &tuples {
        let observed = joint.get(t).copied().unwrap_or(0);
        let theory: f64 = measures.iter().zip(t).map(|(m, g)| m.limiting_probability(g)).product();
        seen_obs += observed;
        seen_theory += theory;
        joint_bins.push(BinRow {
            bin: tuple_label(t),
            observed,
            frequency: frac(observed, used),
            theory,
            expected: theory * used as f64,
            wilson_99: wilson(observed, used),
        });
    }
    let rest = used - seen_obs;
    joint_bins.push(BinRow {
        bin: "other".into(),
        observed: rest,
        frequency: frac(rest, used),
        theory: (1.0 - seen_theory).max(0.0),
        expected: (1.0 - seen_theory).max(0.0) * used as f64,
        wilson_99: wilson(rest, used),
    });
    let (_, joint_chi_square) = chi_square_over(&joint_bins);

    let independence_chi_square = if k >= 2 {
        let cols = 1usize << (k - 1);
        let mut table = vec![vec![0u64; cols]; 2];
        for (t, &c) in &joint {
            let row = usize::from(!t[0].is_trivial());
            let col = t[1..]
                .iter()
                .enumerate()
                .fold(0, |acc, (j, g)| acc | (usize::from(!g.is_trivial()) << j));
            table[row][col] += c;
        }
        chi_square_independence(&table)
    } else {
        None
    };

    if used > 0 {
        let freq = joint_observed as f64 / used as f64;
        report.checks.push(Check {
            name: "joint_frequency_3sigma".into(),
            passed: within_sigmas(freq, std_error, joint_theory, 3.0),
            detail: format!("joint {freq:.6} vs product {joint_theory:.6} (sigma {std_error:.2e})"),
        });
    }
    if let Some(chi) = &joint_chi_square {
        report.checks.push(Check {
            name: "joint_chi_square_gof".into(),
            passed: chi.p_value >= cfg.alpha,
            detail: format!("statistic {:.4} on {} df, p-value {:.4e}", chi.statistic, chi.degrees_of_freedom, chi.p_value),
        });
    }
    report.multiprime = Some(MultiprimeSection {
        target: target.to_vec(),
        joint_observed,
        joint_frequency: frac(joint_observed, used),
        joint_theory,
        std_error,
        marginal_trivial_frequency,
        marginal_trivial_theory,
        joint_bins,
        joint_chi_square,
        independence_chi_square,
    });
    precision_warning(&mut report);
    report.execution = timer.finish(report.samples.total);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prime::Prime;

    fn cfg(p: u64, e: u32, n: usize, u: usize, seed: u64, count: u64) -> ExperimentConfig {
        ExperimentConfig::new(SampleSpec::single(Prime::new(p).unwrap(), e, n, u, seed, count).unwrap())
    }

    #[test]
    fn zero_samples_give_an_empty_report() {
        let r = run_distribution_experiment(&cfg(2, 10, 10, 0, 1, 0), 2).unwrap();
        assert_eq!(r.samples.total, 0);
        assert!(r.checks.is_empty());
        let d = r.distribution.unwrap();
        assert!(d.bins.iter().all(|b| b.observed == 0 && b.frequency.is_none()));
        assert!(d.chi_square.is_none() && d.total_variation.is_none());
        let r = run_convergence_sweep(&cfg(2, 10, 2, 0, 1, 0), &[2, 4], 1).unwrap();
        assert!(r.convergence.unwrap().iter().all(|row| row.total_variation.is_none()));
    }

    #[test]
    fn counts_are_conserved() {
        for policy in [
            SaturationPolicy::DiscardAndCount,
            SaturationPolicy::EscalatePrecision,
            SaturationPolicy::TallyAsOther,
        ] {
            let mut c = cfg(2, 2, 3, 0, 5, 2000);
            c.saturation_policy = policy;
            c.tracked_max_size = 3;
            let r = run_distribution_experiment(&c, 3).unwrap();
            let bins: u64 = r.distribution.as_ref().unwrap().bins.iter().map(|b| b.observed).sum();
            assert_eq!(bins + r.samples.discarded, 2000, "{policy:?}");
            assert_eq!(r.samples.used + r.samples.discarded, r.samples.total);
            let f: f64 = r.distribution.unwrap().bins.iter().filter_map(|b| b.frequency).sum();
            assert!((f - 1.0).abs() < 1e-12);
            if policy == SaturationPolicy::DiscardAndCount {
                assert!(r.samples.discarded > 0);
                assert!(r.warnings.iter().any(|w| w.contains("precision warning")));
            }
        }
    }

    #[test]
    fn escalation_removes_most_saturation() {
        let mut c = cfg(2, 3, 2, 0, 9, 4000);
        c.saturation_policy = SaturationPolicy::TallyAsOther;
        let plain = run_distribution_experiment(&c, 2).unwrap();
        c.saturation_policy = SaturationPolicy::EscalatePrecision;
        let esc = run_distribution_experiment(&c, 2).unwrap();
        assert_eq!(esc.samples.escalated, plain.samples.saturated);
        assert!(esc.samples.saturated * 4 < plain.samples.saturated);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = cfg(3, 6, 5, 1, 77, 3000);
        let a = run_distribution_experiment(&c, 1).unwrap();
        let b = run_distribution_experiment(&c, 7).unwrap();
        assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
    }

    #[test]
    fn trivial_mu_has_exact_unit_mean() {
        let r = run_moment_experiment(&cfg(2, 8, 3, 1, 3, 500), &[Partition::trivial()], 2).unwrap();
        let row = &r.moments.as_ref().unwrap()[0];
        assert_eq!(row.coker_mean, Some(1.0));
        assert_eq!(row.coker_std_error, Some(0.0));
        assert_eq!(row.torsion_mean, Some(1.0));
        assert!(r.all_checks_passed());
    }

    #[test]
    fn moment_inputs_are_validated() {
        let c = cfg(2, 3, 3, 0, 3, 10);
        assert!(run_moment_experiment(&c, &["4".parse().unwrap()], 1).is_err());
        assert!(run_moment_experiment(&c, &["1,1,1,1,1,1,1".parse().unwrap()], 1).is_err());
        assert!(run_saturation_sweep(&c, &[4, 2], 1).is_err());
        let mut bad = c.clone();
        bad.alpha = 0.0;
        assert!(run_distribution_experiment(&bad, 1).is_err());
        assert!(run_multiprime_experiment(&c, &[], 1).is_err());
    }

    #[test]
    fn sample_variance_is_exact() {
        // values 1, 2, 3 each once: mean 2, variance 1, stderr 1/sqrt(3)
        let vals: Vec<(BigUint, u64)> = (1u32..=3).map(|x| (BigUint::from(x), 1)).collect();
        let (m, s) = mean_and_stderr(&vals);
        assert_eq!(m, Some(2.0));
        assert!((s.unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[]), (None, None));
    }

    #[test]
    fn report_json_round_trips() {
        let c = cfg(2, 6, 4, 0, 12, 300);
        let r = run_distribution_experiment(&c, 2).unwrap();
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("bin,observed,frequency"));
        assert!(text.lines().nth(1).unwrap().starts_with("trivial,"));
        assert!(text.lines().last().unwrap().starts_with("other,"));
    }
}
