//! Acceptance criteria, one test per criterion. Each prints a single
//! `PASS`/`FAIL` line; run with `--nocapture` to see them.

use std::time::Instant;

use num_rational::BigRational;
use padic_coker::experiment::{
    run_distribution_experiment, run_moment_experiment, run_multiprime_experiment, run_saturation_sweep,
    ExperimentConfig, SaturationPolicy,
};
use padic_coker::measure::exact_moment_coker;
use padic_coker::numeric::rational_to_f64;
use padic_coker::sampler::PrimePrecision;
use padic_coker::verify::{verify_counts, verify_duality, verify_free_surjections, verify_integer_snf};
use padic_coker::{CLMeasure, Partition, Prime, SampleSpec};

const WORKERS: usize = 8;

fn pr(p: u64) -> Prime {
    Prime::new(p).unwrap()
}

fn part(s: &str) -> Partition {
    s.parse().unwrap()
}

fn report(id: u32, passed: bool, summary: &str, started: Instant) {
    println!(
        "[{}] criterion {id:>2}: {summary} ({:.1}s)",
        if passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

fn config(p: u64, e: u32, n: usize, u: usize, seed: u64, count: u64) -> ExperimentConfig {
    ExperimentConfig::new(SampleSpec::single(pr(p), e, n, u, seed, count).unwrap())
}

#[test]
fn criterion_01_oracle_equivalence() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut instances = 0;
    for (p, max_order) in [(2, 256), (3, 256), (5, 125)] {
        for o in verify_counts(pr(p), max_order)
            .into_iter()
            .chain([verify_free_surjections(pr(p), max_order)])
        {
            instances += o.instances;
            if !o.passed() {
                failures.push(format!("{}: {} skipped, {:?}", o.name, o.skipped, o.mismatches));
            }
        }
    }
    report(
        1,
        failures.is_empty(),
        &format!("hom/sur/aut/subgroup/free-sur counts equal brute force on {instances} instances"),
        t,
    );
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn criterion_02_order_index_duality() {
    let t = Instant::now();
    let outcomes: Vec<_> = [2, 3, 5].iter().map(|&p| verify_duality(pr(p), 12)).collect();
    let ok = outcomes.iter().all(|o| o.passed());
    let n: u64 = outcomes.iter().map(|o| o.instances).sum();
    report(2, ok, &format!("order/index duality for {n} partition types, |lambda| <= 12"), t);
    for o in &outcomes {
        assert!(o.passed(), "{o:?}");
    }
}

#[test]
fn criterion_03_snf_cross_check() {
    let t = Instant::now();
    let o = verify_integer_snf(&[pr(2), pr(3), pr(5)], 12, 10_000, 2024);
    report(3, o.passed(), &format!("{} mod-p^12 Smith forms match integer SNF", o.instances), t);
    assert!(o.passed(), "{:?}", &o.mismatches[..o.mismatches.len().min(5)]);
}

#[test]
fn criterion_04_exact_finite_n_moments() {
    let t = Instant::now();
    let cases: [(u64, usize, usize, &str); 4] = [(2, 0, 1, "1"), (2, 1, 2, "1"), (3, 0, 2, "1"), (2, 0, 3, "1,1")];
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, &(p, u, n, mu)) in cases.iter().enumerate() {
        let cfg = config(p, 10, n, u, 4000 + i as u64, 1_000_000);
        let r = run_moment_experiment(&cfg, &[part(mu)], WORKERS).unwrap();
        let row = &r.moments.as_ref().unwrap()[0];
        let exact: BigRational = exact_moment_coker(n as u32, u as u32, &part(mu), pr(p));
        assert_eq!(rational_to_f64(&exact), row.coker_exact_value);
        let (m, s) = (row.coker_mean.unwrap(), row.coker_std_error.unwrap());
        let pass = (m - row.coker_exact_value).abs() <= 3.0 * s;
        ok &= pass;
        lines.push(format!("(p={p},u={u},n={n},mu=({mu})) {m:.5}±{s:.5} vs {exact}"));
    }
    report(4, ok, &format!("cokernel Sur-moments within 3 sigma of exact: {}", lines.join("; ")), t);
    assert!(ok, "{lines:#?}");
}

#[test]
fn criterion_05_torsion_moment_limit() {
    let t = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for u in [1usize, 2] {
        let cfg = config(2, 10, 12, u, 5000 + u as u64, 100_000);
        let r = run_moment_experiment(&cfg, &[part("1")], WORKERS).unwrap();
        let row = &r.moments.as_ref().unwrap()[0];
        let (m, s) = (row.torsion_mean.unwrap(), row.torsion_std_error.unwrap());
        let target = 2f64.powi(-(u as i32));
        let pass = (m - target).abs() <= 3.0 * s;
        ok &= pass;
        lines.push(format!("u={u}: {m:.5}±{s:.5} vs {target}"));
    }
    report(5, ok, &format!("torsion Sur-moment near |G|^-u: {}", lines.join("; ")), t);
    assert!(ok, "{lines:#?}");
}

#[test]
fn criterion_06_distribution_match() {
    let t = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for p in [2u64, 3] {
        for u in [0usize, 1, 2] {
            let mut cfg = config(p, 10, 12, u, 6000 + 10 * p + u as u64, 100_000);
            cfg.tracked_max_size = 6;
            let r = run_distribution_experiment(&cfg, WORKERS).unwrap();
            let d = r.distribution.as_ref().unwrap();
            let chi = d.chi_square.as_ref().unwrap();
            let gof = chi.p_value >= 0.001;
            let trivial = r.check("trivial_torsion_wilson99").map(|c| c.passed).unwrap_or(false);
            let expected = CLMeasure::new(pr(p), u as u32).product().value;
            let (lo, hi) = d.trivial.wilson_99.unwrap();
            let in_interval = lo <= expected && expected <= hi;
            ok &= gof && trivial && in_interval;
            lines.push(format!(
                "(p={p},u={u}) chi2 p={:.4}, trivial {:.5} in [{lo:.5},{hi:.5}] vs {expected:.6}",
                chi.p_value,
                d.trivial.frequency.unwrap()
            ));
        }
    }
    report(6, ok, &format!("limiting distribution not rejected: {}", lines.join("; ")), t);
    assert!(ok, "{lines:#?}");
}

#[test]
fn criterion_07_total_mass() {
    let t = Instant::now();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for p in [2u64, 3] {
        for u in [0u32, 1] {
            let m = CLMeasure::new(pr(p), u);
            let err = (m.total_mass_partial_sum(20) - 1.0 / m.product().value).abs();
            worst = worst.max(err);
            ok &= err <= 1e-3;
        }
    }
    report(7, ok, &format!("mass up to size 20 within {worst:.2e} of the inverse product"), t);
    assert!(ok);
}

#[test]
fn criterion_08a_saturation_single_entry() {
    let t = Instant::now();
    let r = run_saturation_sweep(&config(2, 2, 1, 0, 8000, 100_000), &[2, 4, 6, 8], WORKERS).unwrap();
    let ok = [2, 4, 6, 8]
        .iter()
        .all(|e| r.check(&format!("saturation_exact[e={e}]")).is_some_and(|c| c.passed))
        && r.check("saturation_nonincreasing").is_some_and(|c| c.passed);
    let fractions: Vec<f64> = r.saturation_sweep.as_ref().unwrap().iter().map(|row| row.fraction.unwrap()).collect();
    report(8, ok, &format!("n=1 saturation fractions {fractions:?} within 3 sigma of 2^-e"), t);
    assert!(ok, "{:?}", r.checks);
}

/// Probability under the limiting measure that the largest cyclic factor
/// has exponent at least `e`.
fn limiting_exponent_tail(p: u64, e: u32) -> f64 {
    let m = CLMeasure::new(pr(p), 0);
    let below: f64 = padic_coker::partition::enumerate_partitions(30)
        .iter()
        .filter(|l| l.largest() < e)
        .map(|l| m.limiting_probability(l))
        .sum();
    1.0 - below
}

#[test]
fn criterion_08b_saturation_square() {
    let t = Instant::now();
    let r = run_saturation_sweep(&config(2, 6, 4, 0, 8001, 100_000), &[6], WORKERS).unwrap();
    let f = r.saturation_sweep.as_ref().unwrap()[0].fraction.unwrap();
    let ok = f < 1e-3;
    report(
        8,
        ok,
        &format!(
            "n=4, e=6 saturation fraction {f:.4e} (bound 1e-3; limiting P(lambda_1 >= 6) = {:.4e})",
            limiting_exponent_tail(2, 6)
        ),
        t,
    );
    assert!(ok, "saturation fraction {f} is not below 1e-3");
}

#[test]
fn criterion_09_multiprime_independence() {
    let t = Instant::now();
    let primes = vec![PrimePrecision { p: pr(2), e: 10 }, PrimePrecision { p: pr(3), e: 10 }];
    let spec = SampleSpec::multi(primes, 10, 0, 9000, 100_000).unwrap();
    let cfg = ExperimentConfig::new(spec);
    let r = run_multiprime_experiment(&cfg, &[Partition::trivial(), Partition::trivial()], WORKERS).unwrap();
    let c = r.check("joint_frequency_3sigma").unwrap();
    let m = r.multiprime.as_ref().unwrap();
    let single: f64 = [2u64, 3].iter().map(|&p| CLMeasure::new(pr(p), 0).product().value).product();
    let ok = c.passed && (m.joint_theory - single).abs() < 1e-12;
    report(9, ok, &format!("joint trivial torsion at P={{2,3}}: {}", c.detail), t);
    assert!(ok, "{}", c.detail);
}

#[test]
fn criterion_10_reproducibility() {
    let t = Instant::now();
    let mut cfg = config(3, 10, 12, 1, 10_000, 20_000);
    cfg.saturation_policy = SaturationPolicy::EscalatePrecision;
    let runs: Vec<String> = [1, 4, 16]
        .iter()
        .map(|&w| run_distribution_experiment(&cfg, w).unwrap().deterministic_json().unwrap())
        .collect();
    let multi_cfg = ExperimentConfig::new(
        SampleSpec::multi(
            vec![PrimePrecision { p: pr(2), e: 8 }, PrimePrecision { p: pr(5), e: 4 }],
            6,
            1,
            10_001,
            5_000,
        )
        .unwrap(),
    );
    let multi: Vec<String> = [1, 4, 16]
        .iter()
        .map(|&w| {
            run_multiprime_experiment(&multi_cfg, &[Partition::trivial(), Partition::trivial()], w)
                .unwrap()
                .deterministic_json()
                .unwrap()
        })
        .collect();
    let ok = runs.windows(2).all(|w| w[0] == w[1]) && multi.windows(2).all(|w| w[0] == w[1]);
    report(10, ok, "JSON reports identical across 1, 4 and 16 workers", t);
    assert!(ok);
}
