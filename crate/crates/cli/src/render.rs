//! Plain-text tables and the CSV forms not covered by the library.

use std::io::{self, Write};

use padic_coker::experiment::{BinRow, ExperimentReport};
use padic_coker::measure::MeasureTable;
use padic_coker::verify::VerifyOutcome;

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn measure<W: Write>(out: &mut W, t: &MeasureTable) -> io::Result<()> {
    writeln!(
        out,
        "p = {}, u = {}: product {:.12} ({} factors, relative tail <= {:.1e})",
        t.p, t.u, t.product.value, t.product.factors, t.product.relative_tail_bound
    )?;
    writeln!(out, "{:<16} {:>14} {:>14}", "lambda", "probability", "cumulative")?;
    for r in &t.rows {
        writeln!(out, "{:<16} {:>14.10} {:>14.10}", r.partition.label(), r.probability, r.cumulative)?;
    }
    writeln!(out, "tail mass (|lambda| > {}): {:.10}", t.max_size, t.tail_mass)
}

pub fn measure_csv<W: Write>(out: &mut W, t: &MeasureTable) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "size", "probability", "cumulative"]).map_err(csv_err)?;
    for r in &t.rows {
        w.write_record([
            r.partition.label(),
            r.partition.size().to_string(),
            r.probability.to_string(),
            r.cumulative.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn verify<W: Write>(out: &mut W, outcomes: &[VerifyOutcome]) -> io::Result<()> {
    for o in outcomes {
        writeln!(
            out,
            "[{}] {} ({} instances{})",
            if o.passed() { "PASS" } else { "FAIL" },
            o.name,
            o.instances,
            if o.skipped > 0 { format!(", {} skipped", o.skipped) } else { String::new() }
        )?;
        for m in o.mismatches.iter().take(10) {
            writeln!(out, "    {m}")?;
        }
        if o.mismatches.len() > 10 {
            writeln!(out, "    ... {} more", o.mismatches.len() - 10)?;
        }
    }
    Ok(())
}

pub fn verify_csv<W: Write>(out: &mut W, outcomes: &[VerifyOutcome]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "passed", "instances", "skipped", "mismatches"]).map_err(csv_err)?;
    for o in outcomes {
        w.write_record([
            o.name.clone(),
            o.passed().to_string(),
            o.instances.to_string(),
            o.skipped.to_string(),
            o.mismatches.len().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

fn bins<W: Write>(out: &mut W, rows: &[BinRow]) -> io::Result<()> {
    writeln!(
        out,
        "{:<20} {:>9} {:>10} {:>10} {:>23}",
        "bin", "observed", "frequency", "theory", "wilson 99%"
    )?;
    for b in rows {
        let interval = b.wilson_99.map_or_else(|| "-".into(), |(lo, hi)| format!("[{lo:.5}, {hi:.5}]"));
        writeln!(
            out,
            "{:<20} {:>9} {:>10} {:>10.6} {:>23}",
            b.bin,
            b.observed,
            opt(b.frequency),
            b.theory,
            interval
        )?;
    }
    Ok(())
}

pub fn report<W: Write>(out: &mut W, r: &ExperimentReport) -> io::Result<()> {
    if let Some(inv) = &r.invocation {
        writeln!(out, "# {inv}")?;
    }
    let primes: Vec<String> = r.config.spec.primes.iter().map(|pp| format!("{}^{}", pp.p, pp.e)).collect();
    writeln!(
        out,
        "moduli {}, n = {}, u = {}, seed = {}, samples {} (used {}, saturated {}, escalated {}, discarded {})",
        primes.join(" x "),
        r.config.spec.n,
        r.config.spec.u,
        r.config.spec.seed,
        r.samples.total,
        r.samples.used,
        r.samples.saturated,
        r.samples.escalated,
        r.samples.discarded
    )?;
    if let Some(d) = &r.distribution {
        bins(out, &d.bins)?;
        if let Some(c) = &d.chi_square {
            writeln!(
                out,
                "chi-square {:.3} on {} df, p-value {:.4}",
                c.statistic, c.degrees_of_freedom, c.p_value
            )?;
        }
        if let Some(tv) = d.total_variation {
            writeln!(out, "total variation over tracked bins: {tv:.5}")?;
        }
    }
    if let Some(rows) = &r.moments {
        writeln!(
            out,
            "{:<10} {:>22} {:>12} {:>10} {:>22} {:>10}",
            "mu", "coker mean", "exact", "limit", "torsion mean", "limit"
        )?;
        for m in rows {
            let pm = |x: Option<f64>, s: Option<f64>| match (x, s) {
                (Some(x), Some(s)) => format!("{x:.5} ± {s:.5}"),
                _ => "-".into(),
            };
            writeln!(
                out,
                "{:<10} {:>22} {:>12} {:>10.6} {:>22} {:>10.6}",
                m.mu.label(),
                pm(m.coker_mean, m.coker_std_error),
                m.coker_exact,
                m.coker_limit,
                pm(m.torsion_mean, m.torsion_std_error),
                m.torsion_limit
            )?;
        }
    }
    if let Some(rows) = &r.saturation_sweep {
        writeln!(out, "{:>4} {:>10} {:>10} {:>12}", "e", "samples", "saturated", "fraction")?;
        for s in rows {
            writeln!(out, "{:>4} {:>10} {:>10} {:>12}", s.e, s.samples, s.saturated, opt(s.fraction))?;
        }
    }
    if let Some(rows) = &r.convergence {
        writeln!(out, "{:>4} {:>10} {:>12} {:>12}", "n", "samples", "TV", "trivial")?;
        for c in rows {
            writeln!(
                out,
                "{:>4} {:>10} {:>12} {:>12}",
                c.n,
                c.samples,
                opt(c.total_variation),
                opt(c.trivial_frequency)
            )?;
        }
    }
    if let Some(m) = &r.multiprime {
        bins(out, &m.joint_bins)?;
        let target: Vec<String> = m.target.iter().map(|t| t.label()).collect();
        writeln!(
            out,
            "joint ({}): {} vs product {:.6}",
            target.join(" | "),
            opt(m.joint_frequency),
            m.joint_theory
        )?;
    }
    for c in &r.checks {
        writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    for w in &r.warnings {
        writeln!(out, "warning: {w}")?;
    }
    writeln!(
        out,
        "{} workers, {:.2}s, {:.0} samples/s",
        r.execution.workers, r.execution.wall_clock_secs, r.execution.samples_per_sec
    )
}
