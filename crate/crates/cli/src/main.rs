//! `coker`: limiting measures, cokernel simulations, moment checks, oracle
//! verification and sweeps from the command line.
//!
//! Exit codes: 0 success, 1 a check failed (with `--assert`, or any failed
//! `verify` check), 2 usage or configuration error.

mod render;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use padic_coker::experiment::{
    run_convergence_sweep, run_distribution_experiment, run_moment_experiment, run_multiprime_experiment,
    run_saturation_sweep, ExperimentConfig, ExperimentReport, SaturationPolicy,
};
use padic_coker::measure::DEFAULT_PRODUCT_TOLERANCE;
use padic_coker::oracle::DEFAULT_ORDER_CAP;
use padic_coker::sampler::PrimePrecision;
use padic_coker::verify::{verify_counts, verify_duality, verify_free_surjections, verify_integer_snf, VerifyOutcome};
use padic_coker::{CLMeasure, Error, Partition, Prime, SampleSpec};

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "COKER_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "coker", version, about = "Cokernel statistics of random matrices over Z_p")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Write output to this file instead of stdout
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,

    /// Worker threads; affects wall-clock time only. Defaults to $COKER_WORKERS,
    /// else the number of CPUs.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limiting probabilities of the Cohen-Lenstra u-measure
    Measure {
        #[arg(short, value_parser = parse_prime)]
        p: Prime,
        #[arg(short, default_value_t = 0)]
        u: u32,
        /// Largest |lambda| listed
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(0..=20))]
        max_size: u32,
        /// Truncation tolerance of the infinite product, in (0, 1e-6]
        #[arg(long, default_value_t = DEFAULT_PRODUCT_TOLERANCE)]
        tolerance: f64,
    },
    /// Sample cokernels and compare their distribution with the limit
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Surjection moments against exact finite-n and limiting values
    Moments {
        #[command(flatten)]
        run: RunArgs,
        /// Target group type, e.g. 1 or 2,1 (repeatable)
        #[arg(long = "mu", default_value = "1")]
        mus: Vec<Partition>,
    },
    /// Closed-form counts against brute force, duality, and Smith forms
    /// against integer SNF
    Verify {
        /// Primes to check (comma-separated)
        #[arg(short, value_parser = parse_prime, value_delimiter = ',', default_value = "2,3,5")]
        p: Vec<Prime>,
        /// Largest group order enumerated explicitly
        #[arg(long, default_value_t = 64)]
        max_group_order: u64,
        /// Largest |lambda| for the duality check
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(0..=20))]
        max_size: u32,
        /// Random integer matrices for the Smith form check
        #[arg(long, default_value_t = 1000)]
        snf_count: u64,
        /// Precision of the Smith form check
        #[arg(short, default_value_t = 12)]
        e: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Saturation or convergence sweeps
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Joint cokernel statistics at several primes
    Multiprime {
        #[command(flatten)]
        run: RunArgs,
        /// Primes (comma-separated); overrides -p
        #[arg(long, value_parser = parse_prime, value_delimiter = ',', required = true)]
        primes: Vec<Prime>,
        /// Target torsion type per prime, e.g. "trivial" (repeatable);
        /// defaults to trivial at every prime
        #[arg(long = "target")]
        targets: Vec<Partition>,
    },
}

#[derive(Subcommand, Debug)]
enum SweepCommand {
    /// Saturation fraction per precision
    Saturation {
        #[command(flatten)]
        run: RunArgs,
        /// Precisions (comma-separated, increasing)
        #[arg(long = "e", value_delimiter = ',', default_value = "2,4,6,8")]
        e_list: Vec<u32>,
    },
    /// Total-variation distance to the limit per matrix size
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Matrix sizes n (comma-separated, increasing)
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,12")]
        n_list: Vec<usize>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(short, value_parser = parse_prime, default_value = "2")]
    p: Prime,
    #[arg(short, default_value_t = 0)]
    u: usize,
    #[arg(short, default_value_t = 10)]
    n: usize,
    /// Working precision: entries live in Z/p^e
    #[arg(short, default_value_t = 10)]
    e: u32,
    /// Number of samples
    #[arg(short = 'N', long = "samples", default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest |lambda| tallied in its own bin
    #[arg(long, default_value_t = 8)]
    tracked_max_size: u32,
    #[arg(long, default_value = "escalate-precision", value_parser = parse_policy)]
    policy: SaturationPolicy,
    /// Significance level of the goodness-of-fit check
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Exit with status 1 if any check fails
    #[arg(long)]
    assert: bool,
}

impl RunArgs {
    fn config(&self, primes: &[Prime]) -> Result<ExperimentConfig, Error> {
        let primes = primes.iter().map(|&p| PrimePrecision { p, e: self.e }).collect();
        let spec = SampleSpec::multi(primes, self.n, self.u, self.seed, self.samples)?;
        let cfg = ExperimentConfig {
            tracked_max_size: self.tracked_max_size,
            saturation_policy: self.policy,
            alpha: self.alpha,
            ..ExperimentConfig::new(spec)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_prime(s: &str) -> Result<Prime, String> {
    let v: u64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    Prime::new(v).map_err(|e| e.to_string())
}

fn parse_policy(s: &str) -> Result<SaturationPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// The command line as typed, minus `--workers`, which does not change
/// results.
fn invocation() -> String {
    let mut out = vec!["coker".to_string()];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--workers" {
            args.next();
            continue;
        }
        if a.starts_with("--workers=") {
            continue;
        }
        if a.is_empty() || a.contains(|c: char| c.is_whitespace() || c == '"' || c == '\'') {
            out.push(format!("'{}'", a.replace('\'', r"'\''")));
        } else {
            out.push(a);
        }
    }
    out.join(" ")
}

fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn sink(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_report(cli: &Cli, mut report: ExperimentReport, assert: bool) -> Result<(), Failure> {
    report.invocation = Some(invocation());
    let mut out = sink(&cli.output)?;
    match cli.format {
        Format::Json => writeln!(out, "{}", report.to_json()?)?,
        Format::Csv => report.write_csv(&mut out)?,
        Format::Table => render::report(&mut out, &report)?,
    }
    out.flush()?;
    if assert && !report.all_checks_passed() {
        return Err(Failure::Checks);
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let workers = match cli.workers {
        Some(0) => return Err(Failure::Usage("--workers must be at least 1".into())),
        Some(w) => w,
        None => default_workers(),
    };
    match &cli.command {
        Command::Measure { p, u, max_size, tolerance } => {
            let m = CLMeasure::with_tolerance(*p, *u, *tolerance, *max_size)?;
            let table = m.table();
            let mut out = sink(&cli.output)?;
            match cli.format {
                Format::Json => {
                    let s = serde_json::to_string_pretty(&table).map_err(|e| Failure::Usage(e.to_string()))?;
                    writeln!(out, "{s}")?;
                }
                Format::Csv => render::measure_csv(&mut out, &table)?,
                Format::Table => render::measure(&mut out, &table)?,
            }
            out.flush()?;
            Ok(())
        }
        Command::Simulate { run } => {
            let cfg = run.config(&[run.p])?;
            emit_report(cli, run_distribution_experiment(&cfg, workers)?, run.assert)
        }
        Command::Moments { run, mus } => {
            let cfg = run.config(&[run.p])?;
            emit_report(cli, run_moment_experiment(&cfg, mus, workers)?, run.assert)
        }
        Command::Sweep(SweepCommand::Saturation { run, e_list }) => {
            let cfg = run.config(&[run.p])?;
            emit_report(cli, run_saturation_sweep(&cfg, e_list, workers)?, run.assert)
        }
        Command::Sweep(SweepCommand::Convergence { run, n_list }) => {
            let cfg = run.config(&[run.p])?;
            emit_report(cli, run_convergence_sweep(&cfg, n_list, workers)?, run.assert)
        }
        Command::Multiprime { run, primes, targets } => {
            let cfg = run.config(primes)?;
            let targets = if targets.is_empty() {
                vec![Partition::trivial(); primes.len()]
            } else {
                targets.clone()
            };
            emit_report(cli, run_multiprime_experiment(&cfg, &targets, workers)?, run.assert)
        }
        Command::Verify {
            p,
            max_group_order,
            max_size,
            snf_count,
            e,
            seed,
        } => {
            if *max_group_order > DEFAULT_ORDER_CAP as u64 {
                return Err(Failure::Usage(format!(
                    "--max-group-order {max_group_order} exceeds {DEFAULT_ORDER_CAP}"
                )));
            }
            // validates the Smith form modulus for every prime up front
            for &q in p {
                SampleSpec::single(q, *e, 1, 0, 0, 0)?;
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let outcomes: Vec<VerifyOutcome> = pool.install(|| {
                let mut v = Vec::new();
                for &q in p {
                    v.extend(verify_counts(q, *max_group_order));
                    v.push(verify_free_surjections(q, *max_group_order));
                    v.push(verify_duality(q, *max_size));
                }
                v.push(verify_integer_snf(p, *e, *snf_count, *seed));
                v
            });
            let mut out = sink(&cli.output)?;
            match cli.format {
                Format::Json => {
                    let s = serde_json::to_string_pretty(&outcomes).map_err(|e| Failure::Usage(e.to_string()))?;
                    writeln!(out, "{s}")?;
                }
                Format::Csv => render::verify_csv(&mut out, &outcomes)?,
                Format::Table => render::verify(&mut out, &outcomes)?,
            }
            out.flush()?;
            if outcomes.iter().all(VerifyOutcome::passed) {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("coker: one or more checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("coker: {msg}");
            ExitCode::from(2)
        }
    }
}
