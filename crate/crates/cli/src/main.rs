//! Batch frontend for the mixing test pipeline.
//!
//! Every randomized subcommand takes an explicit `--seed`, and identical
//! flags always produce byte-identical output, whatever the thread count.
//! Exit code 0 means the pipeline completed; verdicts live in the JSON, not
//! in exit codes.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use mixcheck::analytic::{
    bound_gamma, bound_general, bound_normal, expected_lambda2_beta, lambda2_two_region, Branch,
    TwoRegionCase, Validity,
};
use mixcheck::critical_values::{
    ecdf, write_ecdf_csv, write_sample_csv, CalibrationConfig, CriticalValues, SampleTransform,
};
use mixcheck::matrices::PermConstraint;
use mixcheck::mixing_test::{froyland_entropy, run_test_on_counts, suggest_partition_count};
use mixcheck::protocols::{simulate, ProtocolSpec};
use mixcheck::rng_dist::{DistributionSpec, SeedSpec};
use mixcheck::ulam::{
    empirical_matrix, load_counts, load_transitions, transition_counts, write_transitions,
    PartitionSpec,
};
use mixcheck::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mixcheck",
    about = "Spectral classification of stirring protocols",
    version
)]
struct Cli {
    /// Worker thread cap (fallback: the MIXCHECK_THREADS variable).
    /// Parallelism never changes any output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the two decision thresholds by Monte Carlo.
    CriticalValues {
        /// Number of partition regions (at least 3).
        #[arg(long)]
        n: usize,
        /// Monte Carlo sample size.
        #[arg(long = "N")]
        num_samples: usize,
        /// Component distribution: normal, gamma:SHAPE,SCALE, beta:A,B,
        /// uniform:LO,HI, or const:C.
        #[arg(long)]
        dist: String,
        /// Risk level for the near-1 threshold.
        #[arg(long, default_value_t = 0.05)]
        alpha1: f64,
        /// Risk level for the center-disk threshold.
        #[arg(long, default_value_t = 0.05)]
        alpha2: f64,
        /// Permutation constraint for the c1 null sample: identity, any, or
        /// min-cycles:K.
        #[arg(long, default_value = "identity")]
        c1_perms: String,
        /// Permutation constraint for the c2 sample.
        #[arg(long, default_value = "any")]
        c2_perms: String,
        /// Master seed; runs are reproducible bit for bit.
        #[arg(long)]
        seed: u64,
        /// Seed stream, for independent replications under one master seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Destination for the thresholds JSON (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Export the c1 eigenvalue sample as CSV.
        #[arg(long)]
        c1_sample_csv: Option<PathBuf>,
        /// Export the c2 eigenvalue sample as CSV.
        #[arg(long)]
        c2_sample_csv: Option<PathBuf>,
        /// Export the ECDF of |lambda2 - 1| under the c1 sample.
        #[arg(long)]
        c1_ecdf_csv: Option<PathBuf>,
        /// Export the ECDF of |lambda2| under the c2 sample.
        #[arg(long)]
        c2_ecdf_csv: Option<PathBuf>,
    },
    /// Classify observed transitions against calibrated thresholds.
    Test {
        /// start,end transition CSV (as produced by `simulate`).
        #[arg(long)]
        transitions: Option<PathBuf>,
        /// Headerless square count matrix CSV instead of raw transitions.
        #[arg(long, conflicts_with = "transitions")]
        counts: Option<PathBuf>,
        /// Thresholds JSON from `critical-values`.
        #[arg(long)]
        critical_values: PathBuf,
        /// Mixing-rate target for weak-mixing verdicts.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Destination for the report JSON (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate transition data from a reference protocol.
    Simulate {
        /// identity, rotation:T (decimal or P/Q), cat, or baker.
        #[arg(long)]
        protocol: String,
        /// Partition: N for the interval, NXxNY for the torus.
        #[arg(long)]
        grid: String,
        /// Uniform start points drawn in each region.
        #[arg(long)]
        points_per_region: usize,
        /// Master seed; runs are reproducible bit for bit.
        #[arg(long)]
        seed: u64,
        /// Seed stream, for independent replications under one master seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Destination for the start,end CSV (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate closed-form deviation bounds over a range of n.
    Bounds {
        /// Which bound: general, normal, or gamma.
        #[arg(long)]
        kind: String,
        /// Single n or inclusive range A..B.
        #[arg(long)]
        n: String,
        /// Gamma shape (gamma kind only).
        #[arg(long)]
        alpha: Option<f64>,
        /// Component distribution (general kind only).
        #[arg(long)]
        dist: Option<String>,
        /// Destination for the CSV table (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Entropy of observed transitions and a partition-size suggestion.
    Entropy {
        /// start,end transition CSV; needs --n.
        #[arg(long, requires = "n")]
        transitions: Option<PathBuf>,
        /// Headerless square count matrix CSV.
        #[arg(long, conflicts_with_all = ["transitions", "n"])]
        counts: Option<PathBuf>,
        /// Number of regions for --transitions input.
        #[arg(long)]
        n: Option<usize>,
        /// Destination for the JSON (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Closed-form two-region eigenvalues, exact or in expectation.
    TwoRegion {
        /// First unit-vector component, in [-1, 1].
        #[arg(long)]
        v1: Option<f64>,
        /// Beta parameters A,B for a random first component.
        #[arg(long, conflicts_with = "v1")]
        beta: Option<String>,
        /// plus (identity permutation) or minus (swap).
        #[arg(long)]
        branch: String,
        /// Destination for the JSON (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::CriticalValues {
            n,
            num_samples,
            dist,
            alpha1,
            alpha2,
            c1_perms,
            c2_perms,
            seed,
            stream,
            output,
            c1_sample_csv,
            c2_sample_csv,
            c1_ecdf_csv,
            c2_ecdf_csv,
        } => {
            let config = CalibrationConfig {
                n,
                num_samples,
                dist: dist.parse()?,
                c1_constraint: parse_constraint(&c1_perms, n)?,
                c2_constraint: parse_constraint(&c2_perms, n)?,
                alpha1,
                alpha2,
                seed: SeedSpec {
                    master_seed: seed,
                    stream_index: stream,
                },
            };
            let (cv, sample1, sample2) = config.estimate_with_samples()?;
            if let Some(path) = c1_sample_csv {
                write_sample_csv(&sample1, File::create(path)?)?;
            }
            if let Some(path) = c2_sample_csv {
                write_sample_csv(&sample2, File::create(path)?)?;
            }
            if let Some(path) = c1_ecdf_csv {
                let points = ecdf(&sample1, SampleTransform::DistanceFromOne);
                write_ecdf_csv(&points, File::create(path)?)?;
            }
            if let Some(path) = c2_ecdf_csv {
                let points = ecdf(&sample2, SampleTransform::Modulus);
                write_ecdf_csv(&points, File::create(path)?)?;
            }
            emit(output.as_ref(), &(cv.to_json()? + "\n"))
        }
        Command::Test {
            transitions,
            counts,
            critical_values,
            epsilon,
            output,
        } => {
            let cv = CriticalValues::from_json(&std::fs::read_to_string(critical_values)?)?;
            let counts = match (transitions, counts) {
                (Some(path), None) => {
                    transition_counts(&load_transitions(File::open(path)?, cv.n)?)
                }
                (None, Some(path)) => load_counts(File::open(path)?)?,
                _ => {
                    return Err(Error::Parameter(
                        "pass exactly one of --transitions or --counts".into(),
                    ))
                }
            };
            let report = run_test_on_counts(&counts, &cv, epsilon)?;
            emit(output.as_ref(), &(report.to_json()? + "\n"))
        }
        Command::Simulate {
            protocol,
            grid,
            points_per_region,
            seed,
            stream,
            output,
        } => {
            let spec: ProtocolSpec = protocol.parse()?;
            let partition: PartitionSpec = grid.parse()?;
            let data = simulate(
                spec,
                &partition,
                points_per_region,
                SeedSpec {
                    master_seed: seed,
                    stream_index: stream,
                },
            )?;
            match output {
                Some(path) => write_transitions(&data, File::create(path)?),
                None => {
                    let mut buf = Vec::new();
                    write_transitions(&data, &mut buf)?;
                    std::io::stdout().write_all(&buf)?;
                    Ok(())
                }
            }
        }
        Command::Bounds {
            kind,
            n,
            alpha,
            dist,
            output,
        } => {
            let rows = bounds_table(&kind, &n, alpha, dist.as_deref())?;
            emit(output.as_ref(), &rows)
        }
        Command::Entropy {
            transitions,
            counts,
            n,
            output,
        } => {
            let counts = match (transitions, counts) {
                (Some(path), None) => {
                    let n = n.ok_or_else(|| {
                        Error::Parameter("--transitions input needs --n".into())
                    })?;
                    transition_counts(&load_transitions(File::open(path)?, n)?)
                }
                (None, Some(path)) => load_counts(File::open(path)?)?,
                _ => {
                    return Err(Error::Parameter(
                        "pass exactly one of --transitions or --counts".into(),
                    ))
                }
            };
            let p_hat = empirical_matrix(&counts)?;
            let entropy = froyland_entropy(&p_hat);
            let value = serde_json::json!({
                "n": p_hat.n(),
                "entropy_nats": entropy,
                "suggested_partition_count": suggest_partition_count(entropy),
            });
            emit(output.as_ref(), &(serde_json::to_string_pretty(&value)? + "\n"))
        }
        Command::TwoRegion {
            v1,
            beta,
            branch,
            output,
        } => {
            let branch: Branch = branch.parse()?;
            let value = match (v1, beta) {
                (Some(v1), None) => {
                    if !(v1.is_finite() && v1.abs() <= 1.0) {
                        return Err(Error::Parameter(format!(
                            "--v1 must lie in [-1, 1], got {v1}"
                        )));
                    }
                    let lambda2 = lambda2_two_region(TwoRegionCase { v1, branch });
                    serde_json::json!({
                        "v1": v1,
                        "branch": branch.to_string(),
                        "lambda2": lambda2,
                    })
                }
                (None, Some(pair)) => {
                    let (alpha, beta) = parse_pair(&pair)?;
                    let expected = expected_lambda2_beta(alpha, beta, branch)?;
                    serde_json::json!({
                        "alpha": alpha,
                        "beta": beta,
                        "branch": branch.to_string(),
                        "expected_lambda2": expected,
                    })
                }
                _ => {
                    return Err(Error::Parameter(
                        "pass exactly one of --v1 or --beta".into(),
                    ))
                }
            };
            emit(output.as_ref(), &(serde_json::to_string_pretty(&value)? + "\n"))
        }
    }
}

/// Install the global rayon pool if a cap was requested by flag or
/// environment. Thread count only affects speed, never output.
fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("MIXCHECK_THREADS") {
            Ok(raw) => Some(raw.parse().map_err(|_| {
                Error::Parameter(format!("MIXCHECK_THREADS must be an integer, got {raw:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// `identity` is shorthand for a permutation forced to n fixed points,
/// which is the n-cycle-minimum constraint at its ceiling.
fn parse_constraint(s: &str, n: usize) -> Result<PermConstraint> {
    if s == "identity" {
        Ok(PermConstraint::MinCycles(n))
    } else {
        s.parse()
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Parameter(format!("expected A,B; got {s:?}")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parameter(format!("bad number {x:?} in pair {s:?}")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn parse_n_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || Error::Parameter(format!("expected a single n or A..B, got {s:?}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let lo: usize = a.trim().parse().map_err(|_| bad())?;
            let hi: usize = b.trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(Error::Parameter(format!("empty range {s:?}")));
            }
            Ok(lo..=hi)
        }
        None => {
            let n: usize = s.trim().parse().map_err(|_| bad())?;
            Ok(n..=n)
        }
    }
}

/// One CSV row per n: `n,value,valid,reason`.
fn bounds_table(kind: &str, n: &str, alpha: Option<f64>, dist: Option<&str>) -> Result<String> {
    let range = parse_n_range(n)?;
    let evaluate: Box<dyn Fn(usize) -> mixcheck::analytic::BoundResult> = match kind {
        "normal" => {
            reject_flag("--alpha", alpha.is_some(), kind)?;
            reject_flag("--dist", dist.is_some(), kind)?;
            Box::new(bound_normal)
        }
        "gamma" => {
            reject_flag("--dist", dist.is_some(), kind)?;
            let alpha = alpha
                .ok_or_else(|| Error::Parameter("the gamma bound needs --alpha".into()))?;
            Box::new(move |n| bound_gamma(n, alpha))
        }
        "general" => {
            reject_flag("--alpha", alpha.is_some(), kind)?;
            let dist: DistributionSpec = dist
                .ok_or_else(|| Error::Parameter("the general bound needs --dist".into()))?
                .parse()?;
            let moments = dist.moments();
            Box::new(move |n| bound_general(n, &moments))
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown bound kind {other:?}; expected general, normal, or gamma"
            )))
        }
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["n", "value", "valid", "reason"])?;
    for n in range {
        let b = evaluate(n);
        let (valid, reason) = match &b.validity {
            Validity::Valid => ("true", String::new()),
            Validity::PreconditionViolated(reason) => ("false", reason.clone()),
        };
        writer.write_record([&n.to_string(), &b.value.to_string(), valid, &reason])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn reject_flag(flag: &str, present: bool, kind: &str) -> Result<()> {
    if present {
        return Err(Error::Parameter(format!(
            "{flag} does not apply to the {kind} bound"
        )));
    }
    Ok(())
}

fn emit(output: Option<&PathBuf>, content: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}
