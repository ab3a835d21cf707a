//! `mallows`: sampling, exact tables and seeded verification experiments for
//! Mallows permutations and their binary search trees.
//!
//! Exit codes: 0 on success, 1 when a `verify` verdict fails, 2 on
//! configuration errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mallows_trees::analytics;
use mallows_trees::experiments::{
    default_thresholds, run_experiment, ExperimentConfig, Schedule,
};
use mallows_trees::par::run_with_threads;
use mallows_trees::perm::{sample_mallows, sample_mallows_bmodel};
use mallows_trees::rng::derive_rng;
use mallows_trees::size_process::{generate_tree, sample_height};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "mallows", version, about = "Mallows permutations, their search trees, and verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Mallows permutations (one per row).
    SamplePerm {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        /// Master seed; required for reproducibility.
        #[arg(long)]
        seed: u64,
        /// Number of permutations to draw.
        #[arg(long, default_value = "1")]
        count: u64,
        /// Use the infinite-stream (b-model) sampler instead of the
        /// truncated-geometric insertion sampler.
        #[arg(long)]
        bmodel: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample one Mallows tree and print it as nested JSON.
    SampleTree {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact distributions and analytic quantities (no randomness).
    Exact {
        #[command(subcommand)]
        what: ExactCmd,
    },
    /// Run a verification experiment; exits 1 if any verdict fails.
    Verify {
        /// Experiment id, e.g. poisson, rd-clt, height-ratio, mean-variance.
        experiment: String,
        /// Parameter schedule as kind:param (constant:0.5,
        /// one-minus-n-pow:0.333, one-minus-c-log-over-n:4, lambda-over-n:2).
        #[arg(long, conflicts_with_all = ["q", "lambda"])]
        schedule: Option<String>,
        /// Shorthand for --schedule constant:Q.
        #[arg(long)]
        q: Option<f64>,
        /// Shorthand for --schedule lambda-over-n:LAMBDA.
        #[arg(long, conflicts_with = "q")]
        lambda: Option<f64>,
        /// Grid of n values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Worker threads (default: all cores). Output does not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Override a verdict threshold, as name=value. Repeatable.
        #[arg(long = "threshold")]
        thresholds: Vec<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Time tree-height sampling at a given size (result to stdout, timing to
    /// stderr).
    Bench {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PmfKind {
    Split,
    RightDepth,
    Height,
    Threshold,
}

#[derive(Subcommand)]
enum ExactCmd {
    /// Exact probability table (columns k, mass).
    Pmf {
        #[arg(long, value_enum)]
        kind: PmfKind,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        /// Threshold parameter (kind=threshold only).
        #[arg(long)]
        s: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Bivariate record/maximum generating function at a point.
    Mgf {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Factorial-sum mean μ_α of the record count.
    Mu {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value = "1")]
        alpha: u32,
    },
    /// Raw moments E[R^α] for α = 1..alpha-max.
    Moments {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long = "alpha-max", default_value = "4")]
        alpha_max: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sandwich bounds on μ_α and Chernoff bounds on the record count tails.
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value = "1")]
        alpha: u32,
        /// Split point of the sandwich (default n).
        #[arg(long)]
        m: Option<u64>,
        /// Tail ratio for the Chernoff bounds.
        #[arg(long, default_value = "2.0")]
        c: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn check_q(q: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(format!("q = {q} outside [0, 1]"))
    }
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), String> {
    match &out.output {
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string())?;
        }
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(())
}

fn csv_meta(seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# seed={s} version={VERSION}\n"),
        None => format!("# seed=none version={VERSION}\n"),
    }
}

fn run(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::SamplePerm { n, q, seed, count, bmodel, out } => {
            check_q(q)?;
            let mut text = String::new();
            let mut rows = Vec::new();
            for t in 0..count {
                let mut rng = derive_rng(seed, t);
                let perm = if bmodel {
                    sample_mallows_bmodel(n as usize, q, &mut rng)
                } else {
                    sample_mallows(n as usize, q, &mut rng)
                };
                rows.push(perm.values().to_vec());
            }
            match out.format {
                Format::Csv => {
                    text.push_str("trial,values\n");
                    for (t, v) in rows.iter().enumerate() {
                        let joined = v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
                        writeln!(text, "{t},{joined}").unwrap();
                    }
                    text.push_str(&csv_meta(Some(seed)));
                }
                Format::Json => {
                    let val = serde_json::json!({
                        "n": n, "q": q, "seed": seed, "version": VERSION,
                        "permutations": rows,
                    });
                    text = serde_json::to_string_pretty(&val).unwrap();
                    text.push('\n');
                }
            }
            emit(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SampleTree { n, q, seed, out } => {
            check_q(q)?;
            let mut rng = derive_rng(seed, 0);
            let tree = generate_tree(n, q, &mut rng);
            // Trees are JSON-only; --format csv is rejected rather than
            // silently reinterpreted.
            if matches!(out.format, Format::Csv) {
                return Err("sample-tree only supports --format json".into());
            }
            let mut text = tree.to_json();
            text.push('\n');
            emit(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Exact { what } => run_exact(what),
        Command::Verify {
            experiment,
            schedule,
            q,
            lambda,
            n,
            trials,
            seed,
            threads,
            thresholds,
            out,
        } => {
            let schedule = match (schedule, q, lambda) {
                (Some(s), None, None) => Schedule::parse(&s).map_err(|e| e.to_string())?,
                (None, Some(q), None) => {
                    check_q(q)?;
                    Schedule::Constant(q)
                }
                (None, None, Some(l)) => Schedule::LambdaOverN(l),
                _ => return Err("specify exactly one of --schedule, --q, --lambda".into()),
            };
            let mut config =
                ExperimentConfig::new(schedule, n, trials, seed).map_err(|e| e.to_string())?;
            config.thresholds = default_thresholds(&experiment);
            for spec in &thresholds {
                let (name, value) = spec
                    .split_once('=')
                    .ok_or_else(|| format!("threshold '{spec}' is not name=value"))?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| format!("bad threshold value in '{spec}'"))?;
                config.thresholds.insert(name.to_string(), value);
            }
            let summary = run_with_threads(threads, || run_experiment(&experiment, &config))
                .map_err(|e| e.to_string())?;
            let text = match out.format {
                Format::Csv => summary.to_csv(),
                Format::Json => {
                    let mut t = serde_json::to_string_pretty(&summary.to_json()).unwrap();
                    t.push('\n');
                    t
                }
            };
            emit(&out, &text)?;
            if summary.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Bench { n, q, trials, seed, threads } => {
            check_q(q)?;
            let start = std::time::Instant::now();
            let heights = run_with_threads(threads, || {
                mallows_trees::par::par_map_trials(trials, |t| {
                    let mut rng = derive_rng(seed, t);
                    sample_height(n, q, &mut rng)
                })
            });
            let elapsed = start.elapsed().as_secs_f64();
            let mean = heights.iter().sum::<i64>() as f64 / trials as f64;
            eprintln!("{trials} trials at n={n} in {elapsed:.3}s ({:.1} trials/s)", trials as f64 / elapsed);
            println!("{}", serde_json::json!({
                "n": n, "q": q, "trials": trials, "seed": seed,
                "mean_height": mean, "version": VERSION,
            }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_exact(what: ExactCmd) -> Result<ExitCode, String> {
    match what {
        ExactCmd::Pmf { kind, n, q, s, out } => {
            check_q(q)?;
            let pmf = match kind {
                PmfKind::Split => {
                    mallows_trees::oracle::exact_split_pmf(n as usize, q).map_err(|e| e.to_string())?
                }
                PmfKind::RightDepth => analytics::record_pmf(n, q).map_err(|e| e.to_string())?,
                PmfKind::Height => mallows_trees::oracle::exact_height_pmf(n as usize, q)
                    .map_err(|e| e.to_string())?,
                PmfKind::Threshold => {
                    let s = s.ok_or("kind=threshold requires --s")?;
                    analytics::threshold_pmf(n, s, q).map_err(|e| e.to_string())?
                }
            };
            let text = match out.format {
                Format::Csv => {
                    let mut t = String::from("k,mass\n");
                    for (k, p) in pmf.iter() {
                        writeln!(t, "{k},{p:.17e}").unwrap();
                    }
                    t.push_str(&csv_meta(None));
                    t
                }
                Format::Json => {
                    let rows: Vec<_> = pmf.iter().map(|(k, p)| serde_json::json!([k, p])).collect();
                    let mut t = serde_json::to_string_pretty(&serde_json::json!({
                        "n": n, "q": q, "version": VERSION, "pmf": rows,
                        "mean": pmf.mean(), "variance": pmf.variance(),
                    }))
                    .unwrap();
                    t.push('\n');
                    t
                }
            };
            emit(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        ExactCmd::Mgf { n, q, x, y } => {
            check_q(q)?;
            let v = analytics::record_mgf(n, q, x, y).map_err(|e| e.to_string())?;
            println!("{v:.17e}");
            Ok(ExitCode::SUCCESS)
        }
        ExactCmd::Mu { n, q, alpha } => {
            check_q(q)?;
            println!("{:.17e}", analytics::mu_alpha(n, q, alpha));
            Ok(ExitCode::SUCCESS)
        }
        ExactCmd::Moments { n, q, alpha_max, out } => {
            check_q(q)?;
            let text = match out.format {
                Format::Csv => {
                    let mut t = String::from("alpha,moment\n");
                    for a in 1..=alpha_max {
                        writeln!(t, "{a},{:.17e}", analytics::record_moment(n, q, a)).unwrap();
                    }
                    t.push_str(&csv_meta(None));
                    t
                }
                Format::Json => {
                    let rows: Vec<_> = (1..=alpha_max)
                        .map(|a| serde_json::json!([a, analytics::record_moment(n, q, a)]))
                        .collect();
                    let mut t = serde_json::to_string_pretty(&serde_json::json!({
                        "n": n, "q": q, "version": VERSION, "moments": rows,
                    }))
                    .unwrap();
                    t.push('\n');
                    t
                }
            };
            emit(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        ExactCmd::Bounds { n, q, alpha, m, c } => {
            check_q(q)?;
            if c <= 1.0 {
                return Err("chernoff ratio c must exceed 1".into());
            }
            let m = m.unwrap_or(n).clamp(1, n);
            let (lo, hi) = analytics::mu_bounds(n, q, alpha, m);
            let mu = analytics::mu_alpha(n, q, alpha);
            let (upper, lower) = analytics::chernoff_bounds(n, q, c);
            println!("{}", serde_json::json!({
                "n": n, "q": q, "alpha": alpha, "m": m, "c": c, "version": VERSION,
                "mu": mu, "mu_lower": lo, "mu_upper": hi,
                "p_above_c_mu": upper, "p_below_mu_over_c": lower,
            }));
            Ok(ExitCode::SUCCESS)
        }
    }
}
