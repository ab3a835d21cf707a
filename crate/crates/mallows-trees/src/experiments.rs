//! Seeded Monte Carlo experiments: each one turns a limit theorem or exact
//! identity into a desk-scale pass/fail check with declared tolerance bands.
//!
//! Every experiment is a pure function of its configuration: per-trial random
//! streams are derived from `(master seed, stream index)`, trials may run on
//! any number of workers, and aggregation happens in ascending trial order,
//! so output is byte-identical across schedules.

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analytics::{self, PmfTable};
use crate::oracle::{self, OracleError};
use crate::par::par_map_trials;
use crate::record_chain;
use crate::rng::derive_rng;
use crate::size_process;
use crate::stats;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
}

/// How the Mallows parameter depends on `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `q_n = 1 − c·log(n)/n`.
    OneMinusCLogOverN(f64),
    /// `q_n = 1 − n^{−β}`.
    OneMinusNPow(f64),
    /// `q_n = λ/n`.
    LambdaOverN(f64),
}

impl Schedule {
    /// Parses `kind:param`, e.g. `constant:0.5`, `one-minus-n-pow:0.333`,
    /// `one-minus-c-log-over-n:4.0`, `lambda-over-n:2.0`.
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| ExperimentError::Config(format!("schedule '{s}' is not kind:param")))?;
        let p: f64 = param
            .parse()
            .map_err(|_| ExperimentError::Config(format!("bad schedule parameter '{param}'")))?;
        match kind {
            "constant" => Ok(Schedule::Constant(p)),
            "one-minus-c-log-over-n" => Ok(Schedule::OneMinusCLogOverN(p)),
            "one-minus-n-pow" => Ok(Schedule::OneMinusNPow(p)),
            "lambda-over-n" => Ok(Schedule::LambdaOverN(p)),
            _ => Err(ExperimentError::Config(format!("unknown schedule kind '{kind}'"))),
        }
    }

    /// Evaluates `q_n`, rejecting values outside `[0, 1]`.
    pub fn q(&self, n: u64) -> Result<f64, ExperimentError> {
        let q = match *self {
            Schedule::Constant(q) => q,
            Schedule::OneMinusCLogOverN(c) => 1.0 - c * (n as f64).ln() / n as f64,
            Schedule::OneMinusNPow(beta) => 1.0 - (n as f64).powf(-beta),
            Schedule::LambdaOverN(lambda) => lambda / n as f64,
        };
        if !(0.0..=1.0).contains(&q) {
            return Err(ExperimentError::Config(format!(
                "schedule {self} gives q = {q} at n = {n}, outside [0, 1]"
            )));
        }
        Ok(q)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Schedule::Constant(p) => write!(f, "constant:{p}"),
            Schedule::OneMinusCLogOverN(p) => write!(f, "one-minus-c-log-over-n:{p}"),
            Schedule::OneMinusNPow(p) => write!(f, "one-minus-n-pow:{p}"),
            Schedule::LambdaOverN(p) => write!(f, "lambda-over-n:{p}"),
        }
    }
}

/// Configuration of one experiment run. Verdict thresholds live here, not in
/// the harness; [`default_thresholds`] supplies the standard bands.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub schedule: Schedule,
    pub ns: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub thresholds: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn new(schedule: Schedule, ns: Vec<u64>, trials: u64, seed: u64) -> Result<Self, ExperimentError> {
        if ns.is_empty() {
            return Err(ExperimentError::Config("n-grid must be nonempty".into()));
        }
        if trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        Ok(ExperimentConfig {
            schedule,
            ns,
            trials,
            seed,
            thresholds: BTreeMap::new(),
        })
    }

    /// As [`ExperimentConfig::new`], pre-filling the named experiment's
    /// standard thresholds.
    pub fn with_defaults(
        experiment: &str,
        schedule: Schedule,
        ns: Vec<u64>,
        trials: u64,
        seed: u64,
    ) -> Result<Self, ExperimentError> {
        let mut config = Self::new(schedule, ns, trials, seed)?;
        config.thresholds = default_thresholds(experiment);
        Ok(config)
    }

    fn threshold(&self, name: &str) -> Result<f64, ExperimentError> {
        self.thresholds
            .get(name)
            .copied()
            .ok_or_else(|| ExperimentError::Config(format!("missing threshold '{name}'")))
    }
}

/// Standard tolerance bands per experiment.
pub fn default_thresholds(experiment: &str) -> BTreeMap<String, f64> {
    let entries: &[(&str, f64)] = match experiment {
        "height-ratio" => &[("mean_ratio_min", 0.95), ("mean_ratio_max", 1.05), ("exact_frac_min", 1.0)],
        "rd-clt" => &[("ks_max", 0.05), ("mean_abs_max", 0.1)],
        "height-clt" => &[("ks_max", 0.07), ("var_min", 0.8), ("var_max", 1.2)],
        "poisson" => &[("tv_max", 0.05)],
        "left-subtree-sup" => &[("ratio_min", 2.0), ("ratio_max", 7.0)],
        "coupling-dominance" => &[("max_violations", 0.0), ("sigmas", 3.0)],
        "mean-variance" => &[("mean_sigmas", 4.0), ("var_rel_tol", 0.1)],
        "chernoff" => &[("sigmas", 3.0)],
        "threshold" => &[("p_min", 0.001)],
        "subtree-identity" => &[("p_min", 0.001), ("m", 3.0)],
        "range-of-m" => &[("freq_max", 0.25)],
        _ => &[],
    };
    entries.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub n: u64,
    pub stat: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryStats {
    pub experiment: String,
    pub schedule: String,
    pub seed: u64,
    pub trials: u64,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
}

impl SummaryStats {
    fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        SummaryStats {
            experiment: experiment.to_string(),
            schedule: config.schedule.to_string(),
            seed: config.seed,
            trials: config.trials,
            rows: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    fn row(&mut self, n: u64, stat: &str, value: f64) {
        self.rows.push(Row {
            n,
            stat: stat.to_string(),
            value,
        });
    }

    /// `value ≤ threshold`.
    fn verdict_le(&mut self, name: String, value: f64, threshold: f64) {
        self.verdicts.push(Verdict {
            pass: value <= threshold,
            name,
            value,
            threshold,
        });
    }

    /// `value ≥ threshold`.
    fn verdict_ge(&mut self, name: String, value: f64, threshold: f64) {
        self.verdicts.push(Verdict {
            pass: value >= threshold,
            name,
            value,
            threshold,
        });
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// One row per statistic, then verdicts, then a metadata comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,n,stat,value\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&self.experiment),
                r.n,
                csv_field(&r.stat),
                fmt_value(r.value)
            ));
        }
        for v in &self.verdicts {
            out.push_str(&format!(
                "{},,{},{}\n",
                csv_field(&self.experiment),
                csv_field(&format!("verdict:{}:{}", v.name, if v.pass { "pass" } else { "fail" })),
                fmt_value(v.value)
            ));
        }
        out.push_str(&format!(
            "# seed={} version={} schedule={} trials={}\n",
            self.seed,
            env!("CARGO_PKG_VERSION"),
            self.schedule,
            self.trials
        ));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "config": {
                "schedule": self.schedule,
                "trials": self.trials,
            },
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "rows": self.rows,
            "verdicts": self.verdicts,
            "passed": self.passed(),
        })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Formats with enough digits to round-trip, without trailing float noise for
/// integers.
fn fmt_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.12e}")
    }
}

/// Stream index for trial `trial` of block `block` (one block per grid
/// point), keeping streams disjoint across blocks.
fn trial_rng(seed: u64, block: u64, trial: u64) -> ChaCha8Rng {
    derive_rng(seed, (block << 34) | trial)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub const EXPERIMENT_IDS: &[&str] = &[
    "height-ratio",
    "rd-clt",
    "height-clt",
    "poisson",
    "left-subtree-sup",
    "coupling-dominance",
    "mean-variance",
    "chernoff",
    "threshold",
    "subtree-identity",
    "range-of-m",
];

/// Runs the named experiment.
pub fn run_experiment(id: &str, config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    match id {
        "height-ratio" => run_height_ratio(config),
        "rd-clt" => run_rd_clt(config),
        "height-clt" => run_height_clt(config),
        "poisson" => run_poisson(config),
        "left-subtree-sup" => run_left_subtree_sup(config),
        "coupling-dominance" => run_coupling_dominance(config),
        "mean-variance" => run_mean_variance_check(config),
        "chernoff" => run_chernoff_check(config),
        "threshold" => run_threshold_check(config),
        "subtree-identity" => run_subtree_identity(config),
        "range-of-m" => run_range_of_m(config),
        _ => Err(ExperimentError::UnknownExperiment(id.to_string())),
    }
}

/// Mean of `h(T_{n,q_n}) / (n(1−q_n) + c*·log n)` per grid point. At `q = 0`
/// the height is deterministic (`n − 1`), so the check becomes exact instead
/// of a band around a ratio whose denominator still carries the `c* log n`
/// term.
pub fn run_height_ratio(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("height-ratio", config);
    let cs = analytics::c_star();
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        let heights = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            size_process::sample_height(n, q, &mut rng)
        });
        out.row(n, "q", q);
        if q == 0.0 {
            let frac = heights.iter().filter(|&&h| h == n as i64 - 1).count() as f64
                / heights.len() as f64;
            out.row(n, "frac_height_eq_n_minus_1", frac);
            out.verdict_ge(format!("exact_height_n{n}"), frac, config.threshold("exact_frac_min")?);
            continue;
        }
        let denom = n as f64 * (1.0 - q) + cs * (n as f64).ln();
        let ratios: Vec<f64> = heights.iter().map(|&h| h as f64 / denom).collect();
        let (mean, sd) = mean_sd(&ratios);
        out.row(n, "mean_ratio", mean);
        out.row(n, "sd_ratio", sd);
        out.verdict_ge(format!("mean_ratio_min_n{n}"), mean, config.threshold("mean_ratio_min")?);
        out.verdict_le(format!("mean_ratio_max_n{n}"), mean, config.threshold("mean_ratio_max")?);
    }
    Ok(out)
}

fn clt_guard(n: u64, q: f64) -> Result<(), ExperimentError> {
    let nf = n as f64;
    if nf * (1.0 - q) < 4.0 * nf.ln() || nf * q < 50.0 {
        return Err(ExperimentError::Config(format!(
            "CLT preconditions need n(1-q) >> log n and nq large; got n={n}, q={q}"
        )));
    }
    Ok(())
}

/// Right depth standardized by `(n(1−q) + log(1/(1−q)), √(n(1−q)q))`; KS
/// distance to the standard normal.
pub fn run_rd_clt(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("rd-clt", config);
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        clt_guard(n, q)?;
        let center = n as f64 * (1.0 - q) + (1.0 / (1.0 - q)).ln();
        let scale = (n as f64 * (1.0 - q) * q).sqrt();
        let zs = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            (record_chain::simulate_rm_chain(n, q, &mut rng).right_depth() as f64 - center) / scale
        });
        let ks = stats::ks_statistic(&zs, stats::normal_cdf);
        let (mean, sd) = mean_sd(&zs);
        out.row(n, "ks", ks);
        out.row(n, "mean_z", mean);
        out.row(n, "var_z", sd * sd);
        out.verdict_le(format!("ks_n{n}"), ks, config.threshold("ks_max")?);
        out.verdict_le(format!("mean_abs_n{n}"), mean.abs(), config.threshold("mean_abs_max")?);
    }
    Ok(out)
}

/// Full-tree height standardized by `(n(1−q) + c*·log(1/(1−q)), √(n(1−q)q))`.
pub fn run_height_clt(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("height-clt", config);
    let cs = analytics::c_star();
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        clt_guard(n, q)?;
        let center = n as f64 * (1.0 - q) + cs * (1.0 / (1.0 - q)).ln();
        let scale = (n as f64 * (1.0 - q) * q).sqrt();
        let zs = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            (size_process::sample_height(n, q, &mut rng) as f64 - center) / scale
        });
        let ks = stats::ks_statistic(&zs, stats::normal_cdf);
        let (mean, sd) = mean_sd(&zs);
        out.row(n, "ks", ks);
        out.row(n, "mean_z", mean);
        out.row(n, "var_z", sd * sd);
        out.verdict_le(format!("ks_n{n}"), ks, config.threshold("ks_max")?);
        out.verdict_ge(format!("var_min_n{n}"), sd * sd, config.threshold("var_min")?);
        out.verdict_le(format!("var_max_n{n}"), sd * sd, config.threshold("var_max")?);
    }
    Ok(out)
}

/// Histogram of `n − 1 − h(T_{n,λ/n})` against Poisson(λ) in total variation.
pub fn run_poisson(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let lambda = match config.schedule {
        Schedule::LambdaOverN(l) => l,
        _ => {
            return Err(ExperimentError::Config(
                "poisson experiment needs a lambda-over-n schedule".into(),
            ))
        }
    };
    let mut out = SummaryStats::new("poisson", config);
    let pois = poisson_table(lambda)?;
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        let defs = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            n as i64 - 1 - size_process::sample_height(n, q, &mut rng)
        });
        let mut hist: BTreeMap<i64, u64> = BTreeMap::new();
        for d in defs {
            *hist.entry(d).or_insert(0) += 1;
        }
        let tv = stats::tv_distance(&hist, &pois);
        out.row(n, "tv", tv);
        out.row(n, "lambda", lambda);
        out.verdict_le(format!("tv_n{n}"), tv, config.threshold("tv_max")?);
    }
    Ok(out)
}

fn poisson_table(lambda: f64) -> Result<PmfTable, ExperimentError> {
    if lambda == 0.0 {
        return Ok(PmfTable::point_mass(0));
    }
    let k_max = (8.0 * (lambda + 4.0)) as u64;
    let mass: Vec<f64> = (0..=k_max).map(|k| stats::poisson_pmf(lambda, k)).collect();
    Ok(PmfTable::new(0, mass)?)
}

/// Samples `max_{k<K} (h(T_{G_k, q}) − k)` with i.i.d. `G_k ~ Geometric(1−q)`
/// (the law of the left subtrees along the rightmost path) and reports the
/// median against the `c*·log(1/(1−q))` scale. Qualitative: the limit
/// constants are not explicit.
pub fn run_left_subtree_sup(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("left-subtree-sup", config);
    for (bi, &k_cap) in config.ns.iter().enumerate() {
        let q = match config.schedule {
            Schedule::Constant(q) if q < 1.0 => q,
            _ => {
                return Err(ExperimentError::Config(
                    "left-subtree-sup needs a constant schedule with q < 1".into(),
                ))
            }
        };
        let sups = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            let lq = if q > 0.0 { q.ln() } else { f64::NEG_INFINITY };
            let mut best = i64::MIN;
            for k in 0..k_cap {
                let g = if q == 0.0 {
                    0
                } else {
                    let u: f64 = rand::Rng::gen(&mut rng);
                    (f64::ln_1p(-u) / lq) as u64
                };
                let h = if g == 0 {
                    -1
                } else {
                    size_process::sample_height(g, q, &mut rng)
                };
                best = best.max(h - k as i64);
            }
            best as f64
        });
        let mut sorted = sups.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        out.row(k_cap, "median_sup", median);
        if q > 0.0 {
            let scale = (1.0 / (1.0 - q)).ln();
            let ratio = median / scale;
            out.row(k_cap, "median_over_log_scale", ratio);
            out.verdict_ge(format!("ratio_min_K{k_cap}"), ratio, config.threshold("ratio_min")?);
            out.verdict_le(format!("ratio_max_K{k_cap}"), ratio, config.threshold("ratio_max")?);
        }
    }
    Ok(out)
}

/// `P(h(T_{n,q}) ≤ ℓ) ≤ P(h(T_{m,1}) ≤ ℓ)` with `m = coupling_m(n, q, ℓ)`:
/// exact through the oracle for `n ≤ 7`, Monte Carlo with binomial error bars
/// for larger `n`.
pub fn run_coupling_dominance(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("coupling-dominance", config);
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        if q >= 1.0 {
            return Err(ExperimentError::Config("coupling-dominance needs q < 1".into()));
        }
        let mut violations = 0u64;
        if n <= 7 {
            let h_pmf = oracle::exact_height_pmf(n as usize, q)?;
            for ell in 0..=n {
                let m = size_process::coupling_m(n, q, ell);
                let lhs = h_pmf.tail_le(ell as i64);
                let rhs = if m == 0 {
                    if ell as i64 >= -1 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    oracle::exact_height_pmf(m as usize, 1.0)?.tail_le(ell as i64)
                };
                if lhs > rhs + 1e-12 {
                    violations += 1;
                }
            }
        } else {
            let sigmas = config.threshold("sigmas")?;
            let heights = par_map_trials(config.trials, |t| {
                let mut rng = trial_rng(config.seed, (bi as u64) << 1, t);
                size_process::sample_height(n, q, &mut rng)
            });
            // ℓ grid around the bulk of h(T_{n,q}).
            let mut sorted = heights.clone();
            sorted.sort_unstable();
            let lo = sorted[sorted.len() / 100];
            let hi = sorted[sorted.len() - 1 - sorted.len() / 100];
            for ell in lo..=hi {
                let m = size_process::coupling_m(n, q, ell.max(0) as u64);
                let uniform_heights = par_map_trials(config.trials, |t| {
                    let mut rng = trial_rng(config.seed, ((bi as u64) << 1) | 1, t);
                    size_process::sample_height(m, 1.0, &mut rng)
                });
                let tr = config.trials as f64;
                let p1 = heights.iter().filter(|&&h| h <= ell).count() as f64 / tr;
                let p2 = uniform_heights.iter().filter(|&&h| h <= ell).count() as f64 / tr;
                let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / tr).sqrt();
                if p1 > p2 + sigmas * se.max(1e-9) {
                    violations += 1;
                }
            }
        }
        out.row(n, "violations", violations as f64);
        out.verdict_le(format!("violations_n{n}"), violations as f64, config.threshold("max_violations")?);
    }
    Ok(out)
}

/// Empirical mean and variance of the chain right depth against `μ_1` and
/// `μ_1 − μ_2`.
pub fn run_mean_variance_check(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("mean-variance", config);
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        let rds = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            record_chain::simulate_rm_chain(n, q, &mut rng).right_depth() as f64
        });
        let (mean, sd) = mean_sd(&rds);
        let mu1 = analytics::mu_alpha(n, q, 1);
        let var_exact = mu1 - analytics::mu_alpha(n, q, 2);
        let mean_band = config.threshold("mean_sigmas")? * (var_exact / config.trials as f64).sqrt();
        out.row(n, "mean_rd", mean);
        out.row(n, "mu1", mu1);
        out.row(n, "var_rd", sd * sd);
        out.row(n, "var_exact", var_exact);
        out.verdict_le(format!("mean_err_n{n}"), (mean - mu1).abs(), mean_band);
        out.verdict_le(
            format!("var_rel_err_n{n}"),
            (sd * sd / var_exact - 1.0).abs(),
            config.threshold("var_rel_tol")?,
        );
    }
    Ok(out)
}

/// Empirical tails of the right depth never exceed the Chernoff bounds (plus
/// binomial noise), for `c ∈ {1.2, 1.5, 2}`.
pub fn run_chernoff_check(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("chernoff", config);
    let sigmas = config.threshold("sigmas")?;
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        let rds = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            record_chain::simulate_rm_chain(n, q, &mut rng).right_depth() as f64
        });
        let mu1 = analytics::mu_alpha(n, q, 1);
        let tr = config.trials as f64;
        for &c in &[1.2, 1.5, 2.0] {
            let (ub, lb) = analytics::chernoff_bounds(n, q, c);
            let p_up = rds.iter().filter(|&&r| r > c * mu1).count() as f64 / tr;
            let p_lo = rds.iter().filter(|&&r| r < mu1 / c).count() as f64 / tr;
            let se_up = (p_up * (1.0 - p_up) / tr).sqrt().max(1.0 / tr);
            let se_lo = (p_lo * (1.0 - p_lo) / tr).sqrt().max(1.0 / tr);
            out.row(n, &format!("p_above_{c}mu"), p_up);
            out.row(n, &format!("bound_above_{c}mu"), ub);
            out.row(n, &format!("p_below_mu_over_{c}"), p_lo);
            out.row(n, &format!("bound_below_mu_over_{c}"), lb);
            out.verdict_le(format!("upper_c{c}_n{n}"), p_up, ub + sigmas * se_up);
            out.verdict_le(format!("lower_c{c}_n{n}"), p_lo, lb + sigmas * se_lo);
        }
    }
    Ok(out)
}

/// Chi-square of Monte Carlo `threshold_count` histograms against the exact
/// threshold PMF, over a small `(n, s)` grid.
pub fn run_threshold_check(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("threshold", config);
    let p_min = config.threshold("p_min")?;
    let mut block = 0u64;
    for &n in &config.ns {
        let q = config.schedule.q(n)?;
        for s in 0..=8u64 {
            let counts = par_map_trials(config.trials, |t| {
                let mut rng = trial_rng(config.seed, block, t);
                record_chain::threshold_count(n, s, q, &mut rng)
            });
            block += 1;
            let pmf = analytics::threshold_pmf(n, s, q)?;
            let mut observed = vec![0u64; (pmf.max() - pmf.min() + 1) as usize];
            for c in counts {
                observed[(c as i64 - pmf.min()) as usize] += 1;
            }
            let expected: Vec<f64> = pmf.iter().map(|(_, p)| p * config.trials as f64).collect();
            let test = stats::chi_square(&observed, &expected);
            out.row(n, &format!("p_value_s{s}"), test.p_value);
            out.verdict_ge(format!("chi_sq_n{n}_s{s}"), test.p_value, p_min);
        }
    }
    Ok(out)
}

/// Two-sample test of the subtree identity: `|T_n(1^{R_m+1})|` against an
/// independently simulated `N(n−m, M′_m − m)`.
pub fn run_subtree_identity(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("subtree-identity", config);
    let p_min = config.threshold("p_min")?;
    let m = config.threshold("m")? as u64;
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        if m > n {
            return Err(ExperimentError::Config(format!("m = {m} exceeds n = {n}")));
        }
        let pairs = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            record_chain::subtree_identity_samples(n, m, q, &mut rng)
        });
        let max_val = pairs.iter().map(|&(a, b)| a.max(b)).max().unwrap() as usize;
        let mut ha = vec![0u64; max_val + 1];
        let mut hb = vec![0u64; max_val + 1];
        for (a, b) in pairs {
            ha[a as usize] += 1;
            hb[b as usize] += 1;
        }
        let test = stats::two_sample_chi_square(&ha, &hb);
        out.row(n, "p_value", test.p_value);
        out.row(n, "statistic", test.statistic);
        out.verdict_ge(format!("two_sample_n{n}"), test.p_value, p_min);
    }
    Ok(out)
}

/// Frequency of `|M_{m(n)} − n| > 2(log n)^{3/4}/(1−q_n)`, which should decay
/// along the n-grid.
pub fn run_range_of_m(config: &ExperimentConfig) -> Result<SummaryStats, ExperimentError> {
    let mut out = SummaryStats::new("range-of-m", config);
    let mut freqs = Vec::new();
    for (bi, &n) in config.ns.iter().enumerate() {
        let q = config.schedule.q(n)?;
        let m = record_chain::m_threshold(n, q);
        let alpha = 2.0 * (n as f64).ln().powf(0.75);
        let band = alpha / (1.0 - q);
        let hits = par_map_trials(config.trials, |t| {
            let mut rng = trial_rng(config.seed, bi as u64, t);
            let st = record_chain::simulate_rm_chain(m, q, &mut rng);
            u64::from((st.maximum as f64 - n as f64).abs() > band)
        });
        let freq = hits.iter().sum::<u64>() as f64 / config.trials as f64;
        out.row(n, "m_of_n", m as f64);
        out.row(n, "freq_outside_band", freq);
        freqs.push((n, freq));
    }
    let (last_n, last_freq) = *freqs.last().unwrap();
    out.verdict_le(format!("freq_last_n{last_n}"), last_freq, config.threshold("freq_max")?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(experiment: &str, schedule: Schedule, ns: Vec<u64>, trials: u64) -> ExperimentConfig {
        ExperimentConfig::with_defaults(experiment, schedule, ns, trials, 20_240_817).unwrap()
    }

    #[test]
    fn schedule_parsing_round_trip() {
        for s in [
            "constant:0.5",
            "one-minus-c-log-over-n:4",
            "one-minus-n-pow:0.333",
            "lambda-over-n:2",
        ] {
            let sched = Schedule::parse(s).unwrap();
            assert_eq!(Schedule::parse(&sched.to_string()).unwrap(), sched);
        }
        assert!(Schedule::parse("nope").is_err());
        assert!(Schedule::parse("constant:x").is_err());
        assert!(Schedule::Constant(1.5).q(10).is_err());
        assert!((Schedule::OneMinusNPow(0.5).q(100).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(Schedule::Constant(0.5), vec![], 10, 1).is_err());
        assert!(ExperimentConfig::new(Schedule::Constant(0.5), vec![10], 0, 1).is_err());
    }

    #[test]
    fn height_ratio_q0_is_exact() {
        let c = cfg("height-ratio", Schedule::Constant(0.0), vec![50, 200], 20);
        let s = run_height_ratio(&c).unwrap();
        assert!(s.passed(), "{:?}", s.verdicts);
    }

    #[test]
    fn rd_clt_guard_rejects_bad_schedule() {
        let c = cfg("rd-clt", Schedule::Constant(0.0001), vec![1000], 10);
        assert!(matches!(run_rd_clt(&c), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn poisson_lambda_zero_tv_zero() {
        let c = cfg("poisson", Schedule::LambdaOverN(0.0), vec![500], 50);
        let s = run_poisson(&c).unwrap();
        let tv = s.rows.iter().find(|r| r.stat == "tv").unwrap().value;
        assert_eq!(tv, 0.0);
        assert!(s.passed());
    }

    #[test]
    fn poisson_requires_lambda_schedule() {
        let c = cfg("poisson", Schedule::Constant(0.5), vec![100], 10);
        assert!(matches!(run_poisson(&c), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn mean_variance_small_scale() {
        let c = cfg("mean-variance", Schedule::Constant(0.9), vec![500], 4000);
        let s = run_mean_variance_check(&c).unwrap();
        assert!(s.passed(), "{:?}", s.verdicts);
    }

    #[test]
    fn coupling_dominance_exact_small() {
        let c = cfg("coupling-dominance", Schedule::Constant(0.5), vec![4, 6], 1);
        let s = run_coupling_dominance(&c).unwrap();
        assert!(s.passed(), "{:?}", s.verdicts);
    }

    #[test]
    fn determinism_across_runs() {
        let c = cfg("mean-variance", Schedule::Constant(0.8), vec![200], 500);
        let a = run_mean_variance_check(&c).unwrap().to_csv();
        let b = run_mean_variance_check(&c).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_shape() {
        let c = cfg("mean-variance", Schedule::Constant(0.8), vec![100], 50);
        let s = run_mean_variance_check(&c).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("experiment,n,stat,value\n"));
        assert!(csv.lines().last().unwrap().starts_with("# seed="));
        let json = s.to_json();
        assert!(json["passed"].is_boolean());
        assert_eq!(json["seed"], 20_240_817);
    }

    #[test]
    fn unknown_experiment_rejected() {
        let c = cfg("mean-variance", Schedule::Constant(0.8), vec![100], 10);
        assert!(matches!(
            run_experiment("nonsense", &c),
            Err(ExperimentError::UnknownExperiment(_))
        ));
    }
}
