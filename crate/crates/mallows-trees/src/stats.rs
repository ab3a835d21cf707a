//! Statistical plumbing for experiment verdicts: normal CDF, Poisson PMF,
//! Kolmogorov-Smirnov distance, total-variation distance and chi-square
//! goodness-of-fit with low-count pooling.

use std::collections::BTreeMap;

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::analytics::PmfTable;

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 rational
/// approximation of erf; absolute error below 1.5e-7.
pub fn normal_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = sign * (1.0 - poly * (-x * x).exp());
    0.5 * (1.0 + erf)
}

/// `P(Poisson(λ) = k)`.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    assert!(lambda >= 0.0);
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// One-sample Kolmogorov-Smirnov distance between a sample and an analytic
/// CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!sample.is_empty());
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Total-variation distance between an empirical histogram and an exact PMF:
/// `½ Σ_k |p̂(k) − p(k)|` over the union of supports.
pub fn tv_distance(hist: &BTreeMap<i64, u64>, pmf: &PmfTable) -> f64 {
    let total: u64 = hist.values().sum();
    assert!(total > 0);
    let tf = total as f64;
    let mut tv = 0.0;
    for (k, p) in pmf.iter() {
        let emp = hist.get(&k).copied().unwrap_or(0) as f64 / tf;
        tv += (emp - p).abs();
    }
    for (&k, &c) in hist {
        if k < pmf.min() || k > pmf.max() {
            tv += c as f64 / tf;
        }
    }
    0.5 * tv
}

/// Outcome of a chi-square test.
#[derive(Clone, Copy, Debug)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Expected count below which cells are pooled before computing the
/// statistic; the asymptotic chi-square approximation is unreliable on
/// sparser cells.
pub const POOL_THRESHOLD: f64 = 5.0;

/// Pearson goodness-of-fit of observed counts against expected counts
/// (`expected` in the same units as `observed`, i.e. already scaled by the
/// number of trials). Cells with expected count below [`POOL_THRESHOLD`] are
/// pooled into one. A test left with a single cell is degenerate and passes
/// with `p = 1`.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_obs, mut pool_exp) = (0.0f64, 0.0f64);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < POOL_THRESHOLD {
            pool_obs += o as f64;
            pool_exp += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pool_exp > 0.0 {
        if pool_exp >= POOL_THRESHOLD || cells.is_empty() {
            cells.push((pool_obs, pool_exp));
        } else {
            let last = cells.last_mut().unwrap();
            last.0 += pool_obs;
            last.1 += pool_exp;
        }
    }
    if cells.len() <= 1 {
        return ChiSquare {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (cells.len() - 1) as u64;
    ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}

/// Two-sample chi-square for homogeneity of two histograms over the same
/// cell layout. Cells with combined count below 2·[`POOL_THRESHOLD`] are
/// pooled.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    assert!(na > 0 && nb > 0);
    let k1 = (nb as f64 / na as f64).sqrt();
    let k2 = (na as f64 / nb as f64).sqrt();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pa, mut pb) = (0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        if (x + y) as f64 >= 2.0 * POOL_THRESHOLD {
            cells.push((x as f64, y as f64));
        } else {
            pa += x as f64;
            pb += y as f64;
        }
    }
    if pa + pb > 0.0 {
        cells.push((pa, pb));
    }
    if cells.len() <= 1 {
        return ChiSquare {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let statistic: f64 = cells
        .iter()
        .filter(|&&(x, y)| x + y > 0.0)
        .map(|&(x, y)| {
            let d = k1 * x - k2 * y;
            d * d / (x + y)
        })
        .sum();
    let df = (cells.len() - 1) as u64;
    ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}

/// `P(χ²_df ≥ x)`.
pub fn chi_square_sf(x: f64, df: u64) -> f64 {
    if df == 0 || x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}
