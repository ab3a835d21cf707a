//! Exact and asymptotic closed forms: the height constant `c*`, the moment
//! sums `μ_α`, the bivariate MGF and PMF of the right depth, falling-moment
//! identities through Stirling numbers and integer partitions, the threshold
//! process PMF with its Gaussian-binomial closed form, and tail bounds.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("MGF domain requires q|y| < 1 (q={q}, y={y})")]
    MgfDomain { q: f64, y: f64 },
    #[error("probability mass sums to {sum}, outside the 1e-10 renormalization tolerance")]
    MassSum { sum: f64 },
    #[error("negative probability mass {mass} at offset {offset}")]
    NegativeMass { offset: usize, mass: f64 },
}

/// `q^k` for integer `k ≥ 0`, stable for `q ∈ [0, 1]`.
fn pow_q(q: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if q == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return 1.0;
    }
    let e = k as f64 * q.ln();
    if e < -745.0 {
        0.0
    } else {
        e.exp()
    }
}

/// `1 − q^k`, computed via `expm1` to keep precision near `q = 1`.
fn one_minus_pow_q(q: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if q == 0.0 {
        return 1.0;
    }
    if q == 1.0 {
        return 0.0;
    }
    -f64::exp_m1(k as f64 * q.ln())
}

/// A probability mass function on a contiguous integer range.
#[derive(Clone, Debug)]
pub struct PmfTable {
    min: i64,
    mass: Vec<f64>,
}

impl PmfTable {
    /// Validates nonnegativity and total mass; renormalizes once if the sum
    /// deviates from 1 by less than 1e-10, errors otherwise.
    pub fn new(min: i64, mass: Vec<f64>) -> Result<Self, AnalyticsError> {
        for (offset, &m) in mass.iter().enumerate() {
            if m < -1e-15 {
                return Err(AnalyticsError::NegativeMass { offset, mass: m });
            }
        }
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() >= 1e-10 {
            return Err(AnalyticsError::MassSum { sum });
        }
        let mass = mass.into_iter().map(|m| m.max(0.0) / sum).collect();
        Ok(PmfTable { min, mass })
    }

    pub fn point_mass(at: i64) -> Self {
        PmfTable {
            min: at,
            mass: vec![1.0],
        }
    }

    pub fn min(&self) -> i64 {
        self.min
    }

    pub fn max(&self) -> i64 {
        self.min + self.mass.len() as i64 - 1
    }

    pub fn prob(&self, k: i64) -> f64 {
        if k < self.min {
            return 0.0;
        }
        *self.mass.get((k - self.min) as usize).unwrap_or(&0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.min + i as i64, m))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, m)| k as f64 * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter().map(|(k, m)| (k as f64 - mu).powi(2) * m).sum()
    }

    pub fn moment(&self, alpha: u32) -> f64 {
        self.iter()
            .map(|(k, m)| (k as f64).powi(alpha as i32) * m)
            .sum()
    }

    /// `P(X ≥ x)`.
    pub fn tail_ge(&self, x: i64) -> f64 {
        self.iter().filter(|&(k, _)| k >= x).map(|(_, m)| m).sum()
    }

    /// `P(X ≤ x)`.
    pub fn tail_le(&self, x: i64) -> f64 {
        self.iter().filter(|&(k, _)| k <= x).map(|(_, m)| m).sum()
    }
}

/// The height constant `c* = 4.311…`: the unique `c ≥ 2` with
/// `c·log(2e/c) = 1`, located by bisection on `[2, 8]`.
pub fn c_star() -> f64 {
    let g = |c: f64| c * (2.0 * std::f64::consts::E / c).ln() - 1.0;
    let (mut lo, mut hi) = (2.0f64, 8.0f64);
    debug_assert!(g(lo) > 0.0 && g(hi) < 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if g(mid).abs() < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `μ_α(n, q) = Σ_{1<k≤n} ((1−q)/(1−q^k))^α`, with the `q → 1` limit term
/// `1/k^α`. O(min(n, log(ε)/log q)): once `q^k` is negligible the remaining
/// terms are all `(1−q)^α`.
pub fn mu_alpha(n: u64, q: f64, alpha: u32) -> f64 {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    assert!(alpha >= 1);
    if n < 2 {
        return 0.0;
    }
    if q == 1.0 {
        return (2..=n).map(|k| (k as f64).powi(-(alpha as i32))).sum();
    }
    let lq = if q > 0.0 { q.ln() } else { f64::NEG_INFINITY };
    let a = alpha as i32;
    let mut sum = 0.0;
    for k in 2..=n {
        if q > 0.0 && k as f64 * lq < -50.0 {
            // q^k < 2e-22: the rest of the sum is (n−k+1) copies of (1−q)^α
            // up to relative error far below 1e-12.
            sum += (n - k + 1) as f64 * (1.0 - q).powi(a);
            break;
        }
        sum += ((1.0 - q) / one_minus_pow_q(q, k)).powi(a);
    }
    sum
}

/// The sandwich bounds on `μ_α` for a free split point `m ∈ [1, n]`:
/// lower `(n−m)(1−q)^α + Σ_{1<k≤m} k^{−α}` and the three-term upper bound
/// `n(1−q)^α + α m (1−q)^α q^m (1−q^n)/(1−q^m)^{α+1}
///  + (m(1−q)/(1−q^m))^α Σ_{1<k≤m} k^{−α}`.
pub fn mu_bounds(n: u64, q: f64, alpha: u32, m: u64) -> (f64, f64) {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    assert!(m >= 1 && m <= n, "m must lie in [1, n]");
    let a = alpha as i32;
    let zeta_partial: f64 = (2..=m).map(|k| (k as f64).powi(-a)).sum();
    let omq = 1.0 - q;
    let lower = (n - m) as f64 * omq.powi(a) + zeta_partial;
    let one_minus_qm = one_minus_pow_q(q, m);
    let upper = n as f64 * omq.powi(a)
        + alpha as f64 * m as f64 * omq.powi(a) * pow_q(q, m) * one_minus_pow_q(q, n)
            / one_minus_qm.powi(a + 1)
        + (m as f64 * omq / one_minus_qm).powi(a) * zeta_partial;
    (lower, upper)
}

/// Riemann zeta at integer `α ≥ 2`: direct series to `N` terms with an
/// Euler–Maclaurin tail, accurate to ~1e-14 for the small `α` used here.
pub fn zeta(alpha: u32) -> f64 {
    assert!(alpha >= 2);
    let a = alpha as f64;
    let n = 24.0f64;
    let head: f64 = (1..24u32).map(|k| (k as f64).powf(-a)).sum();
    let tail = n.powf(1.0 - a) / (a - 1.0) + 0.5 * n.powf(-a) + a * n.powf(-a - 1.0) / 12.0
        - a * (a + 1.0) * (a + 2.0) * n.powf(-a - 3.0) / 720.0
        + a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0) * n.powf(-a - 5.0) / 30240.0;
    head + tail
}

/// Leading asymptotics of `μ_α` and the scale of the error term:
/// `α = 1`: main `n(1−q) + log(n ∧ 1/(1−q))`, error `√log(n ∧ 1/(1−q))`;
/// `α > 1`: main `n(1−q)^α + ζ(α) − 1`, error `((1−q) ∨ 1/n)^{(α−1)/(α+1)}`.
pub fn mu_asymptotic(n: u64, q: f64, alpha: u32) -> (f64, f64) {
    assert!(alpha >= 1);
    let nf = n as f64;
    let omq = 1.0 - q;
    if alpha == 1 {
        let cap = nf.min(1.0 / omq);
        (nf * omq + cap.ln(), cap.ln().max(0.0).sqrt())
    } else {
        let a = alpha as f64;
        (
            nf * omq.powi(alpha as i32) + zeta(alpha) - 1.0,
            omq.max(1.0 / nf).powf((a - 1.0) / (a + 1.0)),
        )
    }
}

/// The bivariate MGF `E[x^{C_n} y^{M_n}]` of the record count and running
/// maximum: `y^n ∏_{1≤k≤n} (q + (1−q)x − q^k) / (1 − q^k y)`, valid for
/// `q|y| < 1`.
pub fn record_mgf(n: u64, q: f64, x: f64, y: f64) -> Result<f64, AnalyticsError> {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    if q * y.abs() >= 1.0 {
        return Err(AnalyticsError::MgfDomain { q, y });
    }
    if q == 0.0 {
        return Ok((x * y).powi(n as i32));
    }
    let mut out = y.powi(n as i32);
    for k in 1..=n {
        let qk = pow_q(q, k);
        out *= (q + (1.0 - q) * x - qk) / (1.0 - qk * y);
    }
    Ok(out)
}

/// Exact PMF of the right depth `R_n = C_n − 1` on `{0, …, n−1}`, by
/// coefficient extraction in `x` from the MGF at `y = 1`: the record-count
/// generating polynomial is `∏_{1≤k≤n} (a_k + b_k x)` with
/// `a_k = (q − q^k)/(1 − q^k)` and `b_k = (1−q)/(1 − q^k)`. O(n²).
pub fn record_pmf(n: u64, q: f64) -> Result<PmfTable, AnalyticsError> {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    if n == 0 {
        return Ok(PmfTable::point_mass(0));
    }
    let n = n as usize;
    // coeffs[c] = P(C_n = c); the k = 1 factor is exactly x.
    let mut coeffs = vec![0.0f64; n + 1];
    coeffs[1] = 1.0;
    let mut deg = 1usize;
    for k in 2..=n as u64 {
        let omqk = one_minus_pow_q(q, k);
        let a = (q - pow_q(q, k)) / omqk;
        let b = (1.0 - q) / omqk;
        for c in (1..=deg + 1).rev() {
            coeffs[c] = coeffs[c] * a + coeffs[c - 1] * b;
        }
        coeffs[0] *= a;
        deg += 1;
    }
    debug_assert!(coeffs[0].abs() < 1e-14);
    PmfTable::new(0, coeffs[1..].to_vec())
}

/// Integer partitions of `beta` as multiplicity vectors `(s_1, …, s_β)` with
/// `Σ i·s_i = β`, in lexicographic order of the underlying partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSignature {
    /// `counts[i-1]` is `s_i`, the number of parts equal to `i`.
    pub counts: Vec<u64>,
}

impl PartitionSignature {
    /// `|s| = Σ s_i`, the number of parts.
    pub fn weight(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// All partitions of `beta` (hard-capped at 12; only small moments are ever
/// requested).
pub fn partitions(beta: u32) -> Vec<PartitionSignature> {
    assert!(beta >= 1 && beta <= 12, "partition order capped at 12");
    let beta = beta as usize;
    let mut out = Vec::new();
    // parts[] is a non-increasing list of parts summing to beta.
    let mut parts: Vec<usize> = Vec::new();
    fn rec(remaining: usize, max_part: usize, parts: &mut Vec<usize>, beta: usize, out: &mut Vec<PartitionSignature>) {
        if remaining == 0 {
            let mut counts = vec![0u64; beta];
            for &p in parts.iter() {
                counts[p - 1] += 1;
            }
            out.push(PartitionSignature { counts });
            return;
        }
        for p in (1..=remaining.min(max_part)).rev() {
            parts.push(p);
            rec(remaining - p, p, parts, beta, out);
            parts.pop();
        }
    }
    rec(beta, beta, &mut parts, beta, &mut out);
    out
}

/// Stirling numbers of the second kind, `S(α, β)`.
pub fn stirling2(alpha: u32, beta: u32) -> u64 {
    if beta == 0 {
        return u64::from(alpha == 0);
    }
    if beta > alpha {
        return 0;
    }
    // S(n, k) = k·S(n−1, k) + S(n−1, k−1).
    let mut row = vec![0u64; beta as usize + 1];
    row[0] = 1; // S(0, 0)
    for _n in 1..=alpha {
        for k in (1..=beta as usize).rev() {
            row[k] = k as u64 * row[k] + row[k - 1];
        }
        row[0] = 0;
    }
    row[beta as usize]
}

/// `ν_β(n, q) = Σ_{k_1 ≠ … ≠ k_β} ∏_i (1−q)/(1−q^{k_i})`, evaluated through
/// the partition identity
/// `ν_β = β! Σ_{s ∈ S_β} (−1)^{β+|s|} ∏_i μ_i^{s_i} / (i^{s_i} s_i!)`.
pub fn nu_beta(n: u64, q: f64, beta: u32) -> f64 {
    assert!(beta >= 1);
    let mus: Vec<f64> = (1..=beta).map(|i| mu_alpha(n, q, i)).collect();
    let beta_fact: f64 = (1..=beta as u64).map(|i| i as f64).product();
    let mut total = 0.0;
    for sig in partitions(beta) {
        let mut term = if (beta as u64 + sig.weight()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        for (i0, &s_i) in sig.counts.iter().enumerate() {
            if s_i == 0 {
                continue;
            }
            let i = (i0 + 1) as f64;
            let s_fact: f64 = (1..=s_i).map(|j| j as f64).product();
            term *= mus[i0].powi(s_i as i32) / (i.powi(s_i as i32) * s_fact);
        }
        total += term;
    }
    beta_fact * total
}

/// The `α`-th moment of the right depth, through falling moments:
/// `E[R^α] = Σ_{1≤β≤α∧(n−1)} S(α, β) ν_β(n, q)`.
pub fn record_moment(n: u64, q: f64, alpha: u32) -> f64 {
    assert!(alpha >= 1);
    if n < 2 {
        return 0.0;
    }
    let beta_max = (alpha as u64).min(n - 1) as u32;
    (1..=beta_max)
        .map(|beta| stirling2(alpha, beta) as f64 * nu_beta(n, q, beta))
        .sum()
}

/// Chernoff bounds on the right depth: `P(R ≥ cμ_1) ≤ exp((c log(e/c) − 1)μ_1)`
/// and `P(R ≤ μ_1/c) ≤ exp((log(ce)/c − 1)μ_1)`, for `c > 1`.
pub fn chernoff_bounds(n: u64, q: f64, c: f64) -> (f64, f64) {
    assert!(c > 1.0, "c must exceed 1");
    let mu1 = mu_alpha(n, q, 1);
    let upper = ((c * (std::f64::consts::E / c).ln() - 1.0) * mu1).exp();
    let lower = (((c * std::f64::consts::E).ln() / c - 1.0) * mu1).exp();
    (upper, lower)
}

/// Exact PMF of the threshold process `N(n, s)` on `[(n−s)_+, n]`, by the
/// two-term recursion
/// `P(N(n,s)=ℓ) = (1−q^s) P(N(n−1,s−1)=ℓ) + q^s P(N(n−1,s)=ℓ−1)`
/// with bases `N(0,s) = 0` and `N(n,0) = n`.
pub fn threshold_pmf(n: u64, s: u64, q: f64) -> Result<PmfTable, AnalyticsError> {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    let n = n as usize;
    let s = s as usize;
    // prev[s'] is the mass vector of N(i−1, s') over ℓ = 0..i−1.
    let mut prev: Vec<Vec<f64>> = vec![vec![1.0]; s + 1];
    for i in 1..=n {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(s + 1);
        for sp in 0..=s {
            let mut row = vec![0.0f64; i + 1];
            if sp == 0 {
                row[i] = 1.0;
            } else {
                let qs = pow_q(q, sp as u64);
                let stay = 1.0 - qs;
                for (l, &p) in prev[sp - 1].iter().enumerate() {
                    row[l] += stay * p;
                }
                for (l, &p) in prev[sp].iter().enumerate() {
                    row[l + 1] += qs * p;
                }
            }
            cur.push(row);
        }
        prev = cur;
    }
    let full = prev.into_iter().nth(s).unwrap();
    let lo = n.saturating_sub(s);
    PmfTable::new(lo as i64, full[lo..].to_vec())
}

/// Gaussian binomial coefficient `C_q(n, k)` by the DP recurrence
/// `C_q(n, k) = C_q(n−1, k−1) + q^k C_q(n−1, k)` (no factorial ratios).
pub fn q_binomial(n: u64, k: u64, q: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let (n, k) = (n as usize, k as usize);
    let mut row = vec![0.0f64; k + 1];
    row[0] = 1.0;
    for _i in 1..=n {
        for j in (1..=k).rev() {
            row[j] = row[j - 1] + pow_q(q, j as u64) * row[j];
        }
    }
    row[k]
}

/// Closed form of the threshold PMF:
/// `P(N(n,s)=ℓ) = q^{(s−n)ℓ+ℓ(ℓ+1)/2} ∏_{s+1−n+ℓ≤i≤s}(1−q^i)
///   · q^{ℓ(ℓ−1)/2} C_q(n, ℓ)`,
/// where the subset sum `Σ_{A⊆[n],|A|=ℓ} q^{Σ(a−1)}` collapses to the
/// Gaussian binomial. Cross-validates the recursion for `n ≤ 30`.
pub fn threshold_pmf_closed_form(n: u64, s: u64, q: f64) -> Result<PmfTable, AnalyticsError> {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    if q == 0.0 {
        return Ok(PmfTable::point_mass(n.saturating_sub(s) as i64));
    }
    let lq = q.ln();
    let lo = n.saturating_sub(s);
    let mut mass = Vec::with_capacity((n - lo + 1) as usize);
    for ell in lo..=n {
        // Combined power of q: (s−n)ℓ + ℓ(ℓ+1)/2 + ℓ(ℓ−1)/2 = (s−n)ℓ + ℓ².
        let e = (s as i64 - n as i64) * ell as i64 + (ell * ell) as i64;
        let mut ln_mass = e as f64 * lq + q_binomial(n, ell, q).ln();
        let i_lo = s as i64 + 1 - n as i64 + ell as i64;
        debug_assert!(i_lo >= 1);
        for i in i_lo..=s as i64 {
            ln_mass += one_minus_pow_q(q, i as u64).ln();
        }
        mass.push(ln_mass.exp());
    }
    PmfTable::new(lo as i64, mass)
}

/// Tail bounds on `N(n, s)` with their validity conditions.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdTailBounds {
    /// `q^{ξ+s−n} ≤ ξ(1−q)`: when true, `upper` bounds `P(N ≥ ξ)`.
    pub upper_valid: bool,
    pub upper: Option<f64>,
    /// `q^{ξ+s−n} ≥ ξ(1−q)²`: when true, `lower` bounds `P(N ≤ ξ)`.
    pub lower_valid: bool,
    pub lower: Option<f64>,
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Evaluates the two tail bounds
/// `P(N(n,s) ≥ ξ) ≤ (n/ξ!) q^{ξ²/2} (q^{s−n}/(1−q))^ξ` and
/// `P(N(n,s) ≤ ξ) ≤ 2(1−q)^{n−s}/((ξ−1)_+! (s−n)_+!) · q^{ξ²/2}
///   (q^{s−n}/(1−q)²)^ξ`,
/// each reported only when its validity condition holds.
pub fn threshold_tail_bounds(n: u64, s: u64, q: f64, xi: u64) -> ThresholdTailBounds {
    assert!((0.0..1.0).contains(&q) && q > 0.0, "q must lie in (0, 1)");
    let lq = q.ln();
    let l1q = (1.0 - q).ln();
    let e_cond = (xi as i64 + s as i64 - n as i64) as f64 * lq; // ln q^{ξ+s−n}
    let xif = xi as f64;
    let upper_valid = xi >= 1 && e_cond <= (xif * (1.0 - q)).ln();
    let lower_valid = e_cond >= (xif * (1.0 - q) * (1.0 - q)).ln();
    let s_minus_n = s as f64 - n as f64;
    let upper = upper_valid.then(|| {
        ((n as f64).ln() - ln_factorial(xi) + xif * xif / 2.0 * lq
            + xif * (s_minus_n * lq - l1q))
            .exp()
    });
    let lower = lower_valid.then(|| {
        (std::f64::consts::LN_2 + (n as f64 - s as f64) * l1q
            - ln_factorial(xi.saturating_sub(1))
            - ln_factorial(s.saturating_sub(n))
            + xif * xif / 2.0 * lq
            + xif * (s_minus_n * lq - 2.0 * l1q))
            .exp()
    });
    ThresholdTailBounds {
        upper_valid,
        upper,
        lower_valid,
        lower,
    }
}
