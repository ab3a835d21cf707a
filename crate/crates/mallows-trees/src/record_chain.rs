//! The infinite-stream model of a Mallows permutation: the value stream
//! `f(1), f(2), …`, the (record count, running maximum) Markov chain that
//! describes its rightmost path, and the threshold process `N(n, s)`.
//!
//! Row `i` of an infinite Bernoulli(1−q) matrix selects `f(i)` as the first
//! unused column holding a one; over the unused columns the hits are i.i.d.
//! Bernoulli(1−q), so `f(i)` is the `(G+1)`-th smallest unused column with
//! `G ~ Geometric(1−q)` on `{0, 1, …}`.

use rand::Rng;

use crate::order_stats::UnusedColumns;

/// `G ~ Geometric(1−q)` on `{0, 1, 2, …}` by inversion. `lq` is `ln q`.
#[inline]
fn geometric<R: Rng + ?Sized>(q: f64, lq: f64, rng: &mut R) -> u64 {
    if q == 0.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    (f64::ln_1p(-u) / lq) as u64
}

/// The value stream `f(1), f(2), …` for a fixed `q < 1`. Emitted values are
/// distinct; at `q = 0` the stream is `1, 2, 3, …`.
#[derive(Clone, Debug)]
pub struct BStream {
    q: f64,
    lq: f64,
    cols: UnusedColumns,
    step: u64,
}

impl BStream {
    pub fn new(q: f64) -> Self {
        assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
        BStream {
            q,
            lq: if q > 0.0 { q.ln() } else { f64::NEG_INFINITY },
            cols: UnusedColumns::new(),
            step: 0,
        }
    }

    /// Number of values emitted so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Draws the next value: the `(G+1)`-th smallest unused column,
    /// `G ~ Geometric(1−q)`. O(log current-max).
    pub fn next_value<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        let g = geometric(self.q, self.lq, rng);
        self.step += 1;
        self.cols.take_kth_unused(g as usize + 1) as u64
    }
}

/// State of the (record count, running maximum) chain after `step` values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RMState {
    /// Record count `C_n` (every record of the stream, including the first
    /// value).
    pub records: u64,
    /// Running maximum `M_n` of the first `step` values.
    pub maximum: u64,
    pub step: u64,
}

impl RMState {
    /// Right depth of the BST of the first `step` values: record count − 1.
    pub fn right_depth(&self) -> u64 {
        self.records.saturating_sub(1)
    }
}

/// Runs the (records, maximum) chain for `n` steps in O(n) time and O(1)
/// memory. From `(c, m)` after `n′` values: stay with probability
/// `1 − q^{m−n′}`; otherwise a record occurs and the maximum jumps to `m + ℓ`
/// with probability `q^{m+ℓ−n′−1}(1−q)`, i.e. `ℓ = 1 + Geometric(1−q)`.
pub fn simulate_rm_chain<R: Rng + ?Sized>(n: u64, q: f64, rng: &mut R) -> RMState {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    let lq = if q > 0.0 { q.ln() } else { f64::NEG_INFINITY };
    let mut records = 0u64;
    let mut d = 0u64; // maximum − step
    let mut qd = 1.0f64; // q^d, maintained incrementally
    for step in 0..n {
        let record = if d == 0 {
            true
        } else {
            rng.gen::<f64>() < qd
        };
        if record {
            records += 1;
            let ell = 1 + geometric(q, lq, rng);
            d += ell - 1;
            if ell > 1 {
                qd *= ((ell - 1) as f64 * lq).exp();
            }
        } else {
            d -= 1;
            qd /= q;
        }
        // Periodically recompute q^d to stop multiplicative drift.
        if step & 0xfff == 0xfff {
            qd = if d == 0 {
                1.0
            } else {
                let e = d as f64 * lq;
                if e < -745.0 {
                    0.0
                } else {
                    e.exp()
                }
            };
        }
    }
    RMState {
        records,
        maximum: n + d,
        step: n,
    }
}

/// Simulates `f(1..n)` and returns `N(n, s) = #{i ≤ n : f(i) > s}`.
pub fn threshold_count<R: Rng + ?Sized>(n: u64, s: u64, q: f64, rng: &mut R) -> u64 {
    let mut stream = BStream::new(q);
    (0..n).filter(|_| stream.next_value(rng) > s).count() as u64
}

/// One draw of each side of the subtree identity: the size of the subtree
/// hanging below the rightmost path after `m` insertions,
/// `|T_n(1^{R_m+1})|`, and an independent draw of `N(n−m, M′_m − m)` built
/// from a fresh chain and a fresh stream. The two are equal in distribution.
pub fn subtree_identity_samples<R: Rng + ?Sized>(
    n: u64,
    m: u64,
    q: f64,
    rng: &mut R,
) -> (u64, u64) {
    assert!(m <= n, "m must not exceed n");
    // Side A: full stream. Every later value above the running maximum of the
    // first m values lands in the subtree at 1^{R_m+1}.
    let mut stream = BStream::new(q);
    let mut max_m = 0u64;
    for _ in 0..m {
        max_m = max_m.max(stream.next_value(rng));
    }
    let mut a = 0u64;
    for _ in m..n {
        if stream.next_value(rng) > max_m {
            a += 1;
        }
    }
    // Side B: fresh chain for M′_m, fresh stream for the threshold count.
    let m_prime = simulate_rm_chain(m, q, rng).maximum;
    let b = threshold_count(n - m, m_prime - m, q, rng);
    (a, b)
}

/// `m(n) = min{ℓ ≥ 0 : ℓ(1−q) + log ℓ ≥ n(1−q)}` with `log 0 := −∞`, by
/// binary search (the left side is increasing in `ℓ`).
pub fn m_threshold(n: u64, q: f64) -> u64 {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    let target = n as f64 * (1.0 - q);
    let f = |ell: u64| ell as f64 * (1.0 - q) + (ell as f64).ln();
    let mut lo = 1u64; // ℓ = 0 never qualifies
    if f(lo) >= target {
        return lo;
    }
    let mut hi = n.max(2);
    while f(hi) < target {
        hi *= 2;
    }
    // Invariant: f(lo) < target ≤ f(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
