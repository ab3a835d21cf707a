//! Mallows distribution fundamentals: inversions, normalizer, exact PMF,
//! samplers and the reversal map.
//!
//! The Mallows law with parameters `(n, q)` puts mass proportional to
//! `q^Inv(σ)` on each permutation `σ` of `{1, …, n}`. Only `q ∈ [0, 1]` is
//! evaluated directly; `q > 1` is reached through [`Permutation::reverse`],
//! which maps the `q` law to the `1/q` law.

use rand::Rng;
use thiserror::Error;

use crate::order_stats::RankSelect;
use crate::record_chain::BStream;

#[derive(Debug, Error, PartialEq)]
pub enum PermError {
    #[error("values are not a permutation of 1..={0}")]
    NotAPermutation(usize),
}

/// A bijection of `{1, …, n}`, stored one-line: `values[i]` is `σ(i+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    values: Vec<u64>,
}

impl Permutation {
    pub fn new(values: Vec<u64>) -> Result<Self, PermError> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            if v < 1 || v > n as u64 || seen[(v - 1) as usize] {
                return Err(PermError::NotAPermutation(n));
            }
            seen[(v - 1) as usize] = true;
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n as u64).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// `(n+1−σ(1), …, n+1−σ(n))`; swaps the Mallows parameter `q` for `1/q`
    /// and mirrors the associated binary search tree.
    pub fn reverse(&self) -> Permutation {
        let n = self.values.len() as u64;
        Permutation {
            values: self.values.iter().map(|&v| n + 1 - v).collect(),
        }
    }
}

/// Number of pairs `i < j` with `σ(i) > σ(j)`, by merge counting in O(n log n).
pub fn inversions(perm: &Permutation) -> u64 {
    fn merge_count(xs: &mut [u64], buf: &mut [u64]) -> u64 {
        let n = xs.len();
        if n <= 1 {
            return 0;
        }
        let mid = n / 2;
        let mut inv = {
            let (lo, hi) = xs.split_at_mut(mid);
            merge_count(lo, buf) + merge_count(hi, buf)
        };
        let (mut i, mut j, mut k) = (0, mid, 0);
        while i < mid && j < n {
            if xs[i] <= xs[j] {
                buf[k] = xs[i];
                i += 1;
            } else {
                buf[k] = xs[j];
                inv += (mid - i) as u64;
                j += 1;
            }
            k += 1;
        }
        while i < mid {
            buf[k] = xs[i];
            i += 1;
            k += 1;
        }
        while j < n {
            buf[k] = xs[j];
            j += 1;
            k += 1;
        }
        xs.copy_from_slice(&buf[..n]);
        inv
    }
    let mut xs = perm.values.clone();
    let mut buf = vec![0; xs.len()];
    merge_count(&mut xs, &mut buf)
}

/// `Z_{n,q} = Σ_σ q^{Inv(σ)}`, evaluated as the q-factorial
/// `∏_{k=1..n} (1−q^k)/(1−q)`, with the `q → 1` limit `n!`.
pub fn mallows_normalizer(n: usize, q: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    if q == 1.0 {
        return (1..=n).fold(1.0, |acc, k| acc * k as f64);
    }
    let lq = q.ln();
    let mut z = 1.0;
    for k in 1..=n {
        let num = if q == 0.0 { 1.0 } else { -f64::exp_m1(k as f64 * lq) };
        z *= num / (1.0 - q);
    }
    z
}

/// `π_{n,q}(σ) = q^{Inv(σ)} / Z_{n,q}`.
pub fn mallows_pmf(perm: &Permutation, q: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    let inv = inversions(perm);
    let n = perm.n();
    if q == 0.0 {
        return if inv == 0 { 1.0 } else { 0.0 };
    }
    (inv as f64 * q.ln()).exp() / mallows_normalizer(n, q)
}

/// Rank in `{1, …, m}` with `P(k) ∝ q^{k−1}`, by inverse CDF.
fn truncated_geometric_rank<R: Rng + ?Sized>(q: f64, m: usize, rng: &mut R) -> usize {
    if m == 1 || q == 0.0 {
        return 1;
    }
    if q == 1.0 {
        return rng.gen_range(0..m) + 1;
    }
    let u: f64 = rng.gen();
    // P(K ≤ k) = (1 − q^k)/(1 − q^m); smallest k with CDF ≥ u.
    let lq = q.ln();
    let one_minus_qm = -f64::exp_m1(m as f64 * lq);
    let k = (f64::ln_1p(-u * one_minus_qm) / lq).ceil() as usize;
    k.clamp(1, m)
}

/// Draws `σ ~ π_{n,q}` by insertion: position `i` receives the k-th smallest
/// unused value with probability `q^{k−1}(1−q)/(1−q^{n−i+1})`. O(n log n).
pub fn sample_mallows<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Permutation {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    let mut index = RankSelect::full(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let m = n - i;
        let k = truncated_geometric_rank(q, m, rng);
        let v = index.kth_present(k);
        index.remove(v);
        values.push(v as u64);
    }
    Permutation { values }
}

/// Draws `σ ~ π_{n,q}` from the infinite-stream model: emit `f(1..n)` from a
/// [`BStream`] and rank the values. Requires `q < 1`.
pub fn sample_mallows_bmodel<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Permutation {
    let mut stream = BStream::new(q);
    let f: Vec<u64> = (0..n).map(|_| stream.next_value(rng)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| f[i]);
    let mut values = vec![0u64; n];
    for (rank0, &i) in order.iter().enumerate() {
        values[i] = rank0 as u64 + 1;
    }
    Permutation { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    fn perm(vs: &[u64]) -> Permutation {
        Permutation::new(vs.to_vec()).unwrap()
    }

    #[test]
    fn inversions_small_cases() {
        assert_eq!(inversions(&perm(&[1, 2, 3])), 0);
        assert_eq!(inversions(&perm(&[2, 1])), 1);
        assert_eq!(inversions(&perm(&[3, 1, 2])), 2);
        assert_eq!(inversions(&perm(&[1, 3, 2])), 1);
        assert_eq!(inversions(&perm(&[3, 2, 1])), 3);
        assert_eq!(inversions(&Permutation::identity(0)), 0);
    }

    #[test]
    fn inversions_matches_quadratic_count() {
        let mut rng = derive_rng(11, 0);
        for _ in 0..50 {
            let p = sample_mallows(40, 0.7, &mut rng);
            let vs = p.values();
            let mut slow = 0u64;
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    if vs[i] > vs[j] {
                        slow += 1;
                    }
                }
            }
            assert_eq!(inversions(&p), slow);
        }
    }

    #[test]
    fn reversal_identity() {
        let p = perm(&[3, 1, 2]);
        let r = p.reverse();
        assert_eq!(r.values(), &[1, 3, 2]);
        assert_eq!(inversions(&p) + inversions(&r), 3);
        assert_eq!(perm(&[2, 1, 3]).reverse().values(), &[2, 3, 1]);
        let id = Permutation::identity(5);
        assert_eq!(id.reverse().values(), &[5, 4, 3, 2, 1]);
    }

    #[test]
    fn normalizer_values() {
        assert!((mallows_normalizer(4, 1.0) - 24.0).abs() < 1e-12);
        let q = 0.37;
        assert!((mallows_normalizer(2, q) - (1.0 + q)).abs() < 1e-14);
        assert!((mallows_normalizer(3, 0.5) - 2.625).abs() < 1e-14);
        assert_eq!(mallows_normalizer(5, 0.0), 1.0);
    }

    #[test]
    fn pmf_point_mass_and_uniform() {
        assert_eq!(mallows_pmf(&Permutation::identity(4), 0.0), 1.0);
        assert_eq!(mallows_pmf(&perm(&[2, 1, 3, 4]), 0.0), 0.0);
        assert!((mallows_pmf(&perm(&[4, 2, 3, 1]), 1.0) - 1.0 / 24.0).abs() < 1e-15);
        assert!((mallows_pmf(&perm(&[2, 1]), 0.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_permutations_rejected() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![2, 3]).is_err());
        assert!(Permutation::new(vec![]).is_ok());
    }

    #[test]
    fn sampler_degenerate_cases() {
        let mut rng = derive_rng(3, 0);
        assert_eq!(sample_mallows(6, 0.0, &mut rng), Permutation::identity(6));
        assert_eq!(sample_mallows_bmodel(6, 0.0, &mut rng), Permutation::identity(6));
        assert_eq!(sample_mallows_bmodel(1, 0.5, &mut rng), Permutation::identity(1));
        assert_eq!(sample_mallows(0, 0.5, &mut rng).n(), 0);
    }
}
