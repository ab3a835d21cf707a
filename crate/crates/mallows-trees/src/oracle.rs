//! Brute-force exact reference laws for small `n`: enumerate all `n!`
//! permutations with their Mallows weights and tabulate tree statistics, plus
//! an exhaustive dynamic program over record-chain states. Everything here is
//! independent of the samplers and of the closed forms in [`crate::analytics`],
//! which is what makes it usable as a test oracle.

use std::collections::HashMap;

use thiserror::Error;

use crate::analytics::{AnalyticsError, PmfTable};
use crate::bst::{build_bst, LabeledTree, NodeAddress};
use crate::perm::mallows_normalizer;

/// Enumeration cap: 9! = 362,880 permutations.
pub const MAX_N: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle enumeration capped at n = {MAX_N}, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Pmf(#[from] AnalyticsError),
}

/// A law over arbitrary atoms (tree shapes, statistic values).
pub type ShapeLaw = HashMap<Vec<u8>, f64>;

/// Calls `visit(values, weight)` for every permutation of `[1, n]`, where
/// `weight = q^Inv(σ)/Z_{n,q}`.
fn for_each_weighted_perm(
    n: usize,
    q: f64,
    mut visit: impl FnMut(&[u64], f64),
) -> Result<(), OracleError> {
    if n > MAX_N {
        return Err(OracleError::TooLarge(n));
    }
    let z = mallows_normalizer(n, q);
    let mut values: Vec<u64> = (1..=n as u64).collect();
    // Heap's algorithm, iterative.
    let weight_of = |vs: &[u64]| -> f64 {
        let mut inv = 0u32;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                if vs[i] > vs[j] {
                    inv += 1;
                }
            }
        }
        if q == 0.0 {
            if inv == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            q.powi(inv as i32) / z
        }
    };
    visit(&values, weight_of(&values));
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                values.swap(0, i);
            } else {
                values.swap(c[i], i);
            }
            visit(&values, weight_of(&values));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(())
}

fn tree_of(values: &[u64]) -> LabeledTree {
    build_bst(values).expect("permutation values are distinct")
}

/// Exact height law of the Mallows tree by full enumeration.
pub fn exact_height_pmf(n: usize, q: f64) -> Result<PmfTable, OracleError> {
    if n == 0 {
        return Ok(PmfTable::point_mass(-1));
    }
    let mut mass = vec![0.0f64; n];
    for_each_weighted_perm(n, q, |vs, w| {
        mass[tree_of(vs).height() as usize] += w;
    })?;
    Ok(PmfTable::new(0, mass)?)
}

/// Exact right-depth law by full enumeration.
pub fn exact_right_depth_pmf(n: usize, q: f64) -> Result<PmfTable, OracleError> {
    if n == 0 {
        return Ok(PmfTable::point_mass(0));
    }
    let mut mass = vec![0.0f64; n];
    for_each_weighted_perm(n, q, |vs, w| {
        mass[tree_of(vs).right_depth().unwrap() as usize] += w;
    })?;
    Ok(PmfTable::new(0, mass)?)
}

/// Exact law of the root's left-subtree size (`σ(1) − 1`) by enumeration.
pub fn exact_split_pmf(n: usize, q: f64) -> Result<PmfTable, OracleError> {
    assert!(n >= 1);
    let mut mass = vec![0.0f64; n];
    for_each_weighted_perm(n, q, |vs, w| {
        mass[(vs[0] - 1) as usize] += w;
    })?;
    Ok(PmfTable::new(0, mass)?)
}

/// `P(addr ∈ T_{n,q})` by enumeration.
pub fn exact_occupancy(n: usize, q: f64, addr: &NodeAddress) -> Result<f64, OracleError> {
    let mut p = 0.0;
    for_each_weighted_perm(n, q, |vs, w| {
        if tree_of(vs).node_present(addr) {
            p += w;
        }
    })?;
    Ok(p)
}

/// Occupancy probability of every address reached at `(n, q)`, keyed by the
/// address word (0 = left, 1 = right).
pub fn exact_occupancy_map(n: usize, q: f64) -> Result<HashMap<Vec<u8>, f64>, OracleError> {
    let mut map: HashMap<Vec<u8>, f64> = HashMap::new();
    for_each_weighted_perm(n, q, |vs, w| {
        let t = tree_of(vs);
        for addr in t.addresses() {
            let key: Vec<u8> = addr
                .word()
                .iter()
                .map(|d| u8::from(*d == crate::bst::Dir::Right))
                .collect();
            *map.entry(key).or_insert(0.0) += w;
        }
    })?;
    Ok(map)
}

/// Exact law over unlabeled tree shapes ([`LabeledTree::shape_key`] atoms).
pub fn exact_tree_distribution(n: usize, q: f64) -> Result<ShapeLaw, OracleError> {
    let mut law = ShapeLaw::new();
    for_each_weighted_perm(n, q, |vs, w| {
        *law.entry(tree_of(vs).shape_key()).or_insert(0.0) += w;
    })?;
    Ok(law)
}

/// Checks that, conditioned on the root split size `k`, the left and right
/// subtree shapes are independent with the `(k, q)` and `(n−1−k, q)` Mallows
/// tree laws. Returns the largest absolute deviation found.
pub fn exact_conditional_subtrees(n: usize, q: f64) -> Result<f64, OracleError> {
    assert!(n >= 1);
    if n > 7 {
        return Err(OracleError::TooLarge(n));
    }
    // Joint accumulation: split size → (left shape, right shape) → weight.
    let mut joint: HashMap<(usize, Vec<u8>, Vec<u8>), f64> = HashMap::new();
    let mut split_mass = vec![0.0f64; n];
    for_each_weighted_perm(n, q, |vs, w| {
        let root = vs[0];
        let left: Vec<u64> = vs[1..].iter().copied().filter(|&v| v < root).collect();
        let right: Vec<u64> = vs[1..].iter().copied().filter(|&v| v > root).collect();
        let k = left.len();
        split_mass[k] += w;
        *joint
            .entry((k, tree_of(&left).shape_key(), tree_of(&right).shape_key()))
            .or_insert(0.0) += w;
    })?;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        if split_mass[k] <= 0.0 {
            continue;
        }
        let left_law = exact_tree_distribution(k, q)?;
        let right_law = exact_tree_distribution(n - 1 - k, q)?;
        for (ls, lp) in &left_law {
            for (rs, rp) in &right_law {
                let observed = joint
                    .get(&(k, ls.clone(), rs.clone()))
                    .copied()
                    .unwrap_or(0.0)
                    / split_mass[k];
                worst = worst.max((observed - lp * rp).abs());
            }
        }
    }
    Ok(worst)
}

/// `E[x^{C_n} y^{M_n}]` by exhaustive dynamic programming over the
/// record-chain transition probabilities (independent of the product-formula
/// MGF). The maximum is truncated where the geometric tails weighted by
/// `y^m` fall below 1e-18.
pub fn exact_record_mgf(n: usize, q: f64, x: f64, y: f64) -> Result<f64, OracleError> {
    assert!((0.0..1.0).contains(&q), "q must lie in [0, 1)");
    assert!(q * y.abs() < 1.0, "requires q|y| < 1");
    if q == 0.0 {
        return Ok((x * y).powi(n as i32));
    }
    let rho = (q * y.abs().max(1.0)).min(0.999_999);
    let extra = ((1e-18f64).ln() / rho.ln()).ceil() as usize;
    let m_max = n + extra.clamp(64, 20_000);
    // prob[c][m] after t steps; transitions use prefix sums over m.
    let mut prob = vec![vec![0.0f64; m_max + 1]; n + 1];
    prob[0][0] = 1.0;
    for t in 0..n {
        let mut next = vec![vec![0.0f64; m_max + 1]; n + 1];
        for c in 0..=t {
            // Stay: m unchanged, prob 1 − q^{m−t}.
            for m in t..=m_max {
                let p = prob[c][m];
                if p > 0.0 {
                    next[c][m] += p * (1.0 - q.powi((m - t) as i32));
                }
            }
            // Jump: to (c+1, m2) from any m < m2, prob q^{m2−t−1}(1−q).
            let mut prefix = 0.0f64;
            for m2 in 1..=m_max {
                prefix += prob[c][m2 - 1];
                if prefix > 0.0 && m2 >= t + 1 {
                    next[c + 1][m2] += prefix * q.powi((m2 - t - 1) as i32) * (1.0 - q);
                }
            }
        }
        prob = next;
    }
    let mut out = 0.0;
    for c in 0..=n {
        let xc = x.powi(c as i32);
        for m in 0..=m_max {
            let p = prob[c][m];
            if p > 0.0 {
                out += p * xc * y.powi(m as i32);
            }
        }
    }
    Ok(out)
}
