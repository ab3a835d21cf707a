//! Linear-time generation of a Mallows tree by recursive subtree-size
//! splitting, together with the almost-sure pathwise size bounds and the
//! uniform-BST coupling index.
//!
//! A tree of size `n` is generated root-down: a node of subtree size `S`
//! splits into a left subtree of size `K` and a right subtree of size
//! `S − 1 − K`, where `K` has the truncated-geometric law
//! `P(K = k) = (1−q)q^k / (1−q^S)` (uniform on `{0, …, S−1}` at `q = 1`).
//! The node set `{v : S(v) ≥ 1}` then has the law of the BST of a Mallows
//! permutation.

use rand::Rng;

use crate::bst::{Dir, LabeledTree, NodeAddress};

/// Threshold below which the q < 1 split formula has no usable precision and
/// the uniform (q = 1) split is its limit.
const Q1_SWITCH: f64 = 1e-12;

/// Per-node trail entry: subtree size, the uniform used to split it, and the
/// running product of edge factors (`U` on left steps, `1−U` on right steps).
#[derive(Clone, Debug)]
pub struct SplitRecord {
    pub addr: NodeAddress,
    pub size: u64,
    pub uniform: f64,
    pub product: f64,
}

fn left_size_inner(s: u64, q: f64, lq: f64, u: f64) -> u64 {
    debug_assert!(s >= 1);
    if q == 0.0 {
        return 0;
    }
    if q == 1.0 || (1.0 - q) * (s as f64) < Q1_SWITCH {
        return ((s as f64 * u) as u64).min(s - 1);
    }
    let sf = s as f64;
    let one_minus_qs = if sf * lq < -745.0 { 1.0 } else { -f64::exp_m1(sf * lq) };
    // P(K = 0) = (1−q)/(1−q^S); the common case when q is small.
    if u * one_minus_qs < 1.0 - q {
        return 0;
    }
    let k = (f64::ln_1p(-u * one_minus_qs) / lq) as u64;
    k.min(s - 1)
}

/// Left-subtree size of a node with subtree size `S`, split by the uniform
/// `U`: `floor(log(1 − U(1−q^S)) / log q)` for `q ∈ (0,1)`, `floor(S·U)` at
/// `q = 1`, and `0` at `q = 0`. Marginally `P(K = k) = (1−q)q^k/(1−q^S)`.
pub fn left_size(s: u64, q: f64, u: f64) -> u64 {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    assert!(u > 0.0 && u < 1.0, "U must lie in (0, 1)");
    let lq = if q > 0.0 && q < 1.0 { q.ln() } else { 0.0 };
    left_size_inner(s, q, lq, u)
}

/// Generates a size-`n` Mallows tree (sizes only, no labels). O(n) time,
/// explicit work stack, no recursion.
pub fn generate_tree<R: Rng + ?Sized>(n: u64, q: f64, rng: &mut R) -> LabeledTree {
    generate(n, q, rng, false).0
}

/// As [`generate_tree`], additionally recording `(U_v, P_v)` per node for
/// pathwise bound checks.
pub fn generate_tree_with_trail<R: Rng + ?Sized>(
    n: u64,
    q: f64,
    rng: &mut R,
) -> (LabeledTree, Vec<SplitRecord>) {
    let (tree, trail) = generate(n, q, rng, true);
    (tree, trail.expect("trail requested"))
}

struct WorkItem {
    parent: Option<(u32, Dir)>,
    size: u64,
    product: f64,
    addr: Option<NodeAddress>,
}

fn generate<R: Rng + ?Sized>(
    n: u64,
    q: f64,
    rng: &mut R,
    with_trail: bool,
) -> (LabeledTree, Option<Vec<SplitRecord>>) {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    let mut tree = LabeledTree::empty();
    let mut trail = if with_trail { Some(Vec::with_capacity(n as usize)) } else { None };
    if n == 0 {
        return (tree, trail);
    }
    let lq = if q > 0.0 && q < 1.0 { q.ln() } else { 0.0 };
    let mut stack = vec![WorkItem {
        parent: None,
        size: n,
        product: 1.0,
        addr: with_trail.then(NodeAddress::root),
    }];
    while let Some(item) = stack.pop() {
        let idx = tree.push_node(None, item.size);
        if let Some((p, d)) = item.parent {
            tree.link(p, d, idx);
        }
        // Leaves need no split; skipping their draw keeps the stream aligned
        // with sample_height. With a trail every record carries a uniform.
        let u: f64 = if item.size > 1 || with_trail {
            rng.gen_range(f64::MIN_POSITIVE..1.0)
        } else {
            0.5
        };
        if let Some(trail) = trail.as_mut() {
            trail.push(SplitRecord {
                addr: item.addr.clone().unwrap(),
                size: item.size,
                uniform: u,
                product: item.product,
            });
        }
        if item.size == 1 {
            continue;
        }
        let k = left_size_inner(item.size, q, lq, u);
        let right = item.size - 1 - k;
        // Right pushed first so the left child is created (and draws its
        // uniform) before the right child: a fixed, documented order.
        if right > 0 {
            stack.push(WorkItem {
                parent: Some((idx, Dir::Right)),
                size: right,
                product: item.product * (1.0 - u),
                addr: item.addr.as_ref().map(|a| a.child(Dir::Right)),
            });
        }
        if k > 0 {
            stack.push(WorkItem {
                parent: Some((idx, Dir::Left)),
                size: k,
                product: item.product * u,
                addr: item.addr.as_ref().map(|a| a.child(Dir::Left)),
            });
        }
    }
    (tree, trail)
}

/// Height of a size-`n` Mallows tree, sampled by the same splitting process
/// without materializing nodes. Memory O(height).
pub fn sample_height<R: Rng + ?Sized>(n: u64, q: f64, rng: &mut R) -> i64 {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    if n == 0 {
        return -1;
    }
    let lq = if q > 0.0 && q < 1.0 { q.ln() } else { 0.0 };
    let mut best = 0i64;
    let mut stack: Vec<(u64, i64)> = vec![(n, 0)];
    while let Some((s, d)) = stack.pop() {
        if d > best {
            best = d;
        }
        if s == 1 {
            continue;
        }
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let k = left_size_inner(s, q, lq, u);
        let right = s - 1 - k;
        if right > 0 {
            stack.push((right, d + 1));
        }
        if k > 0 {
            stack.push((k, d + 1));
        }
    }
    best
}

/// Checks the almost-sure pathwise bounds on every trail record. For
/// `q ∈ (0,1)`:
/// `log(1 − P_v(1−q^n))/log q − |v| ≤ S(v) ≤ n − log(q^n + P_v(1−q^n))/log q`;
/// at `q = 1` the limits `nP_v − |v| ≤ S(v) ≤ nP_v`. Returns one flag per
/// record; a small absolute slack absorbs floating-point rounding of the
/// bound values themselves (the bounds hold almost surely, not approximately).
pub fn check_path_bounds(trail: &[SplitRecord], n: u64, q: f64) -> Vec<bool> {
    assert!((0.0..=1.0).contains(&q), "q must lie in [0, 1]");
    let nf = n as f64;
    let eps = 1e-8 * nf.max(1.0);
    let uniform_regime = q == 1.0 || (1.0 - q) * nf < Q1_SWITCH;
    let lq = q.ln();
    // q^n may underflow to 0; the fallbacks below stay valid (weaker) bounds.
    let qn = if uniform_regime || q == 0.0 { 0.0 } else { (nf * lq).exp() };
    trail
        .iter()
        .map(|rec| {
            let s = rec.size as f64;
            let depth = rec.addr.depth() as f64;
            let p = rec.product;
            let (lo, hi) = if uniform_regime {
                (nf * p - depth, nf * p)
            } else if q == 0.0 {
                // Rightmost path: S(1^k) = n − k exactly, P_v = ∏(1−U) has no
                // constraint in the limit; only the trivial bounds remain.
                (1.0, nf)
            } else {
                // 1 − P(1−q^n) = (1−P) + P·q^n, computed without cancellation.
                let a = (1.0 - p) + p * qn;
                let lo = if a > 0.0 { a.ln() / lq - depth } else { nf - depth };
                // q^n + P(1−q^n) = P + (1−P)·q^n.
                let b = p + (1.0 - p) * qn;
                let hi = if b > 0.0 { nf - b.ln() / lq } else { nf };
                (lo, hi)
            };
            s >= lo - eps && s <= hi + eps
        })
        .collect()
}

/// The coupling index `m = floor((1−q^n)/(1−q^{ℓ+2}))` for which
/// `P(h(T_{n,q}) ≤ ℓ) ≤ P(h(T_{m,1}) ≤ ℓ)`.
pub fn coupling_m(n: u64, q: f64, ell: u64) -> u64 {
    assert!((0.0..=1.0).contains(&q) && q < 1.0, "q must lie in [0, 1)");
    if n == 0 {
        return 0;
    }
    if q == 0.0 {
        return 1;
    }
    let lq = q.ln();
    let num = -f64::exp_m1(n as f64 * lq);
    let den = -f64::exp_m1((ell + 2) as f64 * lq);
    (num / den) as u64
}
