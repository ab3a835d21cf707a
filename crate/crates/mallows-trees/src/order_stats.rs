//! Order-statistics indices built on binary indexed trees.
//!
//! Two flavours are needed by the samplers: a fixed universe `[1, n]` from
//! which values are removed one by one (`RankSelect`), and a lazily growing
//! universe of "columns" in which values are marked used and the k-th unused
//! column is queried (`UnusedColumns`).

/// Binary indexed tree over `[1, cap]` with prefix sums and descent search.
#[derive(Clone, Debug)]
struct Fenwick {
    tree: Vec<u64>,
    cap: usize,
    log2: u32,
}

impl Fenwick {
    fn zeros(cap: usize) -> Self {
        let log2 = usize::BITS - cap.max(1).leading_zeros();
        Fenwick {
            tree: vec![0; cap + 1],
            cap,
            log2,
        }
    }

    /// O(cap) construction from per-position counts.
    fn from_counts(counts: impl Iterator<Item = u64>, cap: usize) -> Self {
        let mut f = Fenwick::zeros(cap);
        for (i0, c) in counts.enumerate() {
            let i = i0 + 1;
            f.tree[i] += c;
            let j = i + (i & i.wrapping_neg());
            if j <= cap {
                f.tree[j] += f.tree[i];
            }
        }
        f
    }

    fn add(&mut self, mut i: usize, delta: i64) {
        while i <= self.cap {
            self.tree[i] = (self.tree[i] as i64 + delta) as u64;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index `i` with prefix-sum up to `i` at least `k` (1-based
    /// `k`), assuming one exists.
    fn select(&self, mut k: u64) -> usize {
        let mut pos = 0;
        let mut step = 1usize << self.log2;
        while step > 0 {
            let next = pos + step;
            if next <= self.cap && self.tree[next] < k {
                k -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos + 1
    }
}

/// Fixed universe `{1, …, n}` supporting "k-th smallest present" and removal.
#[derive(Clone, Debug)]
pub struct RankSelect {
    fen: Fenwick,
    remaining: usize,
}

impl RankSelect {
    /// All of `1..=n` initially present.
    pub fn full(n: usize) -> Self {
        RankSelect {
            fen: Fenwick::from_counts(std::iter::repeat(1).take(n), n),
            remaining: n,
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// The k-th smallest present value, 1-based. Panics if `k > remaining`.
    pub fn kth_present(&self, k: usize) -> usize {
        assert!(k >= 1 && k <= self.remaining, "rank out of range");
        self.fen.select(k as u64)
    }

    /// Removes a present value.
    pub fn remove(&mut self, v: usize) {
        self.fen.add(v, -1);
        self.remaining -= 1;
    }
}

/// Growing universe of columns `{1, 2, …}` supporting "k-th smallest unused"
/// and mark-used. The backing index covers `[1, cap]` and doubles on demand.
#[derive(Clone, Debug)]
pub struct UnusedColumns {
    used: Vec<bool>, // used[i - 1] for column i
    fen: Fenwick,    // counts of used columns
    used_count: usize,
}

impl UnusedColumns {
    pub fn new() -> Self {
        let cap = 64;
        UnusedColumns {
            used: vec![false; cap],
            fen: Fenwick::zeros(cap),
            used_count: 0,
        }
    }

    fn cap(&self) -> usize {
        self.used.len()
    }

    fn grow_to(&mut self, cap: usize) {
        let cap = cap.max(self.cap() * 2);
        self.used.resize(cap, false);
        self.fen = Fenwick::from_counts(self.used.iter().map(|&u| u as u64), cap);
    }

    /// The k-th smallest unused column (1-based `k`), marking it used.
    pub fn take_kth_unused(&mut self, k: usize) -> usize {
        assert!(k >= 1);
        while self.cap() - self.used_count < k {
            self.grow_to(self.cap() * 2);
        }
        // Descend on "unused in block" = block width − used count.
        let mut pos = 0usize;
        let mut step = 1usize << self.fen.log2;
        let mut k = k as u64;
        while step > 0 {
            let next = pos + step;
            if next <= self.fen.cap {
                let unused = (step as u64) - self.fen.tree[next];
                if unused < k {
                    k -= unused;
                    pos = next;
                }
            }
            step >>= 1;
        }
        let col = pos + 1;
        debug_assert!(!self.used[col - 1]);
        self.used[col - 1] = true;
        self.used_count += 1;
        self.fen.add(col, 1);
        col
    }
}

impl Default for UnusedColumns {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_select_removal_order() {
        let mut rs = RankSelect::full(5);
        assert_eq!(rs.kth_present(1), 1);
        assert_eq!(rs.kth_present(5), 5);
        rs.remove(3);
        assert_eq!(rs.remaining(), 4);
        assert_eq!(rs.kth_present(3), 4);
        rs.remove(1);
        assert_eq!(rs.kth_present(1), 2);
        assert_eq!(rs.kth_present(3), 5);
    }

    #[test]
    fn unused_columns_basic() {
        let mut uc = UnusedColumns::new();
        assert_eq!(uc.take_kth_unused(1), 1);
        assert_eq!(uc.take_kth_unused(1), 2);
        assert_eq!(uc.take_kth_unused(2), 4);
        assert_eq!(uc.take_kth_unused(1), 3);
        assert_eq!(uc.take_kth_unused(1), 5);
    }

    #[test]
    fn unused_columns_grows() {
        let mut uc = UnusedColumns::new();
        assert_eq!(uc.take_kth_unused(1000), 1000);
        assert_eq!(uc.take_kth_unused(999), 999);
        assert_eq!(uc.take_kth_unused(999), 1001);
    }

    #[test]
    fn unused_columns_matches_naive() {
        let mut uc = UnusedColumns::new();
        let mut naive: Vec<usize> = (1..=4096).collect();
        let mut state = 0x1234_5678_u64;
        for _ in 0..500 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let k = (state >> 33) as usize % 200 + 1;
            let expect = naive.remove(k - 1);
            assert_eq!(uc.take_kth_unused(k), expect);
        }
    }
}
