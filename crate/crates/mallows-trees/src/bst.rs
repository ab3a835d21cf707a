//! Binary search trees built from sequences, node addressing, and the tree
//! statistics used throughout the crate (height, right depth, rightmost-path
//! decomposition).
//!
//! Trees can be deep (height `Θ(n)` for near-sorted input), so every traversal
//! here is iterative; no operation recurses.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BstError {
    #[error("duplicate element {0} in input sequence")]
    DuplicateElement(u64),
    #[error("operation undefined on the empty tree")]
    EmptyTree,
}

/// Direction of a child edge: `Left` is the bit `0`, `Right` is `1` in node
/// address words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Left,
    Right,
}

/// Address of a node in the infinite binary tree: a finite word over
/// `{Left, Right}`. The root is the empty word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct NodeAddress {
    word: Vec<Dir>,
}

impl NodeAddress {
    pub fn root() -> Self {
        NodeAddress { word: Vec::new() }
    }

    pub fn new(word: Vec<Dir>) -> Self {
        NodeAddress { word }
    }

    /// Parses a word of `0` (left) and `1` (right) characters.
    pub fn parse(s: &str) -> Option<Self> {
        let mut word = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => word.push(Dir::Left),
                '1' => word.push(Dir::Right),
                _ => return None,
            }
        }
        Some(NodeAddress { word })
    }

    /// The all-right word `1^d`.
    pub fn all_right(d: usize) -> Self {
        NodeAddress {
            word: vec![Dir::Right; d],
        }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[Dir] {
        &self.word
    }

    pub fn child(&self, d: Dir) -> Self {
        let mut word = self.word.clone();
        word.push(d);
        NodeAddress { word }
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "ε");
        }
        for d in &self.word {
            write!(f, "{}", if *d == Dir::Left { '0' } else { '1' })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Node {
    label: Option<u64>,
    size: u64,
    left: Option<u32>,
    right: Option<u32>,
}

/// A finite binary tree with optional labels and cached subtree sizes.
///
/// Nodes are stored in creation order (for trees built from a sequence this is
/// the insertion order), with the root at index 0 when nonempty.
#[derive(Clone, Debug)]
pub struct LabeledTree {
    nodes: Vec<Node>,
}

impl LabeledTree {
    pub fn empty() -> Self {
        LabeledTree { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push_node(&mut self, label: Option<u64>, size: u64) -> u32 {
        self.nodes.push(Node {
            label,
            size,
            left: None,
            right: None,
        });
        (self.nodes.len() - 1) as u32
    }

    pub(crate) fn link(&mut self, parent: u32, dir: Dir, child: u32) {
        let slot = match dir {
            Dir::Left => &mut self.nodes[parent as usize].left,
            Dir::Right => &mut self.nodes[parent as usize].right,
        };
        debug_assert!(slot.is_none());
        *slot = Some(child);
    }

    /// Max node depth; `-1` for the empty tree so the rightmost-path height
    /// identity `h(T) = max_k (h(T(1^k 0)) + k + 1)` holds with empty left
    /// subtrees contributing `k`.
    pub fn height(&self) -> i64 {
        if self.nodes.is_empty() {
            return -1;
        }
        let mut best = 0i64;
        let mut stack: Vec<(u32, i64)> = vec![(0, 0)];
        while let Some((idx, depth)) = stack.pop() {
            best = best.max(depth);
            let node = &self.nodes[idx as usize];
            if let Some(l) = node.left {
                stack.push((l, depth + 1));
            }
            if let Some(r) = node.right {
                stack.push((r, depth + 1));
            }
        }
        best
    }

    /// Length of the maximal all-right prefix present in the tree.
    pub fn right_depth(&self) -> Result<u64, BstError> {
        if self.nodes.is_empty() {
            return Err(BstError::EmptyTree);
        }
        let mut d = 0;
        let mut idx = 0u32;
        while let Some(r) = self.nodes[idx as usize].right {
            idx = r;
            d += 1;
        }
        Ok(d)
    }

    /// For `k = 0..=right_depth`, the size and height of the left subtree
    /// hanging off the k-th node of the rightmost path.
    pub fn rightmost_decomposition(&self) -> Result<Vec<SpineSubtree>, BstError> {
        if self.nodes.is_empty() {
            return Err(BstError::EmptyTree);
        }
        let mut out = Vec::new();
        let mut idx = Some(0u32);
        let mut k = 0u64;
        while let Some(i) = idx {
            let node = &self.nodes[i as usize];
            let (size, height) = match node.left {
                Some(l) => (self.nodes[l as usize].size, self.subtree_height(l)),
                None => (0, -1),
            };
            out.push(SpineSubtree { k, size, height });
            idx = node.right;
            k += 1;
        }
        Ok(out)
    }

    fn subtree_height(&self, root: u32) -> i64 {
        let mut best = 0i64;
        let mut stack: Vec<(u32, i64)> = vec![(root, 0)];
        while let Some((idx, depth)) = stack.pop() {
            best = best.max(depth);
            let node = &self.nodes[idx as usize];
            if let Some(l) = node.left {
                stack.push((l, depth + 1));
            }
            if let Some(r) = node.right {
                stack.push((r, depth + 1));
            }
        }
        best
    }

    pub fn node_present(&self, addr: &NodeAddress) -> bool {
        self.node_index(addr).is_some()
    }

    pub fn label_at(&self, addr: &NodeAddress) -> Option<u64> {
        self.node_index(addr)
            .and_then(|i| self.nodes[i as usize].label)
    }

    /// Cached size of the subtree rooted at `addr`, or 0 if absent.
    pub fn subtree_size(&self, addr: &NodeAddress) -> u64 {
        self.node_index(addr)
            .map_or(0, |i| self.nodes[i as usize].size)
    }

    fn node_index(&self, addr: &NodeAddress) -> Option<u32> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut idx = 0u32;
        for d in addr.word() {
            let node = &self.nodes[idx as usize];
            idx = match d {
                Dir::Left => node.left?,
                Dir::Right => node.right?,
            };
        }
        Some(idx)
    }

    /// Labels in symmetric (in-order) traversal; sorted iff the BST property
    /// holds.
    pub fn in_order_labels(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.nodes.len());
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack: Vec<u32> = Vec::new();
        let mut cur = Some(0u32);
        while cur.is_some() || !stack.is_empty() {
            while let Some(i) = cur {
                stack.push(i);
                cur = self.nodes[i as usize].left;
            }
            let i = stack.pop().unwrap();
            if let Some(l) = self.nodes[i as usize].label {
                out.push(l);
            }
            cur = self.nodes[i as usize].right;
        }
        out
    }

    /// Labels in node-creation order; for [`build_bst`] output this is the
    /// original insertion sequence.
    pub fn insertion_sequence(&self) -> Vec<u64> {
        self.nodes.iter().filter_map(|n| n.label).collect()
    }

    /// Address of every node, in creation order.
    pub fn addresses(&self) -> Vec<NodeAddress> {
        let mut addr = vec![NodeAddress::root(); self.nodes.len()];
        if self.nodes.is_empty() {
            return addr;
        }
        let mut stack: Vec<u32> = vec![0];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if let Some(l) = node.left {
                addr[l as usize] = addr[i as usize].child(Dir::Left);
                stack.push(l);
            }
            if let Some(r) = node.right {
                addr[r as usize] = addr[i as usize].child(Dir::Right);
                stack.push(r);
            }
        }
        addr
    }

    /// Left/right mirror image (labels kept in place).
    pub fn mirror(&self) -> LabeledTree {
        let mut nodes = self.nodes.clone();
        for n in &mut nodes {
            std::mem::swap(&mut n.left, &mut n.right);
        }
        LabeledTree { nodes }
    }

    /// Shape of the tree as a preorder bit string: `1` per node, `0` per
    /// absent child. Uniquely identifies the unlabeled shape.
    pub fn shape_key(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * self.nodes.len() + 1);
        // Work items: Some(node) to visit, None for an absent child.
        let mut stack: Vec<Option<u32>> = vec![if self.nodes.is_empty() {
            None
        } else {
            Some(0)
        }];
        while let Some(item) = stack.pop() {
            match item {
                None => out.push(0),
                Some(i) => {
                    out.push(1);
                    let node = &self.nodes[i as usize];
                    stack.push(node.right);
                    stack.push(node.left);
                }
            }
        }
        out
    }

    /// Nested-object JSON (`{"label": .., "left": .., "right": ..}` with
    /// absent fields omitted; the empty tree is `null`). Iterative, so deep
    /// trees are fine.
    pub fn to_json(&self) -> String {
        if self.nodes.is_empty() {
            return "null".to_string();
        }
        enum Item {
            Node(u32),
            Text(&'static str),
        }
        let mut out = String::with_capacity(16 * self.nodes.len());
        let mut stack = vec![Item::Node(0)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Text(s) => out.push_str(s),
                Item::Node(i) => {
                    let node = &self.nodes[i as usize];
                    out.push('{');
                    let mut first = true;
                    if let Some(l) = node.label {
                        out.push_str("\"label\":");
                        out.push_str(&l.to_string());
                        first = false;
                    }
                    stack.push(Item::Text("}"));
                    if let Some(r) = node.right {
                        stack.push(Item::Node(r));
                        stack.push(Item::Text(if first && node.left.is_none() {
                            "\"right\":"
                        } else {
                            ",\"right\":"
                        }));
                    }
                    if let Some(l) = node.left {
                        stack.push(Item::Node(l));
                        stack.push(Item::Text(if first { "\"left\":" } else { ",\"left\":" }));
                    }
                }
            }
        }
        out
    }
}

/// One entry of [`LabeledTree::rightmost_decomposition`]: the left subtree at
/// the k-th node of the rightmost path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpineSubtree {
    pub k: u64,
    pub size: u64,
    pub height: i64,
}

/// Builds the binary search tree of `seq` by successive insertion. The first
/// element becomes the root; later elements descend left or right by
/// comparison. Errors on duplicates.
pub fn build_bst(seq: &[u64]) -> Result<LabeledTree, BstError> {
    let mut tree = LabeledTree::empty();
    if seq.is_empty() {
        return Ok(tree);
    }
    tree.push_node(Some(seq[0]), 1);
    for &v in &seq[1..] {
        let mut idx = 0u32;
        loop {
            let node = &mut tree.nodes[idx as usize];
            node.size += 1;
            let label = node.label.unwrap();
            if v == label {
                return Err(BstError::DuplicateElement(v));
            }
            let slot = if v < label { node.left } else { node.right };
            match slot {
                Some(next) => idx = next,
                None => {
                    let dir = if v < label { Dir::Left } else { Dir::Right };
                    let child = tree.push_node(Some(v), 1);
                    tree.link(idx, dir, child);
                    break;
                }
            }
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_SEQ: [u64; 8] = [4, 1, 9, 7, 2, 6, 12, 8];

    #[test]
    fn example_tree_labels() {
        let t = build_bst(&EXAMPLE_SEQ).unwrap();
        assert_eq!(t.label_at(&NodeAddress::parse("01").unwrap()), Some(2));
        assert_eq!(t.label_at(&NodeAddress::parse("11").unwrap()), Some(12));
        assert_eq!(t.label_at(&NodeAddress::root()), Some(4));
        assert_eq!(t.len(), 8);
    }

    #[test]
    fn example_tree_stats() {
        let t = build_bst(&EXAMPLE_SEQ).unwrap();
        assert_eq!(t.height(), 3);
        assert_eq!(t.right_depth().unwrap(), 2);
        assert!(!t.node_present(&NodeAddress::parse("111").unwrap()));
        assert!(t.node_present(&NodeAddress::parse("100").unwrap()));
        assert!(t.node_present(&NodeAddress::parse("101").unwrap()));
        let dec = t.rightmost_decomposition().unwrap();
        assert_eq!(dec.len(), 3);
        assert_eq!(dec[0], SpineSubtree { k: 0, size: 2, height: 1 });
        assert_eq!(dec[1], SpineSubtree { k: 1, size: 3, height: 1 });
        assert_eq!(dec[2], SpineSubtree { k: 2, size: 0, height: -1 });
    }

    #[test]
    fn sorted_input_is_rightward_path() {
        let seq: Vec<u64> = (1..=6).collect();
        let t = build_bst(&seq).unwrap();
        assert_eq!(t.height(), 5);
        assert_eq!(t.right_depth().unwrap(), 5);
        for k in 0..6 {
            assert!(t.node_present(&NodeAddress::all_right(k)));
        }
        assert!(!t.node_present(&NodeAddress::all_right(6)));
        let dec = t.rightmost_decomposition().unwrap();
        assert!(dec.iter().all(|s| s.size == 0 && s.height == -1));
    }

    #[test]
    fn empty_and_single() {
        let t = build_bst(&[]).unwrap();
        assert_eq!(t.height(), -1);
        assert!(t.right_depth().is_err());
        assert!(!t.node_present(&NodeAddress::root()));

        let t = build_bst(&[5]).unwrap();
        assert_eq!(t.height(), 0);
        assert_eq!(t.right_depth().unwrap(), 0);
        assert_eq!(
            t.rightmost_decomposition().unwrap(),
            vec![SpineSubtree { k: 0, size: 0, height: -1 }]
        );
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(
            build_bst(&[3, 1, 3]),
            Err(BstError::DuplicateElement(3))
        ));
    }

    #[test]
    fn bst_property_and_insertion_order() {
        let t = build_bst(&EXAMPLE_SEQ).unwrap();
        let labels = t.in_order_labels();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        assert_eq!(t.insertion_sequence(), EXAMPLE_SEQ.to_vec());
    }

    #[test]
    fn decomposition_sizes_telescope() {
        let t = build_bst(&EXAMPLE_SEQ).unwrap();
        let dec = t.rightmost_decomposition().unwrap();
        let total: u64 = dec.iter().map(|s| s.size + 1).sum();
        assert_eq!(total, t.len() as u64);
    }

    #[test]
    fn height_identity_from_decomposition() {
        for seq in [&EXAMPLE_SEQ[..], &[1, 2, 3, 4], &[4, 3, 2, 1], &[2, 1, 3]] {
            let t = build_bst(seq).unwrap();
            let dec = t.rightmost_decomposition().unwrap();
            let h = dec
                .iter()
                .map(|s| s.height + s.k as i64 + 1)
                .max()
                .unwrap()
                .max(dec.len() as i64 - 1);
            assert_eq!(h, t.height());
        }
    }

    #[test]
    fn mirror_swaps_children() {
        let t = build_bst(&EXAMPLE_SEQ).unwrap();
        let m = t.mirror();
        assert_eq!(m.label_at(&NodeAddress::parse("10").unwrap()), Some(2));
        assert_eq!(m.label_at(&NodeAddress::parse("00").unwrap()), Some(12));
        assert_eq!(m.height(), t.height());
    }

    #[test]
    fn json_round_trip_structure() {
        let t = build_bst(&[2, 1, 3]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["label"], 2);
        assert_eq!(v["left"]["label"], 1);
        assert_eq!(v["right"]["label"], 3);
        assert_eq!(build_bst(&[]).unwrap().to_json(), "null");
    }

    #[test]
    fn deep_tree_no_stack_overflow() {
        let seq: Vec<u64> = (1..=200_000).collect();
        let t = build_bst(&seq).unwrap();
        assert_eq!(t.height(), 199_999);
        assert_eq!(t.right_depth().unwrap(), 199_999);
        let s = t.to_json();
        assert!(s.ends_with(&"}".repeat(8)));
        let _ = t.shape_key();
    }

    #[test]
    fn shape_key_distinguishes_shapes() {
        let a = build_bst(&[2, 1, 3]).unwrap().shape_key();
        let b = build_bst(&[1, 2, 3]).unwrap().shape_key();
        let c = build_bst(&[3, 2, 1]).unwrap().shape_key();
        assert_ne!(a, b);
        assert_ne!(b, c);
        assert_eq!(a, build_bst(&[2, 3, 1]).unwrap().shape_key());
    }
}
