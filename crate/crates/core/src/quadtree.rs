//! Node arithmetic over the implicit full-resolution quadtree and pruned-tree
//! selections.
//!
//! Nodes are addressed by `(level, morton)` where the Morton code interleaves
//! the node's row and column at its own level (column bits on even positions,
//! row bits on odd positions). The four children of `(l, m)` are therefore
//! `(l + 1, 4m + k)` for `k = 2 * row_bit + col_bit`.
//!
//! Internally every node also has a flat heap index
//! `(4^level - 1) / 3 + morton`, under which the children of `i` are
//! `4i + 1 ..= 4i + 4` and the parent of `i` is `(i - 1) / 4`. A
//! [`TreeSelection`] is a bit per expandable node (level below the world
//! depth) stored in that flat order, which is also ascending
//! `(level, morton)` order.

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};

/// Deepest world supported. 4^15 cells is far beyond anything that fits in
/// memory anyway.
pub const MAX_DEPTH: u8 = 15;

/// Default cap on exhaustive enumeration (depth 3 already has 83,522 trees).
pub const DEFAULT_ENUMERATION_CAP: u8 = 3;

/// Interleave `row` and `col` into a Morton code.
pub fn morton_encode(row: u32, col: u32) -> u64 {
    let mut code = 0u64;
    for bit in 0..32 {
        code |= (((col >> bit) & 1) as u64) << (2 * bit);
        code |= (((row >> bit) & 1) as u64) << (2 * bit + 1);
    }
    code
}

/// Inverse of [`morton_encode`], returning `(row, col)`.
pub fn morton_decode(code: u64) -> (u32, u32) {
    let mut row = 0u32;
    let mut col = 0u32;
    for bit in 0..32 {
        col |= (((code >> (2 * bit)) & 1) as u32) << bit;
        row |= (((code >> (2 * bit + 1)) & 1) as u32) << bit;
    }
    (row, col)
}

/// Number of nodes on levels `0..level`, i.e. the flat index of `(level, 0)`.
pub fn level_offset(level: u8) -> usize {
    ((1usize << (2 * level as usize)) - 1) / 3
}

/// Number of expandable nodes (levels `0..depth`) of a depth-`depth` tree.
pub fn expandable_count(depth: u8) -> usize {
    level_offset(depth)
}

/// Total number of nodes (levels `0..=depth`).
pub fn node_count(depth: u8) -> usize {
    level_offset(depth + 1)
}

/// Level of the node stored at flat index `flat`.
pub fn level_of_flat(flat: usize) -> u8 {
    let mut level = 0u8;
    while level_offset(level + 1) <= flat {
        level += 1;
    }
    level
}

/// A node of the full-resolution quadtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub level: u8,
    pub index: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { level: 0, index: 0 };

    pub fn new(level: u8, index: u64) -> Self {
        debug_assert!(index < 1u64 << (2 * level as u64));
        NodeId { level, index }
    }

    /// Node covering finest-grid cell `(row, col)` at `level` of a
    /// depth-`depth` tree.
    pub fn covering(row: u32, col: u32, level: u8, depth: u8) -> Self {
        let shift = depth - level;
        NodeId::new(level, morton_encode(row >> shift, col >> shift))
    }

    pub fn from_flat(flat: usize) -> Self {
        let level = level_of_flat(flat);
        NodeId::new(level, (flat - level_offset(level)) as u64)
    }

    pub fn flat(self) -> usize {
        level_offset(self.level) + self.index as usize
    }

    /// The four children in Morton order; requires `level < depth`.
    pub fn children(self, depth: u8) -> Result<[NodeId; 4]> {
        if self.level >= depth {
            return Err(Error::Level {
                level: self.level,
                depth,
            });
        }
        let base = self.index * 4;
        let level = self.level + 1;
        Ok([0, 1, 2, 3].map(|k| NodeId::new(level, base + k)))
    }

    /// Parent node; requires `level > 0`.
    pub fn parent(self) -> Result<NodeId> {
        if self.level == 0 {
            return Err(Error::Level {
                level: 0,
                depth: 0,
            });
        }
        Ok(NodeId::new(self.level - 1, self.index / 4))
    }

    /// `(row, col)` of this node on its own level's grid.
    pub fn position(self) -> (u32, u32) {
        morton_decode(self.index)
    }

    /// Top-left finest cell and side length (in finest cells) of the square
    /// this node covers in a depth-`depth` world.
    pub fn square(self, depth: u8) -> (u32, u32, u32) {
        let shift = depth - self.level;
        let (row, col) = self.position();
        (row << shift, col << shift, 1 << shift)
    }
}

/// Expansion vector over the expandable nodes of a depth-`depth` tree.
///
/// May hold precedence violations; use [`validate_selection`] to check.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeSelection {
    depth: u8,
    bits: Vec<bool>,
}

impl TreeSelection {
    /// Root-only tree.
    pub fn empty(depth: u8) -> Self {
        TreeSelection {
            depth,
            bits: vec![false; expandable_count(depth)],
        }
    }

    /// Fully expanded tree (every finest cell is a leaf).
    pub fn full(depth: u8) -> Self {
        TreeSelection {
            depth,
            bits: vec![true; expandable_count(depth)],
        }
    }

    pub fn from_bits(depth: u8, bits: Vec<bool>) -> Result<Self> {
        let expected = expandable_count(depth);
        if bits.len() != expected {
            return Err(Error::SelectionSize {
                expected,
                found: bits.len(),
            });
        }
        Ok(TreeSelection { depth, bits })
    }

    /// Builds a selection from expanded node ids. Nodes must be expandable.
    pub fn from_expanded(depth: u8, nodes: &[NodeId]) -> Result<Self> {
        let mut z = TreeSelection::empty(depth);
        for &n in nodes {
            if n.level >= depth || n.index >= 1u64 << (2 * n.level as u64) {
                return Err(Error::Level {
                    level: n.level,
                    depth,
                });
            }
            z.bits[n.flat()] = true;
        }
        Ok(z)
    }

    /// Reconstructs the unique tree whose leaf set is `leaves`: every proper
    /// ancestor of a leaf is expanded.
    pub fn from_leaves(depth: u8, leaves: &[NodeId]) -> Result<Self> {
        let mut z = TreeSelection::empty(depth);
        for &leaf in leaves {
            if leaf.level > depth {
                return Err(Error::Level {
                    level: leaf.level,
                    depth,
                });
            }
            let mut node = leaf;
            while node.level > 0 {
                node = node.parent()?;
                z.bits[node.flat()] = true;
            }
        }
        Ok(z)
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_expanded(&self, node: NodeId) -> bool {
        node.level < self.depth && self.bits[node.flat()]
    }

    pub fn set(&mut self, node: NodeId, expanded: bool) {
        self.bits[node.flat()] = expanded;
    }

    /// Expanded nodes in ascending `(level, index)` order.
    pub fn expanded(&self) -> Vec<NodeId> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| NodeId::from_flat(i))
            .collect()
    }

    pub fn expanded_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Sorted `[level, index]` pairs, the JSON wire form.
    pub fn to_pairs(&self) -> Vec<[u64; 2]> {
        self.expanded()
            .into_iter()
            .map(|n| [n.level as u64, n.index])
            .collect()
    }

    pub fn from_pairs(depth: u8, pairs: &[[u64; 2]]) -> Result<Self> {
        let nodes = pairs
            .iter()
            .map(|&[level, index]| {
                let level = u8::try_from(level)
                    .map_err(|_| Error::malformed("selection", format!("level {level}")))?;
                Ok(NodeId { level, index })
            })
            .collect::<Result<Vec<_>>>()?;
        TreeSelection::from_expanded(depth, &nodes)
    }

    /// `(parent, child)` pairs where the child is expanded but the parent
    /// is not.
    pub fn violations(&self) -> Vec<(NodeId, NodeId)> {
        (1..self.bits.len())
            .filter(|&i| self.bits[i] && !self.bits[(i - 1) / 4])
            .map(|i| (NodeId::from_flat((i - 1) / 4), NodeId::from_flat(i)))
            .collect()
    }
}

impl Serialize for TreeSelection {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = self.to_pairs();
        let mut seq = serializer.serialize_seq(Some(pairs.len()))?;
        for pair in &pairs {
            seq.serialize_element(pair)?;
        }
        seq.end()
    }
}

/// Checks `z` against a depth-`depth` world. Returns the violated
/// `(parent, child)` pairs; an empty list means the selection is a valid tree.
pub fn validate_selection(z: &TreeSelection, depth: u8) -> Result<Vec<(NodeId, NodeId)>> {
    let expected = expandable_count(depth);
    if z.depth != depth || z.bits.len() != expected {
        return Err(Error::SelectionSize {
            expected,
            found: z.bits.len(),
        });
    }
    Ok(z.violations())
}

fn require_valid(z: &TreeSelection) -> Result<()> {
    let violations = z.violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Precedence(violations.len()))
    }
}

/// Leaf set of the pruned tree in ascending `(level, index)` order. The
/// leaves tile the grid.
pub fn leaves_of(z: &TreeSelection) -> Result<Vec<NodeId>> {
    require_valid(z)?;
    let mut leaves = Vec::new();
    let mut stack = vec![NodeId::ROOT];
    while let Some(node) = stack.pop() {
        if z.is_expanded(node) {
            stack.extend(node.children(z.depth)?);
        } else {
            leaves.push(node);
        }
    }
    leaves.sort_unstable();
    Ok(leaves)
}

/// Every valid selection of a depth-`depth` tree exactly once, with the
/// default cap.
pub fn enumerate_all_selections(depth: u8) -> Result<impl Iterator<Item = TreeSelection>> {
    enumerate_all_selections_capped(depth, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_all_selections_capped(
    depth: u8,
    cap: u8,
) -> Result<impl Iterator<Item = TreeSelection>> {
    if depth > cap {
        return Err(Error::EnumerationCap { depth, cap });
    }
    let sets = if depth == 0 {
        vec![Vec::new()]
    } else {
        subtree_sets(0, depth)
    };
    Ok(sets.into_iter().map(move |set| {
        let mut z = TreeSelection::empty(depth);
        for flat in set {
            z.bits[flat] = true;
        }
        z
    }))
}

/// Expanded-node sets of every valid pruning of the subtree rooted at flat
/// index `flat`, including the one where `flat` itself stays collapsed.
fn subtree_sets(flat: usize, depth: u8) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let first_child = 4 * flat + 1;
    if first_child >= expandable_count(depth) {
        out.push(vec![flat]);
        return out;
    }
    let mut combos: Vec<Vec<usize>> = vec![vec![flat]];
    for k in 0..4 {
        let child_sets = subtree_sets(first_child + k, depth);
        let mut next = Vec::with_capacity(combos.len() * child_sets.len());
        for combo in &combos {
            for set in &child_sets {
                let mut joined = combo.clone();
                joined.extend_from_slice(set);
                next.push(joined);
            }
        }
        combos = next;
    }
    out.extend(combos);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn root_children_and_parent() {
        let kids = NodeId::ROOT.children(2).unwrap();
        assert_eq!(
            kids,
            [
                NodeId::new(1, 0),
                NodeId::new(1, 1),
                NodeId::new(1, 2),
                NodeId::new(1, 3)
            ]
        );
        assert_eq!(NodeId::new(2, 7).parent().unwrap(), NodeId::new(1, 1));
        assert!(NodeId::ROOT.parent().is_err());
        assert!(NodeId::new(2, 0).children(2).is_err());
    }

    #[test]
    fn parent_inverts_children_exhaustively() {
        let depth = 3;
        for flat in 0..expandable_count(depth) {
            let n = NodeId::from_flat(flat);
            for (k, c) in n.children(depth).unwrap().into_iter().enumerate() {
                assert_eq!(c.parent().unwrap(), n);
                assert_eq!(c.flat(), 4 * flat + 1 + k);
            }
        }
    }

    #[test]
    fn morton_roundtrip_and_covering() {
        for row in 0..16 {
            for col in 0..16 {
                assert_eq!(morton_decode(morton_encode(row, col)), (row, col));
                let leaf = NodeId::covering(row, col, 4, 4);
                assert_eq!(leaf.square(4), (row, col, 1));
                let coarse = NodeId::covering(row, col, 2, 4);
                let (r0, c0, size) = coarse.square(4);
                assert!(r0 <= row && row < r0 + size && c0 <= col && col < c0 + size);
            }
        }
    }

    #[test]
    fn validation_reports_orphans() {
        let z = TreeSelection::empty(2);
        assert!(validate_selection(&z, 2).unwrap().is_empty());
        let orphan = TreeSelection::from_expanded(2, &[NodeId::new(1, 2)]).unwrap();
        assert_eq!(
            validate_selection(&orphan, 2).unwrap(),
            vec![(NodeId::ROOT, NodeId::new(1, 2))]
        );
        assert!(validate_selection(&z, 3).is_err());
        assert!(leaves_of(&orphan).is_err());
    }

    #[test]
    fn sampled_selections_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let depth = 4;
        for _ in 0..200 {
            let mut z = TreeSelection::empty(depth);
            let mut frontier = vec![NodeId::ROOT];
            while let Some(n) = frontier.pop() {
                if n.level < depth && rng.gen_bool(0.6) {
                    z.set(n, true);
                    frontier.extend(n.children(depth).unwrap());
                }
            }
            assert!(validate_selection(&z, depth).unwrap().is_empty());
        }
    }

    #[test]
    fn leaves_of_simple_trees() {
        assert_eq!(leaves_of(&TreeSelection::empty(3)).unwrap(), vec![NodeId::ROOT]);
        let full = leaves_of(&TreeSelection::full(1)).unwrap();
        assert_eq!(full, (0..4).map(|i| NodeId::new(1, i)).collect::<Vec<_>>());
        // root plus two corner quadrants expanded
        let z = TreeSelection::from_expanded(
            2,
            &[NodeId::ROOT, NodeId::new(1, 0), NodeId::new(1, 3)],
        )
        .unwrap();
        let leaves = leaves_of(&z).unwrap();
        assert_eq!(leaves.len(), 10);
        assert_eq!(TreeSelection::from_leaves(2, &leaves).unwrap(), z);
    }

    #[test]
    fn enumeration_counts_follow_recurrence() {
        let mut expected = 2u64;
        for depth in 1..=3u8 {
            let all: Vec<_> = enumerate_all_selections(depth).unwrap().collect();
            assert_eq!(all.len() as u64, expected);
            if depth < 3 {
                expected = 1 + expected.pow(4);
            }
        }
        assert_eq!(enumerate_all_selections(3).unwrap().count(), 83_522);
        assert!(enumerate_all_selections(4).is_err());
        assert_eq!(enumerate_all_selections(0).unwrap().count(), 1);
    }

    #[test]
    fn enumeration_is_valid_and_distinct() {
        let all: Vec<_> = enumerate_all_selections(2).unwrap().collect();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
        assert!(all.iter().all(|z| z.violations().is_empty()));
    }

    #[test]
    fn pairs_roundtrip() {
        let z = TreeSelection::from_expanded(3, &[NodeId::ROOT, NodeId::new(1, 1), NodeId::new(2, 5)])
            .unwrap();
        assert_eq!(z.to_pairs(), vec![[0, 0], [1, 1], [2, 5]]);
        assert_eq!(TreeSelection::from_pairs(3, &z.to_pairs()).unwrap(), z);
        assert_eq!(serde_json::to_string(&z).unwrap(), "[[0,0],[1,1],[2,5]]");
    }
}
