//! Information-theoretic quantities on finite distributions, the per-node
//! information increments of the quadtree, and the direct mutual-information
//! oracle used to cross-check them.
//!
//! All logarithms are natural (nats) and `0 log 0 = 0`.
//!
//! Expanding node `t` with children `t'_1..t'_4` and child-mass distribution
//! `Π = [p(t'_i) / p(t)]` adds `p(t) H(Π)` to `I(T;X)` and
//! `p(t) JS_Π(p(y|t'_1), .., p(y|t'_4))` to `I(T;Y)`, independently of the
//! rest of the tree. A tree's information is the sum of these increments
//! over its expanded nodes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridWorld;
use crate::quadtree::{self, leaves_of, NodeId, TreeSelection};

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// `KL(p || q)` in nats. Returns `+inf` when some `q(i) = 0 < p(i)`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).ln();
        }
    }
    acc
}

/// Generalized Jensen-Shannon divergence: the `weights`-average KL of each
/// component to the `weights`-mixture of all components.
pub fn js(weights: &[f64], components: &[&[f64]]) -> f64 {
    debug_assert_eq!(weights.len(), components.len());
    let mixture = mix(weights, components);
    weights
        .iter()
        .zip(components)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, c)| w * kl(c, &mixture))
        .sum()
}

fn mix(weights: &[f64], components: &[&[f64]]) -> Vec<f64> {
    let m = components.first().map_or(0, |c| c.len());
    let mut out = vec![0.0; m];
    for (&w, c) in weights.iter().zip(components) {
        if w > 0.0 {
            for (o, v) in out.iter_mut().zip(c.iter()) {
                *o += w * v;
            }
        }
    }
    out
}

/// `(I(T;X), I(T;Y))` of an abstraction, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InfoValue {
    pub i_x: f64,
    pub i_y: f64,
}

/// Per-node masses, abstract relevance distributions and information
/// increments of the full-resolution tree, indexed by flat node index.
#[derive(Debug, Clone)]
pub struct NodeInfoTable {
    depth: u8,
    outcomes: usize,
    p_t: Vec<f64>,
    p_y_given_t: Vec<f64>,
    delta_x: Vec<f64>,
    delta_y: Vec<f64>,
}

impl NodeInfoTable {
    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Number of expandable nodes, the length of a selection vector.
    pub fn expandable(&self) -> usize {
        self.delta_x.len()
    }

    pub fn p_t(&self, node: NodeId) -> f64 {
        self.p_t[node.flat()]
    }

    pub fn p_y_given_t(&self, node: NodeId) -> &[f64] {
        let i = node.flat() * self.outcomes;
        &self.p_y_given_t[i..i + self.outcomes]
    }

    pub fn delta_x(&self, node: NodeId) -> f64 {
        self.delta_x[node.flat()]
    }

    pub fn delta_y(&self, node: NodeId) -> f64 {
        self.delta_y[node.flat()]
    }

    /// `ΔI_X` per expandable node in flat order.
    pub fn delta_x_vec(&self) -> &[f64] {
        &self.delta_x
    }

    /// `ΔI_Y` per expandable node in flat order.
    pub fn delta_y_vec(&self) -> &[f64] {
        &self.delta_y
    }

    /// Debug dump: `level,index,p_t,delta_x,delta_y` per expandable node.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("level,index,p_t,delta_x,delta_y\n");
        for flat in 0..self.expandable() {
            let n = NodeId::from_flat(flat);
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e}\n",
                n.level, n.index, self.p_t[flat], self.delta_x[flat], self.delta_y[flat]
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Builds the node table in one bottom-up pass.
pub fn build_node_table(world: &GridWorld) -> NodeInfoTable {
    let depth = world.depth();
    let m = world.outcomes();
    let total = quadtree::node_count(depth);
    let expandable = quadtree::expandable_count(depth);
    let uniform = 1.0 / m as f64;

    let mut p_t = vec![0.0; total];
    let mut p_y = vec![uniform; total * m];
    let mut delta_x = vec![0.0; expandable];
    let mut delta_y = vec![0.0; expandable];

    let side = world.side();
    for row in 0..side {
        for col in 0..side {
            let cell = row * side + col;
            let flat = NodeId::covering(row as u32, col as u32, depth, depth).flat();
            let mass = world.p_x()[cell];
            p_t[flat] = mass;
            if mass > 0.0 {
                p_y[flat * m..(flat + 1) * m].copy_from_slice(world.p_y_given(cell));
            }
        }
    }

    for flat in (0..expandable).rev() {
        let first = 4 * flat + 1;
        let masses = [p_t[first], p_t[first + 1], p_t[first + 2], p_t[first + 3]];
        let mass: f64 = masses.iter().sum();
        p_t[flat] = mass;
        if mass <= 0.0 {
            continue;
        }
        let pi = masses.map(|c| c / mass);
        let (head, tail) = p_y.split_at_mut(first * m);
        let children: Vec<&[f64]> = (0..4).map(|k| &tail[k * m..(k + 1) * m]).collect();
        let mixture = mix(&pi, &children);
        delta_x[flat] = mass * entropy(&pi);
        delta_y[flat] = mass
            * pi.iter()
                .zip(&children)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, c)| w * kl(c, &mixture))
                .sum::<f64>();
        head[flat * m..(flat + 1) * m].copy_from_slice(&mixture);
    }

    NodeInfoTable {
        depth,
        outcomes: m,
        p_t,
        p_y_given_t: p_y,
        delta_x,
        delta_y,
    }
}

/// Tree information as the sum of node increments over expanded nodes.
pub fn tree_info(z: &TreeSelection, table: &NodeInfoTable) -> Result<InfoValue> {
    if z.len() != table.expandable() {
        return Err(Error::SelectionSize {
            expected: table.expandable(),
            found: z.len(),
        });
    }
    let violations = z.violations();
    if !violations.is_empty() {
        return Err(Error::Precedence(violations.len()));
    }
    Ok(selection_info(z.bits(), table))
}

/// Sums increments over set bits in flat order without validating.
pub(crate) fn selection_info(bits: &[bool], table: &NodeInfoTable) -> InfoValue {
    let mut info = InfoValue::default();
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        info.i_x += table.delta_x[i];
        info.i_y += table.delta_y[i];
    }
    info
}

/// The deterministic encoder `p(t|x)` induced by a pruned tree: every cell
/// is mapped to the leaf that covers it.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub leaves: Vec<NodeId>,
    /// Leaf position in `leaves` for each row-major cell.
    pub assignment: Vec<usize>,
}

pub fn encoder(z: &TreeSelection, world: &GridWorld) -> Result<Encoder> {
    let depth = world.depth();
    if z.depth() != depth {
        return Err(Error::SelectionSize {
            expected: quadtree::expandable_count(depth),
            found: z.len(),
        });
    }
    let leaves = leaves_of(z)?;
    let mut position = vec![usize::MAX; quadtree::node_count(depth)];
    for (k, leaf) in leaves.iter().enumerate() {
        position[leaf.flat()] = k;
    }
    let side = world.side();
    let mut assignment = Vec::with_capacity(side * side);
    for row in 0..side as u32 {
        for col in 0..side as u32 {
            let mut node = NodeId::ROOT;
            while z.is_expanded(node) {
                node = NodeId::covering(row, col, node.level + 1, depth);
            }
            assignment.push(position[node.flat()]);
        }
    }
    Ok(Encoder { leaves, assignment })
}

impl Encoder {
    /// `I(T;X)` and `I(T;Y)` evaluated from the joint tables by direct
    /// summation of the KL definition.
    pub fn info(&self, world: &GridWorld) -> InfoValue {
        let m = world.outcomes();
        let leaves = self.leaves.len();
        let joint = world.joint_distribution();
        let p_y = joint.marginal_y();
        let mut p_t = vec![0.0; leaves];
        let mut p_ty = vec![0.0; leaves * m];
        for (cell, &t) in self.assignment.iter().enumerate() {
            p_t[t] += world.p_x()[cell];
            for y in 0..m {
                p_ty[t * m + y] += joint.get(cell, y);
            }
        }

        let mut i_x = 0.0;
        for (cell, &t) in self.assignment.iter().enumerate() {
            let p_tx = world.p_x()[cell];
            if p_tx > 0.0 {
                i_x += p_tx * (p_tx / (p_t[t] * world.p_x()[cell])).ln();
            }
        }
        let mut i_y = 0.0;
        for t in 0..leaves {
            for y in 0..m {
                let v = p_ty[t * m + y];
                if v > 0.0 {
                    i_y += v * (v / (p_t[t] * p_y[y])).ln();
                }
            }
        }
        InfoValue { i_x, i_y }
    }
}

/// Independent oracle for [`tree_info`]: builds the encoder and evaluates
/// the mutual-information definition directly.
pub fn direct_mi(z: &TreeSelection, world: &GridWorld) -> Result<InfoValue> {
    Ok(encoder(z, world)?.info(world))
}

/// `I(X;Y)` of the world.
pub fn mi_xy(world: &GridWorld) -> f64 {
    let joint = world.joint_distribution();
    let p_y = joint.marginal_y();
    let m = joint.outcomes;
    let mut acc = 0.0;
    for (cell, &px) in world.p_x().iter().enumerate() {
        for (y, &py) in p_y.iter().enumerate() {
            let v = joint.values[cell * m + y];
            if v > 0.0 {
                acc += v * (v / (px * py)).ln();
            }
        }
    }
    acc
}

/// `H(X)` of the world prior.
pub fn h_x(world: &GridWorld) -> f64 {
    entropy(world.p_x())
}
