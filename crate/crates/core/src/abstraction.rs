//! Abstraction output: the leaf cells of a solved tree, its information
//! values and the solver report, plus image rendering.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{h_x, mi_xy, NodeInfoTable};
use crate::grid::GridWorld;
use crate::pnm::{self, Pgm};
use crate::quadtree::{leaves_of, NodeId, TreeSelection};
use crate::solver::{RelaxationReport, SolveConfig, SolveResult, SolveStats, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractCell {
    pub row: u32,
    pub col: u32,
    /// Side length in finest cells.
    pub size: u32,
    pub p_t: f64,
    pub p_y_given_t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionOutput {
    pub depth: u8,
    pub side: u32,
    pub cells: Vec<AbstractCell>,
    pub i_x: f64,
    pub i_y: f64,
    pub h_x: f64,
    pub mi_xy: f64,
    pub objective: f64,
    /// Proven bound on the objective; absent when infinite (infeasible).
    pub objective_bound: Option<f64>,
    pub status: Status,
    /// Expanded nodes as `[level, index]` pairs.
    pub expanded: Vec<[u64; 2]>,
    /// Leaves over finest cells.
    pub leaf_fraction: f64,
    pub config: SolveConfig,
    pub stats: SolveStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationReport>,
}

impl AbstractionOutput {
    pub fn new(world: &GridWorld, table: &NodeInfoTable, result: &SolveResult, config: SolveConfig) -> Self {
        let depth = world.depth();
        let leaves = leaves_of(&result.z).expect("solver selections are valid");
        let cells: Vec<AbstractCell> = leaves
            .iter()
            .map(|&leaf| {
                let (row, col, size) = leaf.square(depth);
                AbstractCell {
                    row,
                    col,
                    size,
                    p_t: table.p_t(leaf),
                    p_y_given_t: table.p_y_given_t(leaf).to_vec(),
                }
            })
            .collect();
        AbstractionOutput {
            depth,
            side: world.side() as u32,
            leaf_fraction: cells.len() as f64 / world.cell_count() as f64,
            cells,
            i_x: result.info.i_x,
            i_y: result.info.i_y,
            h_x: h_x(world),
            mi_xy: mi_xy(world),
            objective: result.objective,
            objective_bound: Some(result.objective_bound).filter(|b| b.is_finite()),
            status: result.status,
            expanded: result.z.to_pairs(),
            config,
            stats: result.stats.clone(),
            relaxation: result.relaxation.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("output serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::malformed("abstraction json", e.to_string()))
    }

    /// The tree whose leaves are exactly `cells`.
    pub fn selection(&self) -> Result<TreeSelection> {
        selection_from_cells(self.depth, &self.cells)
    }
}

/// Rebuilds a tree from its leaf cells, checking that they are aligned
/// quadtree squares tiling the grid exactly.
pub fn selection_from_cells(depth: u8, cells: &[AbstractCell]) -> Result<TreeSelection> {
    let side = 1u64 << depth;
    let mut leaves = Vec::with_capacity(cells.len());
    for c in cells {
        let size = c.size as u64;
        if size == 0 || !size.is_power_of_two() || size > side {
            return Err(Error::malformed("cells", format!("bad cell size {}", c.size)));
        }
        if !(c.row as u64).is_multiple_of(size) || !(c.col as u64).is_multiple_of(size) || c.row as u64 + size > side || c.col as u64 + size > side {
            return Err(Error::malformed(
                "cells",
                format!("cell at ({}, {}) of size {} is not an aligned quadrant", c.row, c.col, c.size),
            ));
        }
        let level = depth - size.trailing_zeros() as u8;
        leaves.push(NodeId::covering(c.row, c.col, level, depth));
    }
    let z = TreeSelection::from_leaves(depth, &leaves)?;
    if !z.violations().is_empty() {
        return Err(Error::Precedence(z.violations().len()));
    }
    let expected: HashSet<NodeId> = leaves_of(&z)?.into_iter().collect();
    let given: HashSet<NodeId> = leaves.iter().copied().collect();
    if expected != given || given.len() != leaves.len() {
        return Err(Error::malformed("cells", "cells do not tile the grid"));
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Pixels per finest cell.
    pub scale: u32,
    /// Cell outline color; `None` draws no borders.
    pub border: Option<[u8; 3]>,
    /// Outcome whose probability sets the intensity.
    pub outcome: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            scale: 1,
            border: None,
            outcome: 1,
        }
    }
}

/// One cell per finest grid cell, for rendering a map as is.
pub fn full_resolution(world: &GridWorld) -> Vec<AbstractCell> {
    let side = world.side();
    (0..world.cell_count())
        .map(|cell| AbstractCell {
            row: (cell / side) as u32,
            col: (cell % side) as u32,
            size: 1,
            p_t: world.p_x()[cell],
            p_y_given_t: world.p_y_given(cell).to_vec(),
        })
        .collect()
}

/// Row-major RGB raster of an abstraction.
pub fn rasterize(output: &AbstractionOutput, options: RenderOptions) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    rasterize_cells(output.side, &output.cells, options)
}

pub fn rasterize_cells(side: u32, cells: &[AbstractCell], options: RenderOptions) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    if options.scale == 0 {
        return Err(Error::Config("render scale must be >= 1".into()));
    }
    let scale = options.scale as usize;
    let width = side as usize * scale;
    let mut px = vec![[0u8; 3]; width * width];
    for cell in cells {
        let p = *cell.p_y_given_t.get(options.outcome).ok_or_else(|| {
            Error::Config(format!(
                "outcome {} out of range for {} outcomes",
                options.outcome,
                cell.p_y_given_t.len()
            ))
        })?;
        let v = (p.clamp(0.0, 1.0) * 255.0).round() as u8;
        let r0 = cell.row as usize * scale;
        let c0 = cell.col as usize * scale;
        let n = cell.size as usize * scale;
        if r0 + n > width || c0 + n > width {
            return Err(Error::malformed("cells", format!("cell at ({}, {}) leaves the grid", cell.row, cell.col)));
        }
        for r in r0..r0 + n {
            for c in c0..c0 + n {
                let edge = r == r0 || c == c0 || r + 1 == r0 + n || c + 1 == c0 + n;
                px[r * width + c] = match options.border {
                    Some(color) if edge => color,
                    _ => [v, v, v],
                };
            }
        }
    }
    Ok((width, width, px))
}

/// Writes a PPM when the path ends in `.ppm` or a border color is set,
/// otherwise an 8-bit PGM.
pub fn render(output: &AbstractionOutput, path: &Path, options: RenderOptions) -> Result<()> {
    render_cells(output.side, &output.cells, path, options)
}

pub fn render_cells(side: u32, cells: &[AbstractCell], path: &Path, options: RenderOptions) -> Result<()> {
    let (w, h, px) = rasterize_cells(side, cells, options)?;
    let ppm = options.border.is_some()
        || path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    if ppm {
        pnm::write_ppm(path, w, h, &px)
    } else {
        let img = Pgm {
            width: w,
            height: h,
            maxval: 255,
            data: px.iter().map(|p| p[0] as u16).collect(),
        };
        pnm::write_pgm(path, &img)
    }
}
