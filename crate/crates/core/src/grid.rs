//! The probabilistic grid world: a `2^depth x 2^depth` grid of cells `x`
//! carrying a prior `p(x)` and a relevance distribution `p(y|x)`.
//!
//! Input formats:
//!
//! * CSV: one row per grid row, comma-separated values of `p(y=1|x)` in
//!   `[0, 1]` (binary relevance alphabet).
//! * PGM (P2/P5): `p(y=1|x) = pixel / maxval`.
//! * JSON manifest for alphabets with more than two outcomes:
//!   `{"outcomes": ["y0.csv", "y1.csv", ...], "weights": "w.csv", "labels": [...]}`
//!   where each CSV holds `p(y=k|x)`; paths are relative to the manifest.
//!
//! An optional weights CSV of the same shape gives unnormalized `p(x)`.
//! Without one, `p(x)` is uniform over the loaded cells.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pnm;

/// Tolerance for normalization checks on the constructed world.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Row sums of text-encoded multi-outcome inputs are accepted within this
/// tolerance and then renormalized.
const TEXT_ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceAlphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl RelevanceAlphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Distribution(format!(
                "relevance alphabet needs at least 2 outcomes, got {size}"
            )));
        }
        Ok(RelevanceAlphabet { size, labels: None })
    }

    pub fn binary() -> Self {
        RelevanceAlphabet {
            size: 2,
            labels: None,
        }
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut alphabet = RelevanceAlphabet::new(labels.len())?;
        alphabet.labels = Some(labels);
        Ok(alphabet)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Immutable grid world. Cells are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    depth: u8,
    side: usize,
    alphabet: RelevanceAlphabet,
    p_x: Vec<f64>,
    p_y_given_x: Vec<f64>,
}

impl GridWorld {
    /// Builds and validates a world. `p_y_given_x` holds `alphabet.size()`
    /// entries per cell, cells in row-major order.
    pub fn new(
        depth: u8,
        alphabet: RelevanceAlphabet,
        p_x: Vec<f64>,
        p_y_given_x: Vec<f64>,
    ) -> Result<Self> {
        if depth > crate::quadtree::MAX_DEPTH {
            return Err(Error::Level {
                level: depth,
                depth: crate::quadtree::MAX_DEPTH,
            });
        }
        let side = 1usize << depth;
        let cells = side * side;
        let m = alphabet.size();
        if p_x.len() != cells {
            return Err(Error::Distribution(format!(
                "p(x) has {} entries, expected {cells}",
                p_x.len()
            )));
        }
        if p_y_given_x.len() != cells * m {
            return Err(Error::Distribution(format!(
                "p(y|x) has {} entries, expected {}",
                p_y_given_x.len(),
                cells * m
            )));
        }
        if let Some((i, v)) = p_x
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Distribution(format!("p(x) at cell {i} is {v}")));
        }
        let total: f64 = p_x.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Distribution(format!("p(x) sums to {total}")));
        }
        for (cell, row) in p_y_given_x.chunks_exact(m).enumerate() {
            if p_x[cell] == 0.0 {
                continue;
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Distribution(format!(
                    "p(y|x) at cell {cell} has entry {v} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Distribution(format!(
                    "p(y|x) at cell {cell} sums to {sum}"
                )));
            }
        }
        Ok(GridWorld {
            depth,
            side,
            alphabet,
            p_x,
            p_y_given_x,
        })
    }

    /// Binary world from `p(y=1|x)` values with a uniform prior.
    pub fn from_binary(depth: u8, p_y1: &[f64]) -> Result<Self> {
        let n = p_y1.len();
        let p_x = vec![1.0 / n as f64; n];
        GridWorld::from_binary_weighted(depth, p_x, p_y1)
    }

    pub fn from_binary_weighted(depth: u8, p_x: Vec<f64>, p_y1: &[f64]) -> Result<Self> {
        if let Some(v) = p_y1.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Distribution(format!("p(y=1|x) = {v} outside [0, 1]")));
        }
        let p_y = p_y1.iter().flat_map(|&v| [1.0 - v, v]).collect();
        GridWorld::new(depth, RelevanceAlphabet::binary(), p_x, p_y)
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cell_count(&self) -> usize {
        self.side * self.side
    }

    pub fn alphabet(&self) -> &RelevanceAlphabet {
        &self.alphabet
    }

    pub fn outcomes(&self) -> usize {
        self.alphabet.size()
    }

    pub fn p_x(&self) -> &[f64] {
        &self.p_x
    }

    /// `p(x)` of cell `(row, col)`.
    pub fn prior(&self, row: usize, col: usize) -> f64 {
        self.p_x[row * self.side + col]
    }

    /// `p(y|x)` of the cell with row-major index `cell`.
    pub fn p_y_given(&self, cell: usize) -> &[f64] {
        let m = self.outcomes();
        &self.p_y_given_x[cell * m..(cell + 1) * m]
    }

    pub fn joint_distribution(&self) -> JointDistribution {
        let m = self.outcomes();
        let values = self
            .p_y_given_x
            .chunks_exact(m)
            .zip(&self.p_x)
            .flat_map(|(row, &px)| row.iter().map(move |&py| px * py))
            .collect();
        JointDistribution {
            cells: self.cell_count(),
            outcomes: m,
            values,
        }
    }

    /// Writes `p(y=1|x)` as CSV (binary worlds only); values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if self.outcomes() != 2 {
            return Err(Error::Config(
                "CSV export supports binary relevance alphabets only".into(),
            ));
        }
        let values: Vec<f64> = (0..self.cell_count())
            .map(|c| self.p_y_given(c)[1])
            .collect();
        write_matrix(path, self.side, &values)
    }

    /// Writes `p(x)` as a weights CSV.
    pub fn write_weights_csv(&self, path: &Path) -> Result<()> {
        write_matrix(path, self.side, &self.p_x)
    }
}

/// `p(x, y)` laid out cell-major with `outcomes` entries per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub cells: usize,
    pub outcomes: usize,
    pub values: Vec<f64>,
}

impl JointDistribution {
    pub fn get(&self, cell: usize, y: usize) -> f64 {
        self.values[cell * self.outcomes + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.outcomes)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.outcomes];
        for row in self.values.chunks_exact(self.outcomes) {
            for (acc, v) in out.iter_mut().zip(row) {
                *acc += v;
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Csv,
    Pgm,
    Manifest,
}

impl GridFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("csv") => Ok(GridFormat::Csv),
            Some("pgm") => Ok(GridFormat::Pgm),
            Some("json") => Ok(GridFormat::Manifest),
            _ => Err(Error::malformed(
                "input",
                format!("cannot infer format of {}", path.display()),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Embed non-power-of-two grids in the smallest enclosing `2^l` square
    /// with zero-mass padding cells.
    pub pad: bool,
}

/// A dense row-major matrix read from a text or image file.
#[derive(Debug, Clone, PartialEq)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    outcomes: Vec<PathBuf>,
    #[serde(default)]
    weights: Option<PathBuf>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

/// Loads a grid world. `weights_path` overrides the uniform prior; for
/// manifests a `"weights"` entry is used when no path is given here.
pub fn load_grid(
    path: &Path,
    format: GridFormat,
    weights_path: Option<&Path>,
    options: LoadOptions,
) -> Result<GridWorld> {
    let (alphabet, channels, manifest_weights) = match format {
        GridFormat::Csv => {
            let m = read_csv_matrix(path)?;
            check_unit_interval(&m, "csv")?;
            (RelevanceAlphabet::binary(), binary_channels(m), None)
        }
        GridFormat::Pgm => {
            let img = pnm::read_pgm(path)?;
            let scale = img.maxval as f64;
            let m = Matrix {
                rows: img.height,
                cols: img.width,
                data: img.data.iter().map(|&v| v as f64 / scale).collect(),
            };
            (RelevanceAlphabet::binary(), binary_channels(m), None)
        }
        GridFormat::Manifest => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let manifest: Manifest = serde_json::from_str(&text)
                .map_err(|e| Error::malformed("manifest", e.to_string()))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let channels = manifest
                .outcomes
                .iter()
                .map(|p| read_csv_matrix(&base.join(p)))
                .collect::<Result<Vec<_>>>()?;
            let alphabet = match manifest.labels {
                Some(labels) if labels.len() == channels.len() => {
                    RelevanceAlphabet::with_labels(labels)?
                }
                Some(_) => {
                    return Err(Error::malformed(
                        "manifest",
                        "labels and outcomes differ in length",
                    ))
                }
                None => RelevanceAlphabet::new(channels.len())?,
            };
            let weights = manifest.weights.map(|w| base.join(w));
            (alphabet, channels, weights)
        }
    };

    let (rows, cols) = (channels[0].rows, channels[0].cols);
    for ch in &channels[1..] {
        if (ch.rows, ch.cols) != (rows, cols) {
            return Err(Error::ShapeMismatch {
                what: "outcome channels",
                expected: (rows, cols),
                found: (ch.rows, ch.cols),
            });
        }
    }

    let weights_path = weights_path.map(Path::to_path_buf).or(manifest_weights);
    let weights = match weights_path {
        Some(wp) => {
            let w = read_csv_matrix(&wp)?;
            if (w.rows, w.cols) != (rows, cols) {
                return Err(Error::ShapeMismatch {
                    what: "weights",
                    expected: (rows, cols),
                    found: (w.rows, w.cols),
                });
            }
            if let Some(v) = w.data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::malformed("weights", format!("entry {v} is negative or not finite")));
            }
            w.data
        }
        None => vec![1.0; rows * cols],
    };
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Weights(total));
    }

    let mut side = rows.max(cols).next_power_of_two();
    if rows != cols || !rows.is_power_of_two() {
        if !options.pad {
            return Err(Error::Dimension { rows, cols });
        }
    } else {
        side = rows;
    }
    let depth = side.trailing_zeros() as u8;
    let m = alphabet.size();

    let mut p_x = vec![0.0; side * side];
    let mut p_y = vec![1.0 / m as f64; side * side * m];
    for r in 0..rows {
        for c in 0..cols {
            let src = r * cols + c;
            let dst = r * side + c;
            p_x[dst] = weights[src] / total;
            let row: Vec<f64> = channels.iter().map(|ch| ch.data[src]).collect();
            let sum: f64 = row.iter().sum();
            if (p_x[dst] > 0.0 || m > 2)
                && ((sum - 1.0).abs() > TEXT_ROW_TOL || row.iter().any(|v| !(0.0..=1.0).contains(v)))
            {
                return Err(Error::Distribution(format!(
                    "p(y|x) at row {r}, column {c} sums to {sum}"
                )));
            }
            for (y, v) in row.iter().enumerate() {
                p_y[dst * m + y] = if m > 2 { v / sum } else { *v };
            }
        }
    }
    GridWorld::new(depth, alphabet, p_x, p_y)
}

fn binary_channels(m: Matrix) -> Vec<Matrix> {
    let zero = Matrix {
        rows: m.rows,
        cols: m.cols,
        data: m.data.iter().map(|v| 1.0 - v).collect(),
    };
    vec![zero, m]
}

fn check_unit_interval(m: &Matrix, what: &'static str) -> Result<()> {
    match m.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(Error::malformed(what, format!("value {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn read_csv_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_matrix(&text)
}

fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| {
                Error::malformed("csv", format!("line {}: cannot parse {field:?}", lineno + 1))
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        if rows == 0 {
            cols = width;
        } else if width != cols {
            return Err(Error::malformed(
                "csv",
                format!("line {} has {width} fields, expected {cols}", lineno + 1),
            ));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::malformed("csv", "no data rows"));
    }
    Ok(Matrix { rows, cols, data })
}

fn write_matrix(path: &Path, side: usize, values: &[f64]) -> Result<()> {
    let mut out = String::new();
    for row in values.chunks_exact(side) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
