#![allow(dead_code)]

//! Test-side oracles that share no code with the library's increment
//! machinery: trees are enumerated as closed bitmasks and information is
//! computed from the leaf partition by definition.

use ibqt::GridWorld;

pub fn expandable(depth: u8) -> usize {
    ((1usize << (2 * depth as usize)) - 1) / 3
}

pub fn is_closed(bits: &[bool]) -> bool {
    (1..bits.len()).all(|i| !bits[i] || bits[(i - 1) / 4])
}

/// Every parent-closed subset of the expandable nodes (depth <= 3).
pub fn all_closures(depth: u8) -> Vec<Vec<bool>> {
    let n = expandable(depth);
    assert!(n <= 21);
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if is_closed(&bits) {
            out.push(bits);
        }
    }
    out
}

/// Leaf squares `(row, col, size)` of a tree, child `k` of a square taking
/// the quadrant with row bit `k >> 1` and column bit `k & 1`.
pub fn leaf_squares(bits: &[bool], depth: u8) -> Vec<(usize, usize, usize)> {
    fn walk(bits: &[bool], i: usize, r: usize, c: usize, size: usize, out: &mut Vec<(usize, usize, usize)>) {
        if i < bits.len() && bits[i] {
            let h = size / 2;
            for k in 0..4 {
                walk(bits, 4 * i + 1 + k, r + (k >> 1) * h, c + (k & 1) * h, h, out);
            }
        } else {
            out.push((r, c, size));
        }
    }
    let mut out = Vec::new();
    walk(bits, 0, 0, 0, 1 << depth, &mut out);
    out
}

/// `(I(T;X), I(T;Y))` from the definitions: `I(T;X) = H(T)` for a
/// deterministic partition and `I(T;Y) = Σ p(t,y) ln(p(t,y) / p(t)p(y))`.
pub fn brute_info(bits: &[bool], world: &GridWorld) -> (f64, f64) {
    let side = world.side();
    let m = world.outcomes();
    let mut p_y = vec![0.0; m];
    for cell in 0..side * side {
        for y in 0..m {
            p_y[y] += world.p_x()[cell] * world.p_y_given(cell)[y];
        }
    }
    let mut i_x = 0.0;
    let mut i_y = 0.0;
    for (r0, c0, size) in leaf_squares(bits, world.depth()) {
        let mut pt = 0.0;
        let mut pty = vec![0.0; m];
        for r in r0..r0 + size {
            for c in c0..c0 + size {
                let cell = r * side + c;
                pt += world.p_x()[cell];
                for y in 0..m {
                    pty[y] += world.p_x()[cell] * world.p_y_given(cell)[y];
                }
            }
        }
        if pt > 0.0 {
            i_x -= pt * pt.ln();
        }
        for y in 0..m {
            if pty[y] > 0.0 {
                i_y += pty[y] * (pty[y] / (pt * p_y[y])).ln();
            }
        }
    }
    (i_x, i_y)
}

/// Exact optimum by scanning precomputed `(I_X, I_Y)` pairs; `None` when
/// nothing is feasible.
pub fn brute_max_iy(values: &[(f64, f64)], budget: f64) -> Option<f64> {
    values
        .iter()
        .filter(|v| v.0 <= budget + 1e-12)
        .map(|v| v.1)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

pub fn brute_min_ix(values: &[(f64, f64)], threshold: f64) -> Option<f64> {
    values
        .iter()
        .filter(|v| v.1 >= threshold - 1e-12)
        .map(|v| v.0)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}
