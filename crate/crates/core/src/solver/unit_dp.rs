//! Exact tree knapsack by dynamic programming over integer weight units.
//!
//! When every `ΔI_X` is an integer multiple of a common unit (a uniform
//! prior gives `ΔI_X = 4^-l ln 4` at level `l`), the best `I_Y` of a
//! rooted subtree can be tabulated for every exact `I_X` in units. One
//! table answers both budget formulations at any budget.

use super::{finish, within_budget, BudgetKind, SolveResult, SolveStats, Status, FEASIBILITY_SLACK};
use crate::info::{selection_info, NodeInfoTable};

/// Relative tolerance when testing `w = k * unit`.
const UNIT_TOLERANCE: f64 = 1e-12;
/// Largest total unit count tabulated.
const MAX_UNITS: u64 = 1 << 22;
/// Largest max-plus workload attempted.
const MAX_COST: u128 = 4_000_000_000;

/// Exact solution through the unit table, or `None` when the `ΔI_X`
/// values are not commensurate or the table would be too large.
pub(crate) fn solve(table: &NodeInfoTable, kind: BudgetKind, budget: f64) -> Option<SolveResult> {
    let scale = commensurate(table.delta_x_vec(), MAX_UNITS)?;
    if table_cost(&scale.units) > MAX_COST {
        return None;
    }
    let dy = table.delta_y_vec();
    let dp = UnitTable::build(dy, &scale.units);
    let stats = SolveStats {
        explored_nodes: 0,
        dp_evaluations: 1,
        ..SolveStats::default()
    };
    let finite = |k: &usize| dp.best[*k].is_finite();
    // Candidate unit counts in preference order; the first whose
    // reconstructed tree passes the exact budget check wins.
    let order: Vec<usize> = match kind {
        BudgetKind::MaxIx => {
            let mut ks: Vec<usize> = (0..dp.best.len())
                .filter(finite)
                .filter(|&k| k as f64 * scale.unit <= budget + 2.0 * FEASIBILITY_SLACK)
                .collect();
            ks.sort_by(|&a, &b| dp.best[b].total_cmp(&dp.best[a]).then(a.cmp(&b)));
            ks
        }
        BudgetKind::MinIy => (0..dp.best.len())
            .filter(finite)
            .filter(|&k| dp.best[k] >= budget - 2.0 * FEASIBILITY_SLACK)
            .collect(),
    };
    for k in order {
        let bits = dp.closure(k);
        let info = selection_info(&bits, table);
        if within_budget(kind, budget, info) {
            let bound = match kind {
                BudgetKind::MaxIx => info.i_y,
                BudgetKind::MinIy => -info.i_x,
            };
            return Some(finish(table, bits, kind, bound, Status::Optimal, stats));
        }
    }
    let n = table.expandable();
    Some(finish(table, vec![false; n], kind, f64::NEG_INFINITY, Status::Infeasible, stats))
}

/// Integer weights of a commensurate instance.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct UnitScale {
    pub unit: f64,
    pub units: Vec<u64>,
    pub total: u64,
}

/// Expresses `values` in multiples of their smallest positive entry, if
/// they are all (numerically) integer multiples and the total stays under
/// `max_total`.
pub(crate) fn commensurate(values: &[f64], max_total: u64) -> Option<UnitScale> {
    let unit = values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !unit.is_finite() {
        return Some(UnitScale {
            unit: 1.0,
            units: vec![0; values.len()],
            total: 0,
        });
    }
    let mut units = Vec::with_capacity(values.len());
    let mut total = 0u64;
    for &v in values {
        if v < 0.0 {
            return None;
        }
        let k = (v / unit).round();
        if (v - k * unit).abs() > UNIT_TOLERANCE * v.max(unit) || k > max_total as f64 {
            return None;
        }
        total += k as u64;
        if total > max_total {
            return None;
        }
        units.push(k as u64);
    }
    Some(UnitScale { unit, units, total })
}

/// Max-plus convolution work of [`UnitTable::build`], for deciding whether
/// the table is affordable.
pub(crate) fn table_cost(units: &[u64]) -> u128 {
    let n = units.len();
    let mut size = vec![0u64; n];
    let mut cost = 0u128;
    for i in (0..n).rev() {
        let mut acc = 0u64;
        for c in (4 * i + 1..=4 * i + 4).filter(|&c| c < n) {
            cost += (acc as u128 + 1) * (size[c] as u128 + 1);
            acc += size[c];
        }
        size[i] = acc + units[i];
    }
    cost
}

/// `best[k]`: largest total profit of a rooted closure using exactly `k`
/// units (`-inf` when no closure has that weight).
pub(crate) struct UnitTable {
    pub best: Vec<f64>,
    units: Vec<u64>,
    /// Per node, the table over its subtree (node expanded or not).
    tables: Vec<Vec<f64>>,
}

impl UnitTable {
    pub fn build(profit: &[f64], units: &[u64]) -> Self {
        let n = profit.len();
        let mut tables: Vec<Vec<f64>> = vec![Vec::new(); n];
        for i in (0..n).rev() {
            let mut merged = vec![0.0];
            for c in (4 * i + 1..=4 * i + 4).filter(|&c| c < n) {
                merged = max_plus(&merged, &tables[c]);
            }
            let u = units[i] as usize;
            let mut own = vec![f64::NEG_INFINITY; merged.len() + u];
            for (k, &v) in merged.iter().enumerate() {
                own[k + u] = v + profit[i];
            }
            // not expanding costs and earns nothing
            own[0] = own[0].max(0.0);
            tables[i] = own;
        }
        let best = if n == 0 { vec![0.0] } else { tables[0].clone() };
        UnitTable {
            best,
            units: units.to_vec(),
            tables,
        }
    }

    /// A closure attaining `best[k]`.
    pub fn closure(&self, k: usize) -> Vec<bool> {
        let n = self.units.len();
        let mut bits = vec![false; n];
        if n > 0 {
            self.descend(0, k, &mut bits);
        }
        bits
    }

    fn descend(&self, i: usize, k: usize, bits: &mut [bool]) {
        let n = self.units.len();
        let u = self.units[i] as usize;
        if k == 0 && !(self.tables[i][0] > 0.0) {
            return;
        }
        bits[i] = true;
        let children: Vec<usize> = (4 * i + 1..=4 * i + 4).filter(|&c| c < n).collect();
        // Recompute the prefix merges and walk them backwards.
        let mut prefix = vec![vec![0.0]];
        for &c in &children {
            let next = max_plus(prefix.last().expect("non-empty"), &self.tables[c]);
            prefix.push(next);
        }
        let mut rest = k - u;
        for (j, &c) in children.iter().enumerate().rev() {
            let want = prefix[j + 1][rest];
            let before = &prefix[j];
            let table = &self.tables[c];
            let kc = (0..table.len().min(rest + 1))
                .find(|&kc| rest - kc < before.len() && before[rest - kc] + table[kc] == want)
                .expect("dp split exists");
            self.descend(c, kc, bits);
            rest -= kc;
        }
    }
}

fn max_plus(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == f64::NEG_INFINITY {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let v = x + y;
            if v > out[i + j] {
                out[i + j] = v;
            }
        }
    }
    out
}
