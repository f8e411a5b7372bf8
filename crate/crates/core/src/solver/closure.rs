//! Parametric machinery for the one-constraint knapsack over rooted subtrees
//! ("closures") of the expandable-node tree:
//!
//! ```text
//! maximize  profit · z   subject to  weight · z <= cap,  z closed under parent,
//! ```
//!
//! Both budget formulations map onto this form. Dualizing the single budget
//! row gives `L(λ) = λ cap + max_z (profit - λ weight) · z`, whose inner
//! maximization is an exact bottom-up tree DP. The closure polytope is
//! integral, so `min_{λ >= 0} L(λ)` equals the LP relaxation value; it is
//! found by intersecting supporting lines of the convex piecewise-linear `L`
//! until no better line exists at the intersection.

/// Feasibility slack on budget comparisons.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

const MAX_LINE_SEARCH_STEPS: usize = 1000;

/// Per-node decision in a partial assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assignment {
    Free,
    Expanded,
    Collapsed,
}

/// Raised when fixing a node contradicts an earlier fixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict;

/// Forces `flat` and all its ancestors to be expanded.
pub fn fix_expanded(fix: &mut [Assignment], mut flat: usize) -> Result<(), Conflict> {
    loop {
        match fix[flat] {
            Assignment::Collapsed => return Err(Conflict),
            Assignment::Expanded => return Ok(()),
            Assignment::Free => fix[flat] = Assignment::Expanded,
        }
        if flat == 0 {
            return Ok(());
        }
        flat = (flat - 1) / 4;
    }
}

/// Forces `flat` and all its descendants to stay collapsed.
pub fn fix_collapsed(fix: &mut [Assignment], flat: usize) -> Result<(), Conflict> {
    let n = fix.len();
    let mut stack = vec![flat];
    while let Some(i) = stack.pop() {
        match fix[i] {
            Assignment::Expanded => return Err(Conflict),
            Assignment::Collapsed => continue,
            Assignment::Free => fix[i] = Assignment::Collapsed,
        }
        stack.extend((4 * i + 1..=4 * i + 4).filter(|&c| c < n));
    }
    Ok(())
}

/// An integral closure with its exact totals (summed in flat order).
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub bits: Vec<bool>,
    pub profit: f64,
    pub weight: f64,
}

/// Result of one DP evaluation at a fixed multiplier.
#[derive(Debug, Clone)]
pub struct DpEval {
    pub closure: Closure,
    /// Subtree value of each node assuming it is expanded.
    pub subtree: Vec<f64>,
    pub lambda: f64,
    /// `L(λ) = λ cap + max_z (profit - λ weight) · z`.
    pub bound: f64,
}

/// Outcome of minimizing the Lagrangian dual under a partial assignment.
#[derive(Debug, Clone)]
pub enum DualOutcome {
    /// No closure consistent with the assignment meets the budget.
    Infeasible,
    /// The unconstrained optimum already meets the budget; it is optimal.
    Integral(Closure),
    /// The dual minimum lies between two integral closures.
    Fractional {
        /// Dual value `min L(λ)`, equal to the LP relaxation value.
        bound: f64,
        /// Budget-violating closure optimal at `λ`.
        over: Closure,
        /// Budget-respecting closure optimal at `λ`.
        under: Closure,
        /// Weight of `over` in the convex combination meeting the budget.
        fraction: f64,
        /// DP evaluated at the minimizing multiplier, for reduced costs.
        eval: DpEval,
    },
}

/// Knapsack-over-closures instance. Node order is the quadtree flat order.
#[derive(Debug, Clone)]
pub struct ClosureProblem {
    pub profit: Vec<f64>,
    pub weight: Vec<f64>,
    /// Capacity including [`FEASIBILITY_SLACK`].
    pub cap: f64,
    pub evaluations: u64,
}

impl ClosureProblem {
    pub fn new(profit: Vec<f64>, weight: Vec<f64>, cap: f64) -> Self {
        debug_assert_eq!(profit.len(), weight.len());
        ClosureProblem {
            profit,
            weight,
            cap: cap + FEASIBILITY_SLACK,
            evaluations: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.profit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profit.is_empty()
    }

    pub fn is_feasible(&self, c: &Closure) -> bool {
        c.weight <= self.cap
    }

    /// Totals of a selection, summed in flat order.
    pub fn totals(&self, bits: &[bool]) -> (f64, f64) {
        let mut p = 0.0;
        let mut w = 0.0;
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            p += self.profit[i];
            w += self.weight[i];
        }
        (p, w)
    }

    pub fn closure(&self, bits: Vec<bool>) -> Closure {
        let (profit, weight) = self.totals(&bits);
        Closure {
            bits,
            profit,
            weight,
        }
    }

    /// Exact maximizer of `(profit - λ weight) · z` over closures consistent
    /// with `fix`. Ties (zero subtree value) leave free nodes collapsed, so
    /// the returned closure is the smallest optimal one.
    pub fn evaluate(&mut self, fix: &[Assignment], lambda: f64) -> DpEval {
        self.evaluations += 1;
        let n = self.len();
        let mut subtree = vec![0.0; n];
        let mut value = vec![0.0; n];
        for i in (0..n).rev() {
            if fix[i] == Assignment::Collapsed {
                continue;
            }
            let mut acc = self.profit[i] - lambda * self.weight[i];
            for c in (4 * i + 1..=4 * i + 4).filter(|&c| c < n) {
                acc += value[c];
            }
            subtree[i] = acc;
            value[i] = match fix[i] {
                Assignment::Expanded => acc,
                _ if acc > 0.0 => acc,
                _ => 0.0,
            };
        }
        let bits = self.extract(fix, |i| subtree[i] > 0.0);
        let v = if n == 0 { 0.0 } else { value[0] };
        DpEval {
            closure: self.closure(bits),
            subtree,
            lambda,
            bound: lambda * self.cap + v,
        }
    }

    /// The closure optimal for all sufficiently large multipliers: minimal
    /// weight first, then maximal profit.
    pub fn evaluate_limit(&mut self, fix: &[Assignment]) -> Closure {
        self.evaluations += 1;
        let n = self.len();
        let mut subtree = vec![(0.0f64, 0.0f64); n];
        let mut value = vec![(0.0f64, 0.0f64); n];
        let positive = |v: (f64, f64)| v.0 > 0.0 || (v.0 == 0.0 && v.1 > 0.0);
        for i in (0..n).rev() {
            if fix[i] == Assignment::Collapsed {
                continue;
            }
            let mut acc = (-self.weight[i], self.profit[i]);
            for c in (4 * i + 1..=4 * i + 4).filter(|&c| c < n) {
                acc.0 += value[c].0;
                acc.1 += value[c].1;
            }
            subtree[i] = acc;
            value[i] = match fix[i] {
                Assignment::Expanded => acc,
                _ if positive(acc) => acc,
                _ => (0.0, 0.0),
            };
        }
        let bits = self.extract(fix, |i| positive(subtree[i]));
        self.closure(bits)
    }

    fn extract(&self, fix: &[Assignment], take: impl Fn(usize) -> bool) -> Vec<bool> {
        let n = self.len();
        let mut bits = vec![false; n];
        for i in 0..n {
            let parent_in = i == 0 || bits[(i - 1) / 4];
            bits[i] = parent_in
                && match fix[i] {
                    Assignment::Expanded => true,
                    Assignment::Collapsed => false,
                    Assignment::Free => take(i),
                };
        }
        bits
    }

    /// `L(λ)` at a single multiplier. Every value is an upper bound on the
    /// best feasible closure consistent with `fix`.
    pub fn dual_value(&mut self, fix: &[Assignment], lambda: f64) -> f64 {
        self.evaluate(fix, lambda).bound
    }

    /// Minimizes the Lagrangian dual over `λ >= 0`.
    pub fn solve_dual(&mut self, fix: &[Assignment]) -> DualOutcome {
        let at_zero = self.evaluate(fix, 0.0);
        if self.is_feasible(&at_zero.closure) {
            return DualOutcome::Integral(at_zero.closure);
        }
        let limit = self.evaluate_limit(fix);
        if !self.is_feasible(&limit) {
            return DualOutcome::Infeasible;
        }

        let mut over = at_zero.closure.clone();
        let mut under = limit;
        let mut best = at_zero;
        for _ in 0..MAX_LINE_SEARCH_STEPS {
            let dw = over.weight - under.weight;
            if dw <= 0.0 {
                break;
            }
            let lambda = ((over.profit - under.profit) / dw).max(0.0);
            let line = under.profit + lambda * (self.cap - under.weight);
            let eval = self.evaluate(fix, lambda);
            let tol = 1e-13 * (1.0 + line.abs());
            let done = eval.bound <= line + tol;
            let candidate = eval.closure.clone();
            if eval.bound < best.bound || done {
                best = eval;
            }
            if done {
                break;
            }
            if self.is_feasible(&candidate) {
                if candidate == under {
                    break;
                }
                under = candidate;
            } else {
                if candidate == over {
                    break;
                }
                over = candidate;
            }
        }

        let dw = over.weight - under.weight;
        let fraction = if dw > 0.0 {
            ((self.cap - under.weight) / dw).clamp(0.0, 1.0)
        } else {
            0.0
        };
        DualOutcome::Fractional {
            bound: best.bound,
            over,
            under,
            fraction,
            eval: best,
        }
    }

    /// Upper bounds on the restricted dual when a free node is forced to the
    /// opposite of its state in `eval.closure`: `(if_collapsed, if_expanded)`
    /// per node, `None` for fixed nodes.
    pub fn reduced_bounds(&self, fix: &[Assignment], eval: &DpEval) -> Vec<Option<f64>> {
        let n = self.len();
        let mut out = vec![None; n];
        // Forcing a selected node out loses the smallest positive subtree value
        // along its chain of free ancestors; forcing an unselected node in
        // pays every negative subtree value on its root path.
        let mut chain_min = vec![f64::INFINITY; n];
        let mut path_cost = vec![0.0; n];
        for i in 0..n {
            if fix[i] == Assignment::Collapsed {
                continue;
            }
            let (parent_min, parent_cost) = if i == 0 {
                (f64::INFINITY, 0.0)
            } else {
                let p = (i - 1) / 4;
                (chain_min[p], path_cost[p])
            };
            let s = eval.subtree[i];
            chain_min[i] = if fix[i] == Assignment::Free {
                parent_min.min(s)
            } else {
                parent_min
            };
            if fix[i] != Assignment::Free {
                path_cost[i] = parent_cost;
                continue;
            }
            path_cost[i] = parent_cost + (-s).max(0.0);
            out[i] = Some(if eval.closure.bits[i] {
                eval.bound - chain_min[i]
            } else {
                eval.bound - path_cost[i]
            });
        }
        out
    }

    /// Greedy improvement of a feasible closure by single-node additions on
    /// the frontier or removals of childless expanded nodes.
    pub fn improve(&self, fix: &[Assignment], start: &Closure) -> Closure {
        let n = self.len();
        let mut bits = start.bits.clone();
        let mut w = start.weight;
        for _ in 0..4 * n.max(1) {
            let mut best: Option<(usize, f64, f64)> = None;
            for i in 0..n {
                let parent_in = i == 0 || bits[(i - 1) / 4];
                let (dp, dw) = if bits[i] {
                    let childless = (4 * i + 1..=4 * i + 4)
                        .filter(|&c| c < n)
                        .all(|c| !bits[c]);
                    if fix[i] == Assignment::Expanded || !childless {
                        continue;
                    }
                    (-self.profit[i], -self.weight[i])
                } else {
                    if fix[i] == Assignment::Collapsed || !parent_in {
                        continue;
                    }
                    (self.profit[i], self.weight[i])
                };
                let gains = dp > 0.0 || (dp == 0.0 && dw < 0.0);
                if !gains || w + dw > self.cap {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, bp, bw)) => dp > bp || (dp == bp && dw < bw),
                };
                if better {
                    best = Some((i, dp, dw));
                }
            }
            match best {
                Some((i, _, dw)) => {
                    bits[i] = !bits[i];
                    w += dw;
                }
                None => break,
            }
        }
        self.closure(bits)
    }
}

/// True when every set bit's parent is also set.
pub fn is_closed(bits: &[bool]) -> bool {
    (1..bits.len()).all(|i| !bits[i] || bits[(i - 1) / 4])
}
