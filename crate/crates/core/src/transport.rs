//! Discrete optimal transport under the thresholded ground cost
//! `C_ij(d) = 1(|x_i - y_j| > d)`.
//!
//! `OT_d(a, b)` is the least mass that has to move by more than `d` RMB to turn
//! `a` into `b`. Since a pair is free exactly when its prices are within `d`
//! of each other, the free pairs of two sorted supports form sliding windows,
//! and the maximum freely-movable mass is found by a single left-to-right
//! sweep that fills each source from the leftmost target still available in
//! its window. The sweep runs in `O(n + m)`.
//!
//! A tie-broken plan, optimal for `C(d) + λ|x - y|`, is computed with a
//! min-cost flow. Set duality (`max_A a(A) - b(A^d)`) gives an independent
//! certificate on small instances.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::FlowGraph;
use crate::pmf::{union_support, PricePmf};

/// Marginal feasibility tolerance for plans.
pub const PLAN_TOLERANCE: f64 = 1e-10;

/// Default tie-breaking weight on `|x - y|` for interpretable plans.
pub const DEFAULT_TIE_BREAK_LAMBDA: f64 = 0.01;

/// Largest combined support accepted by [`strassen_certificate`].
pub const STRASSEN_MAX_SUPPORT: usize = 24;

/// Smoothing threshold `d` in RMB: moves of at most `d` are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bandwidth(pub u64);

impl Bandwidth {
    /// The threshold in RMB.
    pub fn get(self) -> u64 {
        self.0
    }

    /// Twice the threshold (saturating).
    pub fn doubled(self) -> Bandwidth {
        Bandwidth(self.0.saturating_mul(2))
    }

    /// Whether two prices are within the threshold.
    #[inline]
    pub fn is_free(self, x: u64, y: u64) -> bool {
        x.abs_diff(y) <= self.0
    }
}

impl From<u64> for Bandwidth {
    fn from(d: u64) -> Self {
        Bandwidth(d)
    }
}

/// One cell of a coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    /// Index into the source support.
    pub source: usize,
    /// Index into the target support.
    pub target: usize,
    /// Source price.
    pub source_price: u64,
    /// Target price.
    pub target_price: u64,
    /// Mass moved, positive.
    pub mass: f64,
}

/// Sparse coupling of two distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    entries: Vec<PlanEntry>,
    cost: f64,
    d: Bandwidth,
}

impl TransportPlan {
    fn from_cells(a: &PricePmf, b: &PricePmf, d: Bandwidth, cells: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let entries: Vec<PlanEntry> = cells
            .into_iter()
            .filter(|&(_, _, m)| m > 0.0)
            .map(|(i, j, mass)| PlanEntry {
                source: i,
                target: j,
                source_price: a.support()[i],
                target_price: b.support()[j],
                mass,
            })
            .collect();
        let cost = entries
            .iter()
            .filter(|e| !d.is_free(e.source_price, e.target_price))
            .map(|e| e.mass)
            .sum::<f64>()
            .clamp(0.0, 1.0);
        Self { entries, cost, d }
    }

    /// Nonzero cells.
    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    /// Mass moved by more than `d`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Threshold the plan was solved at.
    pub fn bandwidth(&self) -> Bandwidth {
        self.d
    }

    /// `Σ γ_ij |x_i - y_j|`.
    pub fn displacement(&self) -> f64 {
        self.entries.iter().map(|e| e.mass * e.source_price.abs_diff(e.target_price) as f64).sum()
    }

    /// Largest marginal violation against `a` (rows) and `b` (columns).
    pub fn marginal_error(&self, a: &PricePmf, b: &PricePmf) -> f64 {
        let mut rows = a.mass().to_vec();
        let mut cols = b.mass().to_vec();
        for e in &self.entries {
            rows[e.source] -= e.mass;
            cols[e.target] -= e.mass;
        }
        rows.iter().chain(cols.iter()).fold(0.0f64, |acc, r| acc.max(r.abs()))
    }

    /// Whether both marginals match within [`PLAN_TOLERANCE`].
    pub fn is_feasible(&self, a: &PricePmf, b: &PricePmf) -> bool {
        self.entries.iter().all(|e| e.mass >= 0.0) && self.marginal_error(a, b) <= PLAN_TOLERANCE
    }
}

/// Leftovers this small are subtraction residue between masses that agree up
/// to rounding, not mass that has to move.
const CRUMB: f64 = 1e-14;

/// Greedy sweep. Returns the unmatched source mass and, when `cells` is
/// given, the free cells used plus the leftover masses.
fn sweep(a: &PricePmf, b: &PricePmf, d: Bandwidth, mut cells: Option<&mut Vec<(usize, usize, f64)>>) -> (f64, Vec<f64>, Vec<f64>) {
    let xs = a.support();
    let ys = b.support();
    let mut rem_b = b.mass().to_vec();
    let mut rem_a = a.mass().to_vec();
    let mut lo = 0usize;
    let mut unmatched = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let left = x.saturating_sub(d.0);
        let right = x.saturating_add(d.0);
        while lo < ys.len() && (ys[lo] < left || rem_b[lo] <= 0.0) {
            lo += 1;
        }
        let mut rem = rem_a[i];
        let mut j = lo;
        while rem > 0.0 && j < ys.len() && ys[j] <= right {
            let take = rem.min(rem_b[j]);
            if take > 0.0 {
                rem -= take;
                rem_b[j] -= take;
                if let Some(c) = cells.as_deref_mut() {
                    c.push((i, j, take));
                }
            }
            if rem_b[j] <= CRUMB {
                rem_b[j] = 0.0;
                j += 1;
            } else {
                break;
            }
        }
        if rem <= CRUMB {
            rem = 0.0;
        }
        lo = lo.max(j.min(ys.len()));
        rem_a[i] = rem;
        unmatched += rem;
    }
    (unmatched, rem_a, rem_b)
}

/// `OT_d(a, b)`: least mass that must move by more than `d`.
pub fn ot_cost(a: &PricePmf, b: &PricePmf, d: Bandwidth) -> f64 {
    sweep(a, b, d, None).0.clamp(0.0, 1.0)
}

/// An optimal plan for `OT_d(a, b)`.
///
/// Free cells come from the sweep; leftover mass is coupled north-west-corner
/// style, and every leftover pair is necessarily farther apart than `d`.
pub fn solve_ot(a: &PricePmf, b: &PricePmf, d: Bandwidth) -> TransportPlan {
    let mut cells = Vec::new();
    let (_, rem_a, rem_b) = sweep(a, b, d, Some(&mut cells));
    cells.extend(north_west_corner(&rem_a, &rem_b));
    TransportPlan::from_cells(a, b, d, merge_cells(cells))
}

fn north_west_corner(rows: &[f64], cols: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let mut cols = cols.to_vec();
    let mut j = 0;
    for (i, &r) in rows.iter().enumerate() {
        let mut rem = r;
        while rem > 0.0 && j < cols.len() {
            let take = rem.min(cols[j]);
            if take > 0.0 {
                out.push((i, j, take));
                rem -= take;
                cols[j] -= take;
            }
            if cols[j] <= 0.0 {
                j += 1;
            }
        }
        // Rounding crumbs when the two leftover totals differ in the last ulp.
        if rem > 0.0 {
            if let Some(last) = cols.len().checked_sub(1) {
                out.push((i, last, rem));
            }
        }
    }
    out
}

fn merge_cells(cells: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j, m) in cells {
        *acc.entry((i, j)).or_insert(0.0) += m;
    }
    acc.into_iter().map(|((i, j), m)| (i, j, m)).collect()
}

/// Whether `λ · span < 1` on the union support, the regime in which the
/// tie-broken plan keeps the optimal indicator cost.
pub fn tie_break_within_breakpoint(a: &PricePmf, b: &PricePmf, lambda: f64) -> bool {
    let lo = a.support()[0].min(b.support()[0]);
    let hi = a.support()[a.len() - 1].max(b.support()[b.len() - 1]);
    lambda * ((hi - lo) as f64) < 1.0
}

/// Optimal plan for the ground cost `1(|x - y| > d) + λ |x - y|`.
///
/// With `λ = 0` this is [`solve_ot`]. Otherwise a min-cost flow is solved on a
/// sparse network: direct arcs for the free pairs, and a priced line through
/// the union support for the long moves (enter at cost 1, travel at `λ` per
/// RMB). When `λ · span < 1` the plan's indicator cost equals `OT_d(a, b)`
/// and, among optimal plans, it has the least total displacement.
pub fn solve_ot_regularized(a: &PricePmf, b: &PricePmf, d: Bandwidth, lambda: f64) -> Result<TransportPlan> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(alloc::format!("tie-break weight must be finite and nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(solve_ot(a, b, d));
    }
    let xs = a.support();
    let ys = b.support();
    let (n, m) = (xs.len(), ys.len());
    let line = union_support(xs, ys);
    let (s, t) = (0usize, 1usize);
    let src = |i: usize| 2 + i;
    let tgt = |j: usize| 2 + n + j;
    let lay = |k: usize| 2 + n + m + k;
    let mut g = FlowGraph::new(2 + n + m + line.len());

    for (i, &mass) in a.mass().iter().enumerate() {
        g.add_edge(s, src(i), mass, 0.0);
    }
    for (j, &mass) in b.mass().iter().enumerate() {
        g.add_edge(tgt(j), t, mass, 0.0);
    }
    let mut direct = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let first = ys.partition_point(|&y| y < x.saturating_sub(d.0));
        for (j, &y) in ys.iter().enumerate().skip(first) {
            if y > x.saturating_add(d.0) {
                break;
            }
            let id = g.add_edge(src(i), tgt(j), f64::INFINITY, lambda * x.abs_diff(y) as f64);
            direct.push((i, j, id));
        }
    }
    let enter: Vec<usize> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| g.add_edge(src(i), lay(line.binary_search(x).unwrap()), f64::INFINITY, 1.0))
        .collect();
    let exit: Vec<usize> = ys
        .iter()
        .enumerate()
        .map(|(j, y)| g.add_edge(lay(line.binary_search(y).unwrap()), tgt(j), f64::INFINITY, 0.0))
        .collect();
    for k in 1..line.len() {
        let gap = lambda * (line[k] - line[k - 1]) as f64;
        g.add_edge(lay(k - 1), lay(k), f64::INFINITY, gap);
        g.add_edge(lay(k), lay(k - 1), f64::INFINITY, gap);
    }

    let total: f64 = a.mass().iter().sum::<f64>().min(b.mass().iter().sum());
    g.min_cost_flow(s, t, total);

    let mut cells: Vec<(usize, usize, f64)> = direct.iter().map(|&(i, j, id)| (i, j, g.flow(id))).collect();
    // Long moves travel along a line, where the sorted coupling of entry and
    // exit masses is a cheapest decomposition of the line flow.
    let entered: Vec<f64> = enter.iter().map(|&id| g.flow(id)).collect();
    let exited: Vec<f64> = exit.iter().map(|&id| g.flow(id)).collect();
    cells.extend(north_west_corner(&entered, &exited));
    Ok(TransportPlan::from_cells(a, b, d, merge_cells(cells)))
}

/// Set-duality certificate for `OT_d(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetCertificate {
    /// Indices into the source support of the maximising set `A`.
    pub sources: Vec<usize>,
    /// Prices of the set `A`.
    pub prices: Vec<u64>,
    /// `a(A) - b(A^d)`, equal to `OT_d(a, b)`.
    pub value: f64,
}

/// Maximises `a(A) - b(A^d)` over subsets `A` of the source support, where
/// `A^d` is the set of target points within `d` of some point of `A`.
///
/// Exhaustive, so the combined support must not exceed
/// [`STRASSEN_MAX_SUPPORT`]. Among maximisers the first one found is kept,
/// which makes the empty set win when the value is zero.
pub fn strassen_certificate(a: &PricePmf, b: &PricePmf, d: Bandwidth) -> Result<SetCertificate> {
    let size = a.len() + b.len();
    if size > STRASSEN_MAX_SUPPORT {
        return Err(Error::SupportTooLarge { size, limit: STRASSEN_MAX_SUPPORT });
    }
    let neighbours: Vec<u32> = a
        .support()
        .iter()
        .map(|&x| {
            b.support()
                .iter()
                .enumerate()
                .filter(|&(_, &y)| d.is_free(x, y))
                .fold(0u32, |acc, (j, _)| acc | (1 << j))
        })
        .collect();

    struct Search<'a> {
        a: &'a [f64],
        b: &'a [f64],
        neighbours: &'a [u32],
        best_value: f64,
        best_set: u32,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, chosen: u32, covered: u32, a_sum: f64, b_sum: f64) {
            if i == self.a.len() {
                let value = a_sum - b_sum;
                if value > self.best_value {
                    self.best_value = value;
                    self.best_set = chosen;
                }
                return;
            }
            self.visit(i + 1, chosen, covered, a_sum, b_sum);
            let fresh = self.neighbours[i] & !covered;
            let mut added = 0.0;
            let mut bits = fresh;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                added += self.b[j];
                bits &= bits - 1;
            }
            self.visit(i + 1, chosen | (1 << i), covered | fresh, a_sum + self.a[i], b_sum + added);
        }
    }

    let mut search = Search { a: a.mass(), b: b.mass(), neighbours: &neighbours, best_value: 0.0, best_set: 0 };
    search.visit(0, 0, 0, 0.0, 0.0);
    let sources: Vec<usize> = (0..a.len()).filter(|i| search.best_set & (1 << i) != 0).collect();
    let prices = sources.iter().map(|&i| a.support()[i]).collect();
    Ok(SetCertificate { sources, prices, value: search.best_value.clamp(0.0, 1.0) })
}
