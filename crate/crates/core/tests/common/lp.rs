//! Dense two-phase tableau simplex with Bland's rule. Slow and simple on
//! purpose; only used to check the fast solvers on tiny instances.

const PIVOT_EPS: f64 = 1e-12;

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: coefficients then rhs
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimises `cost · x` over the current basis, only letting columns with
    /// `allowed[j]` enter.
    fn optimise(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        loop {
            let reduced = |j: usize| -> f64 {
                cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>()
            };
            let entering = (0..self.cols).find(|&j| allowed[j] && !self.basis.contains(&j) && reduced(j) < -1e-12);
            let Some(c) = entering else { return true };
            let mut best: Option<(f64, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[self.cols] / row[c];
                    let better = match best {
                        None => true,
                        Some((r, bi)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && self.basis[i] < self.basis[bi]),
                    };
                    if better {
                        best = Some((ratio, i));
                    }
                }
            }
            let Some((_, r)) = best else { return false };
            self.pivot(r, c);
        }
    }
}

/// Solves `min c·x  s.t.  A x = b, x ≥ 0`. Returns the optimal value and `x`,
/// or `None` when infeasible or unbounded.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = 1.0;
        row[cols] = sign * b[i];
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), cols };

    let mut phase1 = vec![0.0; cols];
    for v in phase1.iter_mut().skip(n) {
        *v = 1.0;
    }
    t.optimise(&phase1, &vec![true; cols]);
    let infeasibility: f64 = t.rows.iter().zip(&t.basis).filter(|(_, &bj)| bj >= n).map(|(r, _)| r[cols]).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    // Drive artificials out of the basis; drop rows that are redundant.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > PIVOT_EPS) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, m));
    let allowed: Vec<bool> = (0..cols).map(|j| j < n).collect();
    if !t.optimise(&phase2, &allowed) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (row, &bj) in t.rows.iter().zip(&t.basis) {
        if bj < n {
            x[bj] = row[cols];
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    Some((value, x))
}

/// Transportation problem between `a` on `xs` and `b` on `ys` with ground
/// cost `cost(x, y)`. Returns the optimal value and the dense plan, row-major.
pub fn transport(xs: &[u64], a: &[f64], ys: &[u64], b: &[f64], cost: impl Fn(u64, u64) -> f64) -> (f64, Vec<f64>) {
    let (m, n) = (xs.len(), ys.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..m {
        let mut r = vec![0.0; m * n];
        for j in 0..n {
            r[i * n + j] = 1.0;
        }
        rows.push(r);
        rhs.push(a[i]);
    }
    for j in 0..n {
        let mut r = vec![0.0; m * n];
        for i in 0..m {
            r[i * n + j] = 1.0;
        }
        rows.push(r);
        rhs.push(b[j]);
    }
    let c: Vec<f64> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| cost(x, y)).collect();
    solve(&rows, &rhs, &c).expect("balanced transportation problems are feasible")
}

/// Thresholded indicator cost.
pub fn indicator(d: u64) -> impl Fn(u64, u64) -> f64 {
    move |x, y| if x.abs_diff(y) > d { 1.0 } else { 0.0 }
}
