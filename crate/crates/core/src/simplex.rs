//! Dense two-phase simplex for small linear programs in standard form
//! `min cᵀx  s.t.  Ax = b, x ≥ 0`, using Bland's rule so it cannot cycle.

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // rows × (cols + 1); last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost` over the columns in `allowed`. Returns false if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let reduced = |j: usize| -> f64 {
                let mut r = cost[j];
                for (row, &bj) in self.basis.iter().enumerate() {
                    r -= cost[bj] * self.t[row][j];
                }
                r
            };
            let entering = (0..self.cols).find(|&j| allowed(j) && !self.basis.contains(&j) && reduced(j) < -PIVOT_TOL);
            let Some(col) = entering else { return true };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for row in 0..self.t.len() {
                let a = self.t[row][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[row][rhs] / a;
                    leave = match leave {
                        None => Some((row, ratio)),
                        Some((r0, q0)) => {
                            if ratio < q0 - 1e-14 || (ratio <= q0 + 1e-14 && self.basis[row] < self.basis[r0]) {
                                Some((row, ratio))
                            } else {
                                Some((r0, q0))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((row, _)) => self.pivot(row, col),
            }
        }
    }
}

/// Solves `min cᵀx s.t. Ax = b, x ≥ 0` for a dense row-major `a`.
pub fn solve_standard_form(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for (row, &rhs) in a.iter().zip(b) {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut line: Vec<f64> = row.iter().map(|v| v * sign).collect();
        line.resize(cols + 1, 0.0);
        line[cols] = rhs * sign;
        t.push(line);
    }
    for (r, line) in t.iter_mut().enumerate() {
        line[n + r] = 1.0;
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect(), cols };

    // Phase 1: minimize the sum of artificials.
    let phase1: Vec<f64> = (0..cols).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    tab.optimize(&phase1, &|_| true);
    let infeas: f64 = tab.basis.iter().enumerate().filter(|(_, &bj)| bj >= n).map(|(r, _)| tab.t[r][cols]).sum();
    let scale = 1.0 + b.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if infeas > FEAS_TOL * scale {
        return LpOutcome::Infeasible;
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and dropped.
    let mut row = 0;
    while row < tab.t.len() {
        if tab.basis[row] >= n {
            match (0..n).find(|&j| tab.t[row][j].abs() > PIVOT_TOL) {
                Some(j) => {
                    tab.pivot(row, j);
                    row += 1;
                }
                None => {
                    tab.t.remove(row);
                    tab.basis.remove(row);
                }
            }
        } else {
            row += 1;
        }
    }

    let mut cost = c.to_vec();
    cost.resize(cols, 0.0);
    if !tab.optimize(&cost, &|j| j < n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (r, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[r][cols].max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}
