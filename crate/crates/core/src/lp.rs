//! Dense two-phase simplex for small box-bounded linear programs.
//!
//! Solves `max c.x  s.t.  A x = b,  lo <= x <= hi` and, among all optimal
//! points, returns the lexicographically smallest `x`. Pivoting follows
//! Bland's rule, so the result is deterministic and cycling cannot occur.
//!
//! The lexicographic refinement is done in a single tableau: after each
//! stage every nonbasic column with a strictly positive reduced cost is
//! frozen at zero (moving it would leave the optimal face), and the next
//! stage minimizes the following coordinate over what remains.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct BoxLp<'a> {
    pub objective: &'a [f64],
    pub equalities: &'a [Vec<f64>],
    pub rhs: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    /// Row-major constraint rows; the last entry of each row is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    allowed: Vec<bool>,
    ncols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let p = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[pr].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr {
                continue;
            }
            let factor = row[pc];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(&self.rows[r]) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| cost[b] * self.rhs(r))
            .sum()
    }

    /// Minimizes `cost . y` over the allowed columns.
    fn minimize(&mut self, cost: &[f64]) -> Result<Outcome> {
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        for _ in 0..MAX_ITERATIONS {
            let d = self.reduced_costs(cost);
            let entering =
                (0..self.ncols).find(|&j| self.allowed[j] && !is_basic[j] && d[j] < -COST_TOL);
            let Some(pc) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][pc];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14
                                || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            is_basic[self.basis[pr]] = false;
            is_basic[pc] = true;
            self.pivot(pr, pc);
        }
        Err(Error::Lp("iteration limit reached".into()))
    }

    /// Freezes nonbasic columns whose reduced cost is positive at the optimum.
    fn restrict_to_optimal_face(&mut self, cost: &[f64]) {
        let d = self.reduced_costs(cost);
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        for j in 0..self.ncols {
            if !is_basic[j] && d[j] > COST_TOL {
                self.allowed[j] = false;
            }
        }
    }
}

/// Maximizes `lp.objective . x` and breaks ties toward the lexicographically
/// smallest optimal `x`.
pub fn maximize_lexmin(lp: &BoxLp<'_>) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.equalities.len();
    if lp.lower.len() != n || lp.upper.len() != n || lp.rhs.len() != m {
        return Err(Error::DimensionMismatch(
            "linear program shapes disagree".into(),
        ));
    }
    if lp.equalities.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("constraint row length".into()));
    }
    for j in 0..n {
        if lp.lower[j].is_nan() || lp.upper[j].is_nan() || lp.lower[j] > lp.upper[j] {
            return Err(Error::Lp(format!("empty bound interval for variable {j}")));
        }
    }

    // Columns: y (n), box slacks t (n), artificials (m).
    let ncols = 2 * n + m;
    let mut rows = Vec::with_capacity(m + n);
    for (i, a) in lp.equalities.iter().enumerate() {
        let shift: f64 = a.iter().zip(lp.lower).map(|(ai, li)| ai * li).sum();
        let mut b = lp.rhs[i] - shift;
        let scale = a.iter().fold(0.0_f64, |s, x| s.max(x.abs())).max(b.abs());
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        for j in 0..n {
            row[j] = sign * a[j] / scale;
        }
        row[2 * n + i] = 1.0;
        b = sign * b / scale;
        row[ncols] = b;
        rows.push(row);
    }
    for j in 0..n {
        let mut row = vec![0.0; ncols + 1];
        row[j] = 1.0;
        row[n + j] = 1.0;
        row[ncols] = lp.upper[j] - lp.lower[j];
        rows.push(row);
    }
    let basis = (0..m)
        .map(|i| 2 * n + i)
        .chain((0..n).map(|j| n + j))
        .collect();
    let mut t = Tableau {
        rows,
        basis,
        allowed: vec![true; ncols],
        ncols,
    };

    // Phase I.
    let mut cost = vec![0.0; ncols];
    for c in cost.iter_mut().skip(2 * n) {
        *c = 1.0;
    }
    if m > 0 {
        t.minimize(&cost)?;
        let infeasibility = t.objective(&cost);
        if infeasibility > 1e-9 {
            return Err(Error::Lp(format!(
                "constraints are infeasible (phase-one residual {infeasibility:e})"
            )));
        }
        // Drive artificials out of the basis; drop rows that are redundant.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= 2 * n {
                let col = (0..2 * n).find(|&j| t.rows[r][j].abs() > 1e-9);
                match col {
                    Some(c) => {
                        t.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }
    for j in 2 * n..ncols {
        t.allowed[j] = false;
    }

    // Phase II on the scaled objective.
    let cscale = lp.objective.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    let mut cost = vec![0.0; ncols];
    if cscale > 0.0 {
        for (c, obj) in cost.iter_mut().zip(lp.objective) {
            *c = -obj / cscale;
        }
        if let Outcome::Unbounded = t.minimize(&cost)? {
            return Err(Error::Lp("objective is unbounded".into()));
        }
        t.restrict_to_optimal_face(&cost);
    }

    for i in 0..n {
        let mut cost = vec![0.0; ncols];
        cost[i] = 1.0;
        if let Outcome::Unbounded = t.minimize(&cost)? {
            return Err(Error::Lp("tie-break stage unbounded".into()));
        }
        t.restrict_to_optimal_face(&cost);
    }

    let mut y = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            y[b] = t.rhs(r);
        }
    }
    let x: Vec<f64> = (0..n)
        .map(|j| (y[j] + lp.lower[j]).clamp(lp.lower[j], lp.upper[j]))
        .collect();
    let value = crate::linalg::dot(lp.objective, &x);
    Ok(LpSolution { x, value })
}
