//! Dense two-phase simplex with Bland's rule.
//!
//! Problems arrive in equality form: maximize `c.x` subject to `A x = b`,
//! `x >= 0`. Redundant rows are removed up front by rank-revealing
//! elimination, so infeasibility verdicts are exact up to the stated
//! tolerances rather than heuristic.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;

/// Equality-constrained LP over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Row-major constraint matrix, `m x n`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Objective to maximize.
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible { x: Vec<f64>, objective: f64 },
    Infeasible,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows but {} right-hand sides",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(
                "constraint row length differs from variable count".into(),
            ));
        }
        Ok(())
    }

    /// Gaussian elimination on `[A|b]`; drops dependent rows, or reports
    /// an inconsistency when a vanishing row keeps a nonzero rhs.
    fn reduced_rows(&self) -> std::result::Result<(Vec<Vec<f64>>, Vec<f64>), ()> {
        let n = self.num_vars();
        let mut rows: Vec<Vec<f64>> = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(r, &bi)| {
                let mut v = r.clone();
                v.push(bi);
                v
            })
            .collect();
        let scale = rows
            .iter()
            .flat_map(|r| r.iter().take(n))
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(1.0);
        let b_scale = self.b.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

        let mut kept: Vec<usize> = Vec::new();
        let mut pivot_row = 0usize;
        for col in 0..n {
            let mut best = pivot_row;
            let mut best_abs = 0.0;
            for r in pivot_row..rows.len() {
                if rows[r][col].abs() > best_abs {
                    best_abs = rows[r][col].abs();
                    best = r;
                }
            }
            if best_abs <= RANK_TOL * scale {
                continue;
            }
            rows.swap(pivot_row, best);
            let piv = rows[pivot_row][col];
            for r in 0..rows.len() {
                if r == pivot_row {
                    continue;
                }
                let factor = rows[r][col] / piv;
                if factor != 0.0 {
                    for k in col..=n {
                        let delta = factor * rows[pivot_row][k];
                        rows[r][k] -= delta;
                    }
                }
            }
            kept.push(col);
            pivot_row += 1;
            if pivot_row == rows.len() {
                break;
            }
        }
        // rows beyond the pivot count must vanish entirely
        for r in pivot_row..rows.len() {
            let coeff_max = rows[r][..n].iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if coeff_max <= RANK_TOL * scale && rows[r][n].abs() > 1e-9 * (1.0 + b_scale) {
                return Err(());
            }
        }
        rows.truncate(pivot_row);
        let b = rows.iter().map(|r| r[n]).collect();
        let a = rows
            .into_iter()
            .map(|mut r| {
                r.truncate(n);
                r
            })
            .collect();
        Ok((a, b))
    }
}

struct Tableau {
    /// `m` rows of `width + 1` entries; the last column is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

enum PivotResult {
    Optimal,
    Unbounded { entering: usize },
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor != 0.0 {
                for k in 0..=self.width {
                    let delta = factor * self.rows[row][k];
                    self.rows[r][k] -= delta;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximize `obj.x` with Bland's anti-cycling rule; `allowed` masks
    /// out columns that may not enter (spent artificials).
    fn optimize(&mut self, obj: &[f64], allowed: &[bool]) -> PivotResult {
        let m = self.rows.len();
        // reduced cost row
        let mut red: Vec<f64> = obj.to_vec();
        red.push(0.0);
        for r in 0..m {
            let coeff = red[self.basis[r]];
            if coeff != 0.0 {
                for k in 0..=self.width {
                    let delta = coeff * self.rows[r][k];
                    red[k] -= delta;
                }
            }
        }
        loop {
            // Bland: lowest-index improving column
            let entering = (0..self.width)
                .find(|&j| allowed[j] && red[j] > COST_TOL);
            let Some(j) = entering else {
                return PivotResult::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let coef = self.rows[r][j];
                if coef > PIVOT_TOL {
                    let ratio = self.rhs(r) / coef;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return PivotResult::Unbounded { entering: j };
            };
            self.pivot(row, j);
            let coeff = red[j];
            for k in 0..=self.width {
                let delta = coeff * self.rows[row][k];
                red[k] -= delta;
            }
        }
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &bv) in self.basis.iter().enumerate() {
            if bv < n {
                x[bv] = self.rhs(r);
            }
        }
        x
    }
}

/// Two-phase simplex. `Feasible` solutions satisfy `A x = b` within
/// `1e-9 (1 + ||b||)` and `x >= -1e-12`; `Infeasible` means the phase-1
/// optimum exceeded `1e-9`.
pub fn lp_solve(p: &LinearProgram) -> Result<LpOutcome> {
    p.validate()?;
    let n = p.num_vars();
    let Ok((mut a, mut b)) = p.reduced_rows() else {
        return Ok(LpOutcome::Infeasible);
    };
    let m = a.len();
    if m == 0 {
        // no constraints: optimum is 0 unless some objective coefficient is positive
        if let Some(j) = p.c.iter().position(|&cj| cj > COST_TOL) {
            let mut ray = vec![0.0; n];
            ray[j] = 1.0;
            return Err(Error::Unbounded { ray });
        }
        return Ok(LpOutcome::Feasible {
            x: vec![0.0; n],
            objective: 0.0,
        });
    }
    for r in 0..m {
        if b[r] < 0.0 {
            for v in a[r].iter_mut() {
                *v = -*v;
            }
            b[r] = -b[r];
        }
    }

    // phase 1: artificials form the starting basis
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for r in 0..m {
        let mut row = vec![0.0; width + 1];
        row[..n].copy_from_slice(&a[r]);
        row[n + r] = 1.0;
        row[width] = b[r];
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        width,
    };
    let mut phase1_obj = vec![0.0; width];
    for j in n..width {
        phase1_obj[j] = -1.0;
    }
    let allowed = vec![true; width];
    match tab.optimize(&phase1_obj, &allowed) {
        PivotResult::Optimal => {}
        PivotResult::Unbounded { .. } => unreachable!("phase-1 objective is bounded"),
    }
    let infeas: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(r, _)| tab.rhs(r))
        .sum();
    if infeas > 1e-9 {
        return Ok(LpOutcome::Infeasible);
    }

    // drive leftover artificials out of the basis
    let mut drop_rows = Vec::new();
    for r in 0..tab.rows.len() {
        if tab.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL) {
                tab.pivot(r, j);
            } else {
                drop_rows.push(r);
            }
        }
    }
    for &r in drop_rows.iter().rev() {
        tab.rows.remove(r);
        tab.basis.remove(r);
    }

    let mut phase2_obj = vec![0.0; width];
    phase2_obj[..n].copy_from_slice(&p.c);
    let mut allowed = vec![true; width];
    for flag in allowed.iter_mut().skip(n) {
        *flag = false;
    }
    match tab.optimize(&phase2_obj, &allowed) {
        PivotResult::Optimal => {
            let x = tab.solution(n);
            let objective = x.iter().zip(&p.c).map(|(xi, ci)| xi * ci).sum();
            Ok(LpOutcome::Feasible { x, objective })
        }
        PivotResult::Unbounded { entering } => {
            let mut ray = vec![0.0; n];
            if entering < n {
                ray[entering] = 1.0;
            }
            for (r, &bv) in tab.basis.iter().enumerate() {
                if bv < n {
                    ray[bv] = (-tab.rows[r][entering]).max(0.0);
                }
            }
            Err(Error::Unbounded { ray })
        }
    }
}
