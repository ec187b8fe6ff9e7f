//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Solves `min cᵀx  s.t.  A x = b,  x ≥ 0`. Intended for the small
//! verification problems of this crate (a few hundred columns at most).

use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;

/// Optimal solution of a standard-form linear program.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row (last entry is −objective) for costs `c` restricted to
    /// columns `< allowed`.
    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut obj = vec![0.0; self.width + 1];
        obj[..c.len()].copy_from_slice(c);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = obj[b];
            if cb != 0.0 {
                for (v, tv) in obj.iter_mut().zip(&self.rows[r]) {
                    *v -= cb * tv;
                }
            }
        }
        obj
    }

    /// Runs Bland-rule iterations on columns `< allowed` until optimal.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> Result<()> {
        let max_iter = 50_000;
        for _ in 0..max_iter {
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][enter];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => ratio < br - 1e-14 || (ratio <= br + 1e-14 && self.basis[r] < bb),
                    };
                    if better {
                        best = Some((ratio, r, self.basis[r]));
                    }
                }
            }
            let Some((_, leave, _)) = best else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(leave, enter, obj);
        }
        Err(Error::InvalidInput("simplex iteration limit reached".into()))
    }
}

/// Minimises `cᵀx` subject to `a x = b`, `x ≥ 0`. `a` is row-major.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("inconsistent LP dimensions".into()));
    }
    // columns: n structural, m artificial, then rhs
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; width + 1];
        for (j, &v) in row.iter().enumerate() {
            t[j] = sign * v;
        }
        t[n + i] = 1.0;
        t[width] = sign * bi;
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        width,
    };

    // phase 1
    let mut phase1 = vec![0.0; width];
    for v in phase1[n..].iter_mut() {
        *v = 1.0;
    }
    let mut obj = tab.reduced_costs(&phase1);
    tab.optimize(&mut obj, width)?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(r, _)| tab.rhs(r))
        .sum();
    if infeasibility > FEAS_EPS * (1.0 + b.iter().map(|v| v.abs()).sum::<f64>()) {
        return Err(Error::LpInfeasible);
    }

    // drive artificial variables out of the basis, dropping redundant rows
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_EPS) {
                Some(j) => {
                    let mut dummy = vec![0.0; width + 1];
                    tab.pivot(r, j, &mut dummy);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    // phase 2 over structural columns only
    let mut obj = tab.reduced_costs(c);
    tab.optimize(&mut obj, n)?;

    let mut x = vec![0.0; n];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs(r);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { objective, x })
}
