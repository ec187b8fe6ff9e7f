//! ℓ1-minimal shallow ReLU interpolation.
//!
//! Given samples `u(x_0), …, u(x_N)` the problem is to minimise
//! `Σ |w_i| + |v_i|` over interpolants
//! `ũ(x) = Σ_i w_i σ(x − x_i) + v_i σ(x_i − x) + C`.
//! On a uniform grid the optimum has the closed form implemented by
//! [`min_weight`]; [`witness`] constructs an optimiser and [`lp_oracle`]
//! solves the same problem as a linear program.

pub mod simplex;

use crate::core1d::{uniform_nodes, AnalyticVelocity};
use crate::{Error, Result};

/// Largest node count accepted by the dense LP oracle.
pub const LP_MAX_NODES: usize = 65;

/// Samples `u(i/N)` for `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpProblem {
    u_vals: Vec<f64>,
}

impl InterpProblem {
    pub fn new(u_vals: Vec<f64>) -> Result<Self> {
        if u_vals.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "interpolation needs N >= 2, got {} samples",
                u_vals.len()
            )));
        }
        if u_vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { u_vals })
    }

    pub fn from_fn(n: usize, u: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..=n).map(|i| u(i as f64 / n as f64)).collect())
    }

    /// Grid parameter `N` (number of cells).
    pub fn n(&self) -> usize {
        self.u_vals.len() - 1
    }

    pub fn u_vals(&self) -> &[f64] {
        &self.u_vals
    }

    pub fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.n())
    }

    /// Scaled second differences `k_i = N Δ²u(i/N)` and their signed sums.
    pub fn curvature(&self) -> Curvature {
        Curvature::from_slopes(&self.slopes())
    }

    /// First slope `N (u(1/N) − u(0))`.
    pub fn first_slope(&self) -> f64 {
        self.n() as f64 * (self.u_vals[1] - self.u_vals[0])
    }

    fn slopes(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.u_vals.windows(2).map(|w| n * (w[1] - w[0])).collect()
    }
}

/// `k_i` for interior nodes together with `K₊ = Σ max(k_i, 0)` and
/// `K₋ = Σ min(k_i, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    /// `k[i − 1]` holds `k_i`, `i = 1..N−1`.
    pub k: Vec<f64>,
    pub k_plus: f64,
    pub k_minus: f64,
}

impl Curvature {
    fn from_slopes(slopes: &[f64]) -> Self {
        let k: Vec<f64> = slopes.windows(2).map(|w| w[1] - w[0]).collect();
        let k_plus = k.iter().filter(|&&v| v > 0.0).sum();
        let k_minus = k.iter().filter(|&&v| v < 0.0).sum();
        Self { k, k_plus, k_minus }
    }

    pub fn abs_sum(&self) -> f64 {
        self.k.iter().map(|v| v.abs()).sum()
    }
}

/// Distance from `p` to the interval `[a, b]`; zero on the closed interval.
pub fn dist_to_interval(p: f64, a: f64, b: f64) -> f64 {
    (a - p).max(p - b).max(0.0)
}

/// Closed-form optimum on a uniform grid:
/// `Σ|k_i| + dist(−N(u(1/N) − u(0)), [K₋, K₊])`.
pub fn min_weight(problem: &InterpProblem) -> f64 {
    min_weight_impl(problem, false)
}

/// Same as [`min_weight`] but with the sign of the boundary term flipped.
/// Exists only so the verification suite can prove it detects a broken formula.
pub fn min_weight_faulty(problem: &InterpProblem) -> f64 {
    min_weight_impl(problem, true)
}

fn min_weight_impl(problem: &InterpProblem, flip: bool) -> f64 {
    let c = problem.curvature();
    let p = -problem.first_slope();
    let d = dist_to_interval(p, c.k_minus, c.k_plus);
    if flip {
        c.abs_sum() - d
    } else {
        c.abs_sum() + d
    }
}

/// Symmetric rewriting `Σ|k_i| + ½ max(|s_0 + s_{N−1}| − Σ|k_i|, 0)` of the
/// closed form, with `s_0, s_{N−1}` the first and last scaled slopes.
pub fn min_weight_symmetric(problem: &InterpProblem) -> f64 {
    let s = problem.slopes();
    let total = problem.curvature().abs_sum();
    total + 0.5 * ((s[0] + s[s.len() - 1]).abs() - total).max(0.0)
}

/// Closed form on arbitrary strictly increasing nodes, with `k_i` the jumps of
/// the secant slopes.
pub fn min_weight_at_nodes(xs: &[f64], us: &[f64]) -> Result<f64> {
    let slopes = node_slopes(xs, us)?;
    let c = Curvature::from_slopes(&slopes);
    Ok(c.abs_sum() + dist_to_interval(-slopes[0], c.k_minus, c.k_plus))
}

fn node_slopes(xs: &[f64], us: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != us.len() || xs.len() < 3 {
        return Err(Error::InvalidInput(
            "need at least three nodes with matching sample count".into(),
        ));
    }
    for (i, w) in xs.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NonMonotoneSamples { index: i + 1 });
        }
    }
    Ok(xs
        .windows(2)
        .zip(us.windows(2))
        .map(|(x, u)| (u[1] - u[0]) / (x[1] - x[0]))
        .collect())
}

/// Explicit optimal interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpWitness {
    pub nodes: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl InterpWitness {
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.c;
        for ((&xi, &wi), &vi) in self.nodes.iter().zip(&self.w).zip(&self.v) {
            acc += wi * (x - xi).max(0.0) + vi * (xi - x).max(0.0);
        }
        acc
    }

    /// `Σ |w_i| + |v_i|`.
    pub fn cost(&self) -> f64 {
        self.w.iter().chain(&self.v).map(|a| a.abs()).sum()
    }

    /// Largest interpolation error over the nodes.
    pub fn residual(&self, us: &[f64]) -> f64 {
        self.nodes
            .iter()
            .zip(us)
            .map(|(&x, &u)| (self.eval(x) - u).abs())
            .fold(0.0, f64::max)
    }
}

/// Witness for a uniform-grid problem.
pub fn witness(problem: &InterpProblem) -> InterpWitness {
    witness_at_nodes(&problem.nodes(), problem.u_vals()).expect("uniform problem is well formed")
}

/// Witness on arbitrary nodes: the `v_i` are filled greedily in ascending
/// order inside `[min(k_i, 0), max(k_i, 0)]` until their sum reaches the
/// clamp of `−s_0` to `[K₋, K₊]`.
pub fn witness_at_nodes(xs: &[f64], us: &[f64]) -> Result<InterpWitness> {
    let slopes = node_slopes(xs, us)?;
    let curv = Curvature::from_slopes(&slopes);
    let n = xs.len() - 1;
    let target = (-slopes[0]).clamp(curv.k_minus, curv.k_plus);

    let mut v = vec![0.0; n + 1];
    let mut remaining = target;
    for (i, &k) in curv.k.iter().enumerate() {
        if remaining == 0.0 {
            break;
        }
        let take = if remaining > 0.0 && k > 0.0 {
            k.min(remaining)
        } else if remaining < 0.0 && k < 0.0 {
            k.max(remaining)
        } else {
            0.0
        };
        v[i + 1] = take;
        remaining -= take;
    }

    let mut w = vec![0.0; n + 1];
    let v_sum: f64 = v.iter().sum();
    w[0] = slopes[0] + v_sum;
    for (i, &k) in curv.k.iter().enumerate() {
        w[i + 1] = k - v[i + 1];
    }
    let c = us[0] - xs.iter().zip(&v).map(|(&x, &vi)| vi * (x - xs[0])).sum::<f64>();
    Ok(InterpWitness {
        nodes: xs.to_vec(),
        w,
        v,
        c,
    })
}

/// LP optimum for a uniform-grid problem.
pub fn lp_oracle(problem: &InterpProblem) -> Result<f64> {
    lp_oracle_at_nodes(&problem.nodes(), problem.u_vals())
}

/// Solves the interpolation problem as a linear program in split-sign
/// variables `w⁺, w⁻, v⁺, v⁻` per node plus a free constant `C = C⁺ − C⁻`.
pub fn lp_oracle_at_nodes(xs: &[f64], us: &[f64]) -> Result<f64> {
    node_slopes(xs, us)?;
    let m = xs.len();
    if m > LP_MAX_NODES {
        return Err(Error::InvalidInput(format!(
            "dense LP oracle is limited to {LP_MAX_NODES} nodes, got {m}"
        )));
    }
    let vars = 4 * m + 2;
    let mut cost = vec![1.0; vars];
    cost[4 * m] = 0.0;
    cost[4 * m + 1] = 0.0;
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|&xj| {
            let mut row = vec![0.0; vars];
            for (i, &xi) in xs.iter().enumerate() {
                let right = (xj - xi).max(0.0);
                let left = (xi - xj).max(0.0);
                row[4 * i] = right;
                row[4 * i + 1] = -right;
                row[4 * i + 2] = left;
                row[4 * i + 3] = -left;
            }
            row[4 * m] = 1.0;
            row[4 * m + 1] = -1.0;
            row
        })
        .collect();
    Ok(simplex::minimize(&cost, &rows, us)?.objective)
}

/// `(N, S_N)` for `N = 2^j`, alongside the limit `‖u′‖_TV`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticTable {
    pub rows: Vec<(usize, f64)>,
    pub tv_limit: f64,
}

impl AsymptoticTable {
    /// `|S_N − ‖u′‖_TV|` per row.
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|&(_, s)| (s - self.tv_limit).abs()).collect()
    }
}

/// Closed-form optimum for `N = 2^j`, `j ∈ js`.
pub fn asymptotic_check(u: AnalyticVelocity, js: std::ops::RangeInclusive<u32>) -> AsymptoticTable {
    let rows = js
        .map(|j| {
            let n = 1usize << j;
            let problem = InterpProblem::from_fn(n, |x| u.jet(x)[0]).expect("N >= 2");
            (n, min_weight(&problem))
        })
        .collect();
    AsymptoticTable {
        rows,
        tv_limit: u.derivative_piecewise().tv(),
    }
}
