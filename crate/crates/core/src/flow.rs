//! Exact flows of 1D piecewise-linear ReLU fields, control schedules, Euler
//! ResNet iteration and realization of geodesics as finite flow compositions.

use std::io::Write;

use rayon::prelude::*;

use crate::core1d::uniform_nodes;
use crate::l1_interp::{witness_at_nodes, InterpWitness};
use crate::relu1d::{complexity, geodesic_point};
use crate::{Error, MapSpec, MonotonePwl, Result};

/// Tolerance of the family membership test.
pub const MEMBER_TOL: f64 = 1e-12;

/// One neuron `w·σ(a·x + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluTerm {
    pub w: f64,
    pub a: f64,
    pub b: f64,
}

impl ReluTerm {
    pub fn new(w: f64, a: f64, b: f64) -> Self {
        Self { w, a, b }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.w * (self.a * x + self.b).max(0.0)
    }
}

/// Linearity cell `[lo, hi)` on which the field equals `alpha·x + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Shallow ReLU field `f(x) = Σ wᵢ σ(aᵢx + bᵢ)` with its exact piecewise
/// linear representation over the whole real line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluField1D {
    terms: Vec<ReluTerm>,
    kinks: Vec<f64>,
    cells: Vec<Cell>,
}

impl ReluField1D {
    pub fn new(terms: Vec<ReluTerm>) -> Result<Self> {
        if terms
            .iter()
            .any(|t| !(t.w.is_finite() && t.a.is_finite() && t.b.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite ReLU parameter".into()));
        }
        let (kinks, cells) = build_cells(&terms);
        Ok(Self { terms, kinks, cells })
    }

    /// Field realizing an interpolation witness, including its constant term.
    pub fn from_witness(wit: &InterpWitness) -> Result<Self> {
        let mut terms = Vec::with_capacity(2 * wit.nodes.len() + 1);
        for ((&x, &w), &v) in wit.nodes.iter().zip(&wit.w).zip(&wit.v) {
            if w != 0.0 {
                terms.push(ReluTerm::new(w, 1.0, -x));
            }
            if v != 0.0 {
                terms.push(ReluTerm::new(v, -1.0, x));
            }
        }
        if wit.c != 0.0 {
            terms.push(ReluTerm::new(wit.c, 0.0, 1.0));
        }
        Self::new(terms)
    }

    pub fn zero() -> Self {
        Self::new(Vec::new()).expect("empty field")
    }

    pub fn terms(&self) -> &[ReluTerm] {
        &self.terms
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.cells[self.kinks.partition_point(|&k| k <= x)];
        c.alpha * x + c.beta
    }

    /// `Σ |wᵢaᵢ|`.
    pub fn weight_cost(&self) -> f64 {
        self.terms.iter().map(|t| (t.w * t.a).abs()).sum()
    }

    /// Total variation of `f′` on `[0, 1]`.
    pub fn derivative_tv(&self) -> f64 {
        self.kinks
            .iter()
            .enumerate()
            .filter(|(_, &k)| (0.0..=1.0).contains(&k))
            .map(|(i, _)| (self.cells[i + 1].alpha - self.cells[i].alpha).abs())
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let terms = self.terms.iter().map(|t| ReluTerm::new(c * t.w, t.a, t.b)).collect();
        Self::new(terms).expect("scaling keeps parameters finite")
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Index of the cell used when leaving `x` in direction `forward`.
    fn locate(&self, x: f64, forward: bool) -> usize {
        let j = self.kinks.partition_point(|&k| k <= x);
        if !forward && j > 0 && self.kinks[j - 1] == x {
            j - 1
        } else {
            j
        }
    }
}

fn build_cells(terms: &[ReluTerm]) -> (Vec<f64>, Vec<Cell>) {
    let mut kinks: Vec<f64> = terms.iter().filter(|t| t.a != 0.0).map(|t| -t.b / t.a).collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    // at −∞ the active terms are those with a < 0 (and constants with b > 0)
    let (mut alpha, mut beta) = (0.0, 0.0);
    for t in terms {
        if t.a < 0.0 || (t.a == 0.0 && t.b > 0.0) {
            alpha += t.w * t.a;
            beta += t.w * t.b;
        }
    }
    let mut crossing: Vec<(f64, &ReluTerm)> = terms.iter().filter(|t| t.a != 0.0).map(|t| (-t.b / t.a, t)).collect();
    crossing.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut cells = Vec::with_capacity(kinks.len() + 1);
    let mut lo = f64::NEG_INFINITY;
    let mut next = 0;
    for &k in &kinks {
        cells.push(Cell { lo, hi: k, alpha, beta });
        while next < crossing.len() && crossing[next].0 == k {
            let t = crossing[next].1;
            let sign = if t.a > 0.0 { 1.0 } else { -1.0 };
            alpha += sign * t.w * t.a;
            beta += sign * t.w * t.b;
            next += 1;
        }
        lo = k;
    }
    cells.push(Cell {
        lo,
        hi: f64::INFINITY,
        alpha,
        beta,
    });
    (kinks, cells)
}

/// The 1D ReLU control family: `f(0) = f(1) = 0` and `Σ|wᵢaᵢ| ≤ 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Relu1DFamily;

impl Relu1DFamily {
    pub fn contains(field: &ReluField1D) -> bool {
        field.eval(0.0).abs() <= MEMBER_TOL
            && field.eval(1.0).abs() <= MEMBER_TOL
            && field.weight_cost() <= 1.0 + MEMBER_TOL
    }
}

/// `x(t) − x(0)` for `ẋ = αx + β` started where the velocity is `v`.
fn advance(alpha: f64, v: f64, t: f64) -> f64 {
    let at = alpha * t;
    if at.abs() < 1e-8 {
        v * t * (1.0 + at / 2.0 + at * at / 6.0)
    } else {
        v * at.exp_m1() / alpha
    }
}

/// Time for `ẋ = αx + β` to travel displacement `d` starting at velocity `v`
/// (same sign as `d`); infinite if the fixed point is reached first.
fn hit_time(alpha: f64, v: f64, d: f64) -> f64 {
    if !d.is_finite() {
        return f64::INFINITY;
    }
    if alpha == 0.0 {
        return d / v;
    }
    let z = alpha * d / v;
    if z <= -1.0 {
        f64::INFINITY
    } else {
        z.ln_1p() / alpha
    }
}

/// Exact time-`t` flow of `field` from `x0`. Negative `t` flows backward.
pub fn flow_exact(field: &ReluField1D, t: f64, x0: f64) -> f64 {
    if t < 0.0 {
        return flow_exact(&field.negated(), -t, x0);
    }
    let mut x = x0;
    let mut remaining = t;
    // each cell is entered at most once since the velocity keeps its sign
    for _ in 0..=field.cells.len() + 1 {
        if remaining <= 0.0 {
            return x;
        }
        let here = field.eval(x);
        if here == 0.0 {
            return x;
        }
        let cell = field.cells[field.locate(x, here > 0.0)];
        let v = cell.alpha * x + cell.beta;
        if v == 0.0 || (v > 0.0) != (here > 0.0) {
            return x;
        }
        let target = if v > 0.0 { cell.hi } else { cell.lo };
        let tau = hit_time(cell.alpha, v, target - x);
        if tau >= remaining {
            let next = x + advance(cell.alpha, v, remaining);
            // rounding must not push the point across the cell boundary
            return if v > 0.0 { next.min(target) } else { next.max(target) };
        }
        x = target;
        remaining -= tau;
    }
    x
}

/// Ordered list of `(field, duration)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlSchedule {
    segments: Vec<(ReluField1D, f64)>,
}

impl ControlSchedule {
    pub fn new(segments: Vec<(ReluField1D, f64)>) -> Result<Self> {
        let mut s = Self::default();
        for (f, t) in segments {
            s.push(f, t)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, field: ReluField1D, duration: f64) -> Result<()> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "duration must be finite and >= 0, got {duration}"
            )));
        }
        self.segments.push((field, duration));
        Ok(())
    }

    pub fn segments(&self) -> &[(ReluField1D, f64)] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|(_, t)| t).sum()
    }

    /// True when every field belongs to the 1D ReLU family.
    pub fn is_family_tagged(&self) -> bool {
        self.segments.iter().all(|(f, _)| Relu1DFamily::contains(f))
    }

    /// Image of `x0` under the whole schedule.
    pub fn apply(&self, x0: f64) -> f64 {
        self.segments.iter().fold(x0, |x, (f, t)| flow_exact(f, *t, x))
    }
}

fn pwl_from_images(nodes: Vec<f64>, mut ys: Vec<f64>, pin: bool) -> Result<MonotonePwl> {
    let last = ys.len() - 1;
    if pin {
        ys[0] = 0.0;
        ys[last] = 1.0;
    }
    if let Some(i) = ys.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::MonotonicityViolation { index: i + 1 });
    }
    if ys[0] != 0.0 || ys[last] != 1.0 {
        return Err(Error::InvalidInput(format!(
            "schedule moves the endpoints to {} and {}",
            ys[0], ys[last]
        )));
    }
    MonotonePwl::new(nodes, ys)
}

/// Flow map of the schedule sampled at `n + 1` uniform initial points.
pub fn flow_map(schedule: &ControlSchedule, n: usize) -> Result<MonotonePwl> {
    let nodes = uniform_nodes(n);
    let ys: Vec<f64> = nodes.par_iter().map(|&x| schedule.apply(x)).collect();
    pwl_from_images(nodes, ys, schedule.is_family_tagged())
}

/// Forward-Euler discretization with `steps` steps per segment.
pub fn resnet_iterate(schedule: &ControlSchedule, steps: usize, n: usize) -> Result<MonotonePwl> {
    if steps == 0 {
        return Err(Error::InvalidInput("resnet_iterate needs steps >= 1".into()));
    }
    let nodes = uniform_nodes(n);
    let ys: Vec<f64> = nodes
        .par_iter()
        .map(|&x0| {
            let mut x = x0;
            for (f, t) in &schedule.segments {
                let dt = t / steps as f64;
                for _ in 0..steps {
                    x += dt * f.eval(x);
                }
            }
            x
        })
        .collect();
    pwl_from_images(nodes, ys, schedule.is_family_tagged())
}

/// Positions `(t, x0, x_t)` after each segment, starting with `t = 0`.
pub fn trajectory(schedule: &ControlSchedule, n: usize) -> Vec<(f64, f64, f64)> {
    let nodes = uniform_nodes(n);
    let mut rows: Vec<(f64, f64, f64)> = nodes.iter().map(|&x| (0.0, x, x)).collect();
    let mut current = nodes.clone();
    let mut t = 0.0;
    for (f, dt) in &schedule.segments {
        t += dt;
        current = current.par_iter().map(|&x| flow_exact(f, *dt, x)).collect();
        rows.extend(nodes.iter().zip(&current).map(|(&x0, &x)| (t, x0, x)));
    }
    rows
}

pub fn write_trajectory_csv(rows: &[(f64, f64, f64)], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "x0", "x_t"])?;
    for (t, x0, x) in rows {
        w.write_record([format!("{t:e}"), format!("{x0:e}"), format!("{x:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters of [`realize_geodesic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizeConfig {
    /// Relative time slack: the budget is `(1 + delta)·C(ψ)`.
    pub delta: f64,
    /// Number of geodesic time steps.
    pub k: usize,
    /// Interpolation grid (number of cells) for each step's field.
    pub n: usize,
    /// Quadrature grid of the geodesic points.
    pub geodesic_grid: usize,
    /// Evaluation grid for the reported error.
    pub eval_grid: usize,
    /// Interpolate `g − ½gg′` instead of `g`, so that the unit-time flow matches
    /// the step displacement to second order.
    pub second_order: bool,
}

impl Default for RealizeConfig {
    fn default() -> Self {
        Self {
            delta: 0.15,
            k: 32,
            n: 64,
            geodesic_grid: 4096,
            eval_grid: 1024,
            second_order: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RealizeReport {
    pub target: String,
    pub k: usize,
    pub n: usize,
    pub complexity: f64,
    pub total_time: f64,
    pub budget: f64,
    pub sup_error: f64,
    /// `TV(ln ∂ₓ flow_map)` of the realized map on the evaluation grid.
    pub depth_tv: f64,
    pub schedule: ControlSchedule,
}

/// Builds a family schedule approximating `ψ` along the geodesic from the
/// identity.
///
/// Each step's displacement `g = γ_{t+Δ} ∘ γ_t⁻¹ − id` is sampled on a uniform
/// grid and interpolated by the ℓ1-optimal ReLU witness `ũ` of weight `S`.
/// Flowing `ũ/S` (a family member) for time `S` realizes the step.
pub fn realize_geodesic(psi: &MapSpec, cfg: &RealizeConfig) -> Result<RealizeReport> {
    if cfg.k == 0 || cfg.n < 2 || cfg.eval_grid < 2 || !(cfg.delta >= 0.0) {
        return Err(Error::InvalidInput("realize needs k >= 1, N >= 2, delta >= 0".into()));
    }
    let c = complexity(psi)?;
    let budget = (1.0 + cfg.delta) * c;
    let mut schedule = ControlSchedule::default();
    if c > 0.0 {
        let id = MapSpec::identity();
        let points: Vec<MonotonePwl> = (0..=cfg.k)
            .into_par_iter()
            .map(|j| geodesic_point(&id, psi, j as f64 / cfg.k as f64, cfg.geodesic_grid))
            .collect::<Result<_>>()?;
        let nodes = uniform_nodes(cfg.n);
        let fields: Vec<Option<(ReluField1D, f64)>> = (0..cfg.k)
            .into_par_iter()
            .map(|j| step_field(&points[j], &points[j + 1], &nodes, cfg.second_order))
            .collect::<Result<_>>()?;
        for (f, s) in fields.into_iter().flatten() {
            schedule.push(f, s)?;
        }
    }
    let total_time = schedule.total_time();
    let realized = flow_map(&schedule, cfg.eval_grid)?;
    let sup_error = realized
        .xs()
        .iter()
        .zip(realized.ys())
        .map(|(&x, &y)| (y - psi.eval(x)).abs())
        .fold(0.0, f64::max);
    let depth_tv = complexity(&MapSpec::Pwl(realized))?;
    if total_time > budget {
        return Err(Error::BudgetExceeded {
            total: total_time,
            budget,
        });
    }
    Ok(RealizeReport {
        target: psi.label(),
        k: cfg.k,
        n: cfg.n,
        complexity: c,
        total_time,
        budget,
        sup_error,
        depth_tv,
        schedule,
    })
}

/// Family member and duration realizing `from⁻¹ ↦ to`, or `None` when the
/// step does not move anything.
fn step_field(
    from: &MonotonePwl,
    to: &MonotonePwl,
    nodes: &[f64],
    second_order: bool,
) -> Result<Option<(ReluField1D, f64)>> {
    let last = nodes.len() - 1;
    let mut g: Vec<f64> = nodes.iter().map(|&y| to.eval(from.inverse_eval(y)) - y).collect();
    g[0] = 0.0;
    g[last] = 0.0;
    if second_order {
        let h = 1.0 / last as f64;
        let dg: Vec<f64> = (0..=last)
            .map(|i| match i {
                0 => (g[1] - g[0]) / h,
                i if i == last => (g[last] - g[last - 1]) / h,
                i => (g[i + 1] - g[i - 1]) / (2.0 * h),
            })
            .collect();
        g = g.iter().zip(&dg).map(|(gi, di)| gi - 0.5 * gi * di).collect();
    }
    let wit = witness_at_nodes(nodes, &g)?;
    let mut field = ReluField1D::from_witness(&wit)?;
    // re-impose the endpoint constraints exactly
    let (r0, r1) = (field.eval(0.0), field.eval(1.0));
    if r0 != 0.0 || r1 != 0.0 {
        let mut terms = field.terms().to_vec();
        terms.push(ReluTerm::new(-r0, 0.0, 1.0));
        terms.push(ReluTerm::new(r0 - r1, 1.0, 0.0));
        field = ReluField1D::new(terms)?;
    }
    let s = field.weight_cost();
    if s == 0.0 {
        return Ok(None);
    }
    Ok(Some((field.scaled(1.0 / s), s)))
}
