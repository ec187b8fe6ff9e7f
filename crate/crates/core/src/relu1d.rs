//! The flow metric of the 1D ReLU family
//! `{Σ wᵢ σ(aᵢx + bᵢ) : f(0) = f(1) = 0, Σ|wᵢaᵢ| ≤ 1}`.
//!
//! Everything reduces to total variation of log-derivatives:
//! `‖u‖_ψ = TV(u′/ψ′)`, `C(ψ) = TV(ln ψ′)` and
//! `d(ψ₁, ψ₂) = TV(ln ψ₁′ − ln ψ₂′)`.

use rayon::prelude::*;

use crate::core1d::{
    merge_breaks, uniform_nodes, AnalyticVelocity, GridFunction, MapSpec, Piece, Piecewise, StepFunction,
};
use crate::l1_interp::{self, InterpProblem, LP_MAX_NODES};
use crate::{Error, MonotonePwl, Result};

/// Default number of uniform steps in `t` for [`geodesic_length`].
pub const DEFAULT_STEPS: usize = 64;
/// Default quadrature grid for geodesic points.
pub const DEFAULT_GRID: usize = 4096;

const BOUNDARY_TOL: f64 = 1e-12;

/// A velocity field `u` on `[0, 1]` with `u(0) = u(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Velocity {
    Grid(GridFunction),
    /// Piecewise linear through `(xs[i], ys[i])`; `xs` spans `[0, 1]`.
    Nodal {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
    Analytic(AnalyticVelocity),
}

impl Velocity {
    pub fn nodal(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidInput(
                "nodal velocity needs matching xs/ys of length >= 2".into(),
            ));
        }
        if xs[0] != 0.0 || xs[xs.len() - 1] != 1.0 {
            return Err(Error::InvalidInput("nodal velocity must span [0, 1]".into()));
        }
        for (i, w) in xs.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::DegenerateSegment { index: i });
            }
        }
        Ok(Self::Nodal { xs, ys })
    }

    /// `(u(0), u(1))`.
    pub fn boundary(&self) -> (f64, f64) {
        match self {
            Self::Grid(g) => (g.values()[0], g.values()[g.n()]),
            Self::Nodal { ys, .. } => (ys[0], ys[ys.len() - 1]),
            Self::Analytic(a) => (a.jet(0.0)[0], a.jet(1.0)[0]),
        }
    }

    pub fn check_boundary(&self) -> Result<()> {
        let (left, right) = self.boundary();
        if left.abs() > BOUNDARY_TOL || right.abs() > BOUNDARY_TOL {
            return Err(Error::BoundaryViolation { left, right });
        }
        Ok(())
    }

    /// `u′` as a piecewise function.
    pub fn derivative_piecewise(&self) -> Result<Piecewise> {
        Ok(match self {
            Self::Grid(g) => Piecewise::from_step(&StepFunction::new(g.nodes(), g.slopes())?),
            Self::Nodal { xs, ys } => {
                let slopes = xs
                    .windows(2)
                    .zip(ys.windows(2))
                    .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
                    .collect();
                Piecewise::from_step(&StepFunction::new(xs.clone(), slopes)?)
            }
            Self::Analytic(a) => a.derivative_piecewise(),
        })
    }
}

impl From<GridFunction> for Velocity {
    fn from(g: GridFunction) -> Self {
        Self::Grid(g)
    }
}

impl From<AnalyticVelocity> for Velocity {
    fn from(a: AnalyticVelocity) -> Self {
        Self::Analytic(a)
    }
}

/// `‖u‖_ψ = TV(u′/ψ′)`. Exact when both are piecewise linear.
pub fn local_norm(u: &Velocity, psi: &MapSpec) -> Result<f64> {
    u.check_boundary()?;
    let du = u.derivative_piecewise()?;
    let dpsi = psi.derivative_piecewise()?;
    Ok(du.div(&dpsi).tv())
}

/// `C(ψ) = TV(ln ψ′)`.
pub fn complexity(psi: &MapSpec) -> Result<f64> {
    Ok(psi.log_derivative()?.tv())
}

/// `d(ψ₁, ψ₂) = TV(ln ψ₁′ − ln ψ₂′)`.
pub fn distance(psi1: &MapSpec, psi2: &MapSpec) -> Result<f64> {
    Ok(psi1.log_derivative()?.sub(&psi2.log_derivative()?).tv())
}

/// Older constructive bound `TV(ln ψ′) + |ln ψ′(0)| + |ln ψ′(1)|`.
pub fn legacy_upper_bound(psi: &MapSpec) -> Result<f64> {
    let c = complexity(psi)?;
    let (d0, d1) = psi.endpoint_derivatives();
    Ok(c + d0.ln().abs() + d1.ln().abs())
}

/// Pair version of [`legacy_upper_bound`], comparing log-derivatives at the
/// endpoints.
pub fn legacy_upper_pair(psi1: &MapSpec, psi2: &MapSpec) -> Result<f64> {
    let d = distance(psi1, psi2)?;
    let (a0, a1) = psi1.endpoint_derivatives();
    let (b0, b1) = psi2.endpoint_derivatives();
    Ok(d + (a0.ln() - b0.ln()).abs() + (a1.ln() - b1.ln()).abs())
}

/// Point `γ_t` of the geodesic with `γ_t′ ∝ (ψ₁′)^{1−t}(ψ₂′)^t`.
///
/// The result lives on the `n + 1` uniform nodes merged with the breakpoints
/// of any pwl input. Constant cells of the density are integrated exactly,
/// smooth ones by the trapezoid rule.
pub fn geodesic_point(psi1: &MapSpec, psi2: &MapSpec, t: f64, n: usize) -> Result<MonotonePwl> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t must lie in [0, 1], got {t}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("geodesic grid needs n >= 1".into()));
    }
    let density = psi1.log_derivative()?.lerp(&psi2.log_derivative()?, t).exp();
    let nodes = geodesic_nodes(psi1, psi2, n);
    let mut cumulative = Vec::with_capacity(nodes.len());
    cumulative.push(0.0);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        let cell = density.cell_of(0.5 * (w[0] + w[1]));
        let h = w[1] - w[0];
        acc += match &density.pieces()[cell] {
            Piece::Const(c) => c * h,
            Piece::Smooth(f) => 0.5 * (f(w[0]).0 + f(w[1]).0) * h,
        };
        cumulative.push(acc);
    }
    let ys: Vec<f64> = cumulative.iter().map(|c| c / acc).collect();
    let mut ys = ys;
    let last = ys.len() - 1;
    ys[last] = 1.0;
    let out = MonotonePwl::new(nodes, ys)?;
    out.check_diffeo()?;
    Ok(out)
}

fn geodesic_nodes(psi1: &MapSpec, psi2: &MapSpec, n: usize) -> Vec<f64> {
    let breaks = merge_breaks(&psi1.breakpoints(), &psi2.breakpoints());
    merge_breaks(&uniform_nodes(n), &breaks)
}

/// Riemann sum `Σⱼ ‖γ_{t_{j+1}} − γ_{t_j}‖_{γ_{t_j}}` over `k` uniform steps.
///
/// Geodesic points are computed in parallel; the sum is accumulated in index
/// order so the result does not depend on scheduling.
pub fn geodesic_length(psi1: &MapSpec, psi2: &MapSpec, k: usize, n: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("geodesic_length needs k >= 1".into()));
    }
    let points: Vec<MonotonePwl> = (0..=k)
        .into_par_iter()
        .map(|j| geodesic_point(psi1, psi2, j as f64 / k as f64, n))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|j| {
            let (a, b) = (&points[j], &points[j + 1]);
            let du: Vec<f64> = b.ys().iter().zip(a.ys()).map(|(y1, y0)| y1 - y0).collect();
            let u = Velocity::nodal(a.xs().to_vec(), du)?;
            local_norm(&u, &MapSpec::Pwl(a.clone()))
        })
        .collect::<Result<_>>()?;
    Ok(norms.iter().sum())
}

/// Images `x = ψ₁(z)`, `y = ψ₂(z)` of nodes `z₁ < … < z_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    nodes: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SampledPair {
    pub fn new(nodes: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if nodes.len() != x.len() || x.len() != y.len() {
            return Err(Error::InvalidInput("sampled pair needs equal lengths".into()));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("sampled pair needs m >= 2".into()));
        }
        for seq in [&nodes, &x, &y] {
            let last = seq.len() - 1;
            if seq[0] != 0.0 || seq[last] != 1.0 {
                return Err(Error::InvalidInput("samples must start at 0 and end at 1".into()));
            }
            if let Some(i) = seq.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::NonMonotoneSamples { index: i + 1 });
            }
        }
        Ok(Self { nodes, x, y })
    }

    pub fn from_maps(psi1: &MapSpec, psi2: &MapSpec, nodes: Vec<f64>) -> Result<Self> {
        let pin = |m: &MapSpec| -> Vec<f64> {
            let last = nodes.len() - 1;
            let mut v: Vec<f64> = nodes.iter().map(|&z| m.eval(z)).collect();
            v[0] = 0.0;
            v[last] = 1.0;
            v
        };
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("sampled pair needs m >= 2".into()));
        }
        let (x, y) = (pin(psi1), pin(psi2));
        Self::new(nodes, x, y)
    }

    pub fn uniform(psi1: &MapSpec, psi2: &MapSpec, m: usize) -> Result<Self> {
        Self::from_maps(psi1, psi2, uniform_nodes(m.max(2) - 1))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Secant slope ratios `rᵢ = Δy/Δx`.
    pub fn ratios(&self) -> Vec<f64> {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }
}

/// Finite-sample distance `Σ |ln rᵢ₊₁ − ln rᵢ|` over secant slope ratios.
pub fn sampled_distance(pair: &SampledPair) -> f64 {
    let logs: Vec<f64> = pair.ratios().iter().map(|r| r.ln()).collect();
    logs.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Minimal ReLU weight among interpolants of `u` at the transported nodes
/// `ψ(zᵢ)`. Uniform transported nodes use the closed form, small arbitrary
/// node sets the LP, and larger ones the closed form on general nodes.
pub fn discrete_local_norm(u_samples: &[f64], psi: &MapSpec, nodes: &[f64]) -> Result<f64> {
    if u_samples.len() != nodes.len() {
        return Err(Error::InvalidInput("one sample per node required".into()));
    }
    psi.check_diffeo()?;
    let last = nodes.len().saturating_sub(1);
    let ys: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, &z)| match i {
            0 if z == 0.0 => 0.0,
            i if i == last && z == 1.0 => 1.0,
            _ => psi.eval(z),
        })
        .collect();
    let uniform = last >= 2
        && ys
            .iter()
            .enumerate()
            .all(|(i, &y)| (y - i as f64 / last as f64).abs() <= 1e-12);
    if uniform {
        return Ok(l1_interp::min_weight(&InterpProblem::new(u_samples.to_vec())?));
    }
    if ys.len() <= LP_MAX_NODES {
        l1_interp::lp_oracle_at_nodes(&ys, u_samples)
    } else {
        l1_interp::min_weight_at_nodes(&ys, u_samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::{tv_of_samples, SmoothMap};
    use std::f64::consts::E;

    fn smooth(m: SmoothMap) -> MapSpec {
        MapSpec::Smooth(m)
    }

    #[test]
    fn local_norm_examples() {
        let id = MapSpec::identity();
        let bump = Velocity::Analytic(AnalyticVelocity::Bump);
        assert!((local_norm(&bump, &id).unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(
            local_norm(&Velocity::Analytic(AnalyticVelocity::Zero), &id).unwrap(),
            0.0
        );

        // fine-grid oracle for TV((1 − 2x)(e − 1)e^{−x})
        let g = GridFunction::from_fn(1 << 16, |x| (1.0 - 2.0 * x) * (E - 1.0) * (-x).exp()).unwrap();
        let oracle = tv_of_samples(&g);
        let got = local_norm(&bump, &smooth(SmoothMap::ExpMap)).unwrap();
        assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
    }

    #[test]
    fn local_norm_rejects_boundary_values() {
        let g = GridFunction::from_fn(8, |x| x).unwrap();
        assert!(matches!(
            local_norm(&Velocity::Grid(g), &MapSpec::identity()),
            Err(Error::BoundaryViolation { .. })
        ));
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(complexity(&MapSpec::identity()).unwrap(), 0.0);
        let c = complexity(&smooth(SmoothMap::EpsQuad(1.0))).unwrap();
        assert!((c - 3f64.ln()).abs() < 1e-6);
        let osc = complexity(&smooth(SmoothMap::Osc(2))).unwrap();
        assert!(osc >= 4.0 / 3.0);
        // ln(1 + cos/2) swings between ln(3/2) and ln(1/2) n times
        assert!((osc - 2.0 * 3f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn distance_examples() {
        let id = MapSpec::identity();
        assert!((distance(&id, &smooth(SmoothMap::ExpMap)).unwrap() - 1.0).abs() < 1e-6);
        let fig = distance(&id, &smooth(SmoothMap::Fig1)).unwrap();
        assert!((fig - 2.0 * (9.0f64 / 5.0).ln()).abs() < 1e-4);
        let e = smooth(SmoothMap::ExpMap);
        assert_eq!(distance(&e, &e).unwrap(), 0.0);
    }

    #[test]
    fn legacy_bound_examples() {
        assert_eq!(legacy_upper_bound(&MapSpec::identity()).unwrap(), 0.0);
        let l = legacy_upper_bound(&smooth(SmoothMap::ExpMap)).unwrap();
        assert!((l - 2.0).abs() < 1e-6);
        let q = legacy_upper_bound(&smooth(SmoothMap::EpsQuad(1.0))).unwrap();
        assert!((q - (3f64.ln() + 2f64.ln() + 1.5f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn geodesic_point_examples() {
        let id = MapSpec::identity();
        let e = smooth(SmoothMap::ExpMap);
        let g = geodesic_point(&id, &e, 0.5, 1 << 14).unwrap();
        let exact = (0.25f64.exp() - 1.0) / (0.5f64.exp() - 1.0);
        assert!((g.eval(0.5) - exact).abs() < 1e-6);

        let g0 = geodesic_point(&e, &id, 0.0, 1 << 14).unwrap();
        let sup = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .map(|x| (g0.eval(x) - e.eval(x)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-8, "{sup}");
    }

    #[test]
    fn constant_path() {
        let e = smooth(SmoothMap::Fig2);
        let g0 = geodesic_point(&e, &e, 0.0, 512).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let gt = geodesic_point(&e, &e, t, 512).unwrap();
            assert!(gt.sup_distance(&g0) < 1e-10);
        }
        let p = SmoothMap::Fig3.to_pwl(37).unwrap();
        let pm = MapSpec::Pwl(p.clone());
        let gt = geodesic_point(&pm, &pm, 0.3, 64).unwrap();
        assert!(gt.sup_distance(&p) < 1e-10);
    }

    #[test]
    fn geodesic_length_of_trivial_path() {
        let e = smooth(SmoothMap::ExpMap);
        assert!(geodesic_length(&e, &e, 8, 256).unwrap() < 1e-12);
    }

    #[test]
    fn sampled_distance_examples() {
        let id = MapSpec::identity();
        let e = smooth(SmoothMap::ExpMap);
        let same = SampledPair::uniform(&e, &e, 9).unwrap();
        assert_eq!(sampled_distance(&same), 0.0);
        let five = SampledPair::uniform(&id, &e, 5).unwrap();
        assert!((sampled_distance(&five) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn sampled_pair_validation() {
        let err = SampledPair::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.6, 1.0], vec![0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneSamples { index: 2 }));
    }

    #[test]
    fn discrete_local_norm_examples() {
        let id = MapSpec::identity();
        let nodes = uniform_nodes(4);
        let zeros = vec![0.0; 5];
        assert_eq!(discrete_local_norm(&zeros, &id, &nodes).unwrap(), 0.0);
        let u: Vec<f64> = nodes.iter().map(|x| x * (1.0 - x)).collect();
        assert!((discrete_local_norm(&u, &id, &nodes).unwrap() - 1.5).abs() < 1e-12);

        // arbitrary nodes go through the LP and agree with the general closed form
        let e = smooth(SmoothMap::ExpMap);
        let u: Vec<f64> = nodes
            .iter()
            .map(|&z| {
                let y = e.eval(z);
                y * (1.0 - y)
            })
            .collect();
        let lp = discrete_local_norm(&u, &e, &nodes).unwrap();
        let ys: Vec<f64> = nodes.iter().map(|&z| e.eval(z)).collect();
        let closed = l1_interp::min_weight_at_nodes(&ys, &u).unwrap();
        assert!((lp - closed).abs() < 1e-9);
    }

    #[test]
    fn discrete_local_norm_increases_to_local_norm() {
        let id = MapSpec::identity();
        let mut prev = 0.0;
        for j in 2..=10 {
            let nodes = uniform_nodes(1 << j);
            let u: Vec<f64> = nodes.iter().map(|x| x * (1.0 - x)).collect();
            let d = discrete_local_norm(&u, &id, &nodes).unwrap();
            assert!(d >= prev);
            prev = d;
        }
        assert!((2.0 - prev).abs() < 2.0 / 1024.0 + 1e-12);
    }
}
