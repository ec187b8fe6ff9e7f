//! Invariant suite behind `flowdepth verify`.
//!
//! Every property draws its samples from its own ChaCha stream, so filtering
//! does not change the samples seen by the properties that remain. Each
//! sample yields a slack (tolerance minus violation); a property passes when
//! its worst slack is nonnegative.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{self, CircleMap};
use crate::core1d::{compose, tv_of_samples, AnalyticVelocity, GridFunction, MapSpec, MonotonePwl, SmoothMap};
use crate::flow::{flow_exact, flow_map, ControlSchedule, ReluField1D, ReluTerm};
use crate::l1_interp::{lp_oracle, min_weight, min_weight_faulty, witness, InterpProblem};
use crate::lift2d::{verify_factorization, LiftConfig, LiftTarget};
use crate::relu1d::{complexity, distance, legacy_upper_bound, local_norm, Velocity};
use crate::so3::{d_l1_bounds, principal_log, Rotation3};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Deliberate defects the suite must catch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the boundary term in the closed-form ℓ1 optimum.
    MinSnSign,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MinSnSign => f.write_str("min-sn-sign"),
        }
    }
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-sn-sign" => Ok(Self::MinSnSign),
            _ => Err(Error::InvalidInput(format!(
                "unknown fault '{s}' (expected min-sn-sign)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Keeps properties whose name starts with this prefix, e.g. `so3`.
    pub filter: Option<String>,
    pub fault: Option<Fault>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            filter: None,
            fault: None,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub samples: usize,
    /// `None` when the property errored before producing samples.
    pub worst_slack: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub fault: Option<String>,
    pub passed: bool,
    pub properties: Vec<PropertyReport>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyReport> {
        self.properties.iter().filter(|p| !p.passed)
    }
}

type Check = fn(&mut ChaCha8Rng, Option<Fault>) -> Result<Vec<f64>>;

/// Names and checks in a fixed order; the index doubles as the RNG stream.
const PROPERTIES: &[(&str, Check)] = &[
    ("core1d.tv_subadditive", tv_subadditive),
    ("core1d.tv_refinement", tv_refinement),
    ("core1d.compose_pointwise", compose_pointwise),
    ("core1d.registry_diffeo", registry_diffeo),
    ("relu1d.triangle", metric_triangle),
    ("relu1d.right_invariance", right_invariance),
    ("relu1d.compositional_triangle", compositional_triangle),
    ("relu1d.legacy_dominates", legacy_dominates),
    ("l1_interp.lp_equivalence", lp_equivalence),
    ("l1_interp.witness", witness_feasibility),
    ("l1_interp.lower_bound", interp_lower_bound),
    ("flow.exact_vs_rk4", exact_vs_rk4),
    ("flow.depth_bound", depth_bound),
    ("lift2d.factorization", lift_factorization),
    ("so3.sandwich", so3_sandwich),
    ("so3.log_round_trip", so3_log_round_trip),
    ("circle.gb_quadrature", gb_quadrature),
    ("circle.abc_at_one", abc_at_one),
    ("circle.diagonal_zero", diagonal_zero),
];

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|(n, _)| *n).collect()
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let selected: Vec<(usize, &(&str, Check))> = PROPERTIES
        .iter()
        .enumerate()
        .filter(|(_, (name, _))| opts.filter.as_deref().is_none_or(|f| name.starts_with(f)))
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidInput(format!(
            "filter '{}' matches no property",
            opts.filter.as_deref().unwrap_or_default()
        )));
    }
    let properties: Vec<PropertyReport> = selected
        .into_iter()
        .map(|(idx, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(idx as u64);
            match check(&mut rng, opts.fault) {
                Ok(slacks) => {
                    let worst = slacks.iter().copied().fold(f64::INFINITY, f64::min);
                    PropertyReport {
                        name: name.to_string(),
                        samples: slacks.len(),
                        worst_slack: Some(worst),
                        passed: !slacks.is_empty() && worst >= 0.0,
                        error: None,
                    }
                }
                Err(e) => PropertyReport {
                    name: name.to_string(),
                    samples: 0,
                    worst_slack: None,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(VerifyReport {
        seed: opts.seed,
        fault: opts.fault.map(|f| f.to_string()),
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

fn random_pwl(rng: &mut ChaCha8Rng, max_segments: usize) -> Result<MonotonePwl> {
    let k = rng.random_range(1..=max_segments);
    let cuts = |rng: &mut ChaCha8Rng| {
        let mut v: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.02..0.98)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (mut xs, mut ys) = (cuts(rng), cuts(rng));
    // enforce a minimum gap so no segment degenerates
    for v in [&mut xs, &mut ys] {
        for i in 1..v.len() {
            v[i] = v[i].max(v[i - 1] + 1e-3);
        }
        v.retain(|&x| x < 0.99);
    }
    let m = xs.len().min(ys.len());
    let wrap = |v: &[f64]| [&[0.0][..], v, &[1.0][..]].concat();
    MonotonePwl::new(wrap(&xs[..m]), wrap(&ys[..m]))
}

fn random_trig(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let c: Vec<(f64, f64)> = (1..=4).map(|k| (rng.random_range(-1.0..1.0), k as f64)).collect();
    move |x| c.iter().map(|(a, k)| a * (k * 3.0 * x).sin()).sum()
}

fn tv_subadditive(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..100)
        .map(|_| {
            let n = rng.random_range(2..60);
            let f: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
            let tv = |v: Vec<f64>| GridFunction::new(v).map(|g| tv_of_samples(&g));
            Ok(tv(f)? + tv(g)? - tv(sum)? + 1e-12)
        })
        .collect()
}

fn tv_refinement(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..50)
        .map(|_| {
            let f = random_trig(rng);
            let n = rng.random_range(2..200);
            let coarse = tv_of_samples(&GridFunction::from_fn(n, &f)?);
            let fine = tv_of_samples(&GridFunction::from_fn(2 * n, &f)?);
            Ok(fine - coarse + 1e-12)
        })
        .collect()
}

fn compose_pointwise(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..100)
        .map(|_| {
            let (a, b) = (random_pwl(rng, 8)?, random_pwl(rng, 8)?);
            let c = compose(&a, &b)?;
            let err = (0..=200)
                .map(|i| {
                    let x = i as f64 / 200.0;
                    (c.eval(x) - a.eval(b.eval(x))).abs()
                })
                .fold(0.0, f64::max);
            Ok(1e-12 - err)
        })
        .collect()
}

fn registry_diffeo(_: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    SmoothMap::registry().iter().map(|m| m.check(10_000)).collect()
}

fn metric_triangle(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..200)
        .map(|_| {
            let [a, b, c] = [random_pwl(rng, 6)?, random_pwl(rng, 6)?, random_pwl(rng, 6)?].map(MapSpec::Pwl);
            Ok(distance(&a, &b)? + distance(&b, &c)? - distance(&a, &c)? + 1e-10)
        })
        .collect()
}

fn right_invariance(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..100)
        .map(|_| {
            let (a, b, phi) = (random_pwl(rng, 6)?, random_pwl(rng, 6)?, random_pwl(rng, 6)?);
            let d = distance(&MapSpec::Pwl(a.clone()), &MapSpec::Pwl(b.clone()))?;
            let dphi = distance(&MapSpec::Pwl(compose(&a, &phi)?), &MapSpec::Pwl(compose(&b, &phi)?))?;
            Ok(1e-9 - (d - dphi).abs())
        })
        .collect()
}

fn compositional_triangle(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..100)
        .map(|_| {
            let (a, b) = (random_pwl(rng, 6)?, random_pwl(rng, 6)?);
            let ab = compose(&a, &b)?;
            let c = |p: MonotonePwl| complexity(&MapSpec::Pwl(p));
            Ok(c(a)? + c(b)? - c(ab)? + 1e-10)
        })
        .collect()
}

fn legacy_dominates(_: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    SmoothMap::registry()
        .into_iter()
        .map(|m| {
            let psi = MapSpec::Smooth(m);
            Ok(legacy_upper_bound(&psi)? - complexity(&psi)? + 1e-12)
        })
        .collect()
}

/// Random samples with nonzero boundary values, `N ∈ [2, 12]`.
fn random_problem(rng: &mut ChaCha8Rng) -> Result<InterpProblem> {
    let n = rng.random_range(2..=12);
    InterpProblem::new((0..=n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn lp_equivalence(rng: &mut ChaCha8Rng, fault: Option<Fault>) -> Result<Vec<f64>> {
    (0..100)
        .map(|_| {
            let p = random_problem(rng)?;
            let closed = match fault {
                Some(Fault::MinSnSign) => min_weight_faulty(&p),
                None => min_weight(&p),
            };
            Ok(1e-8 - (closed - lp_oracle(&p)?).abs())
        })
        .collect()
}

fn witness_feasibility(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..100)
        .map(|_| {
            let p = random_problem(rng)?;
            let w = witness(&p);
            let lp = lp_oracle(&p)?;
            Ok((1e-10 - w.residual(p.u_vals())).min(1e-8 - (w.cost() - lp).abs()))
        })
        .collect()
}

fn interp_lower_bound(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for u in [
        AnalyticVelocity::Bump,
        AnalyticVelocity::Sine(1),
        AnalyticVelocity::Sine(3),
    ] {
        let norm = local_norm(&Velocity::Analytic(u), &MapSpec::identity())?;
        for _ in 0..10 {
            let n = rng.random_range(2..=512);
            let s = min_weight(&InterpProblem::from_fn(n, |x| u.jet(x)[0])?);
            out.push(norm - s + 1e-9);
        }
    }
    Ok(out)
}

/// Member of the family with kinks in (0, 1), zero boundary values and unit
/// weight cost.
fn random_member(rng: &mut ChaCha8Rng) -> Result<ReluField1D> {
    let m = rng.random_range(2..6);
    let mut terms: Vec<ReluTerm> = (0..m)
        .map(|_| ReluTerm::new(rng.random_range(-1.0..1.0), 1.0, -rng.random_range(0.05..0.95)))
        .collect();
    let f = ReluField1D::new(terms.clone())?;
    terms.push(ReluTerm::new(-f.eval(1.0), 1.0, 0.0));
    let f = ReluField1D::new(terms)?;
    Ok(f.scaled(1.0 / f.weight_cost()))
}

fn exact_vs_rk4(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..20)
        .map(|_| {
            let f = random_member(rng)?;
            let t = rng.random_range(0.1..2.0);
            let x0 = rng.random_range(0.0..1.0);
            let steps = 20_000;
            let h = t / steps as f64;
            let mut x = x0;
            for _ in 0..steps {
                let k1 = f.eval(x);
                let k2 = f.eval(x + 0.5 * h * k1);
                let k3 = f.eval(x + 0.5 * h * k2);
                let k4 = f.eval(x + h * k3);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            Ok(1e-9 - (flow_exact(&f, t, x0) - x).abs())
        })
        .collect()
}

fn depth_bound(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..30)
        .map(|_| {
            let segs = (0..rng.random_range(1..5))
                .map(|_| Ok((random_member(rng)?, rng.random_range(0.0..1.5))))
                .collect::<Result<Vec<_>>>()?;
            let s = ControlSchedule::new(segs)?;
            let tv = complexity(&MapSpec::Pwl(flow_map(&s, 512)?))?;
            Ok(s.total_time() - tv + 1e-8)
        })
        .collect()
}

fn lift_factorization(_: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    [LiftTarget::Square, LiftTarget::Sin3]
        .into_iter()
        .map(|t| {
            let cfg = LiftConfig::new(t, (-1.0, 1.0), None, None)?;
            Ok(1e-7 - verify_factorization(&cfg, 200)?.sup_error)
        })
        .collect()
}

fn so3_sandwich(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    let sqrt3 = 3f64.sqrt();
    Ok((0..1000)
        .map(|_| {
            let (a, b) = (Rotation3::random(rng), Rotation3::random(rng));
            let bd = d_l1_bounds(&a, &b);
            let recompose = (bd.euler.recompose().matrix() - b.compose(&a.transpose()).matrix()).norm();
            [
                bd.log_upper - bd.lower,
                sqrt3 * bd.lower - bd.log_upper,
                bd.euler_upper - bd.lower,
                sqrt3 * bd.lower - bd.upper(),
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
                + 1e-10
                - if recompose > 1e-9 { recompose } else { 0.0 }
        })
        .collect())
}

fn so3_log_round_trip(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    Ok((0..1000)
        .map(|_| {
            let r = Rotation3::random(rng);
            let l = principal_log(&r);
            1e-9 - (Rotation3::exp(l.vector()).matrix() - r.matrix()).norm()
        })
        .collect())
}

fn gb_quadrature(_: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    let m = 1 << 16;
    let h = std::f64::consts::TAU / m as f64;
    let mut out = Vec::new();
    for beta in [std::f64::consts::FRAC_PI_3, circle::default_beta(), 2f64.sqrt()] {
        let samples: Vec<f64> = (0..m).map(|i| circle::gb(i as f64 * h, beta)).collect();
        for n in 0..=64 {
            let q: f64 = samples
                .iter()
                .enumerate()
                .map(|(i, g)| g * (n as f64 * i as f64 * h).cos())
                .sum::<f64>()
                / m as f64;
            out.push(1e-8 - (q - circle::gb_coeff(n, beta)).abs());
        }
    }
    Ok(out)
}

fn abc_at_one(_: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    Ok(vec![
        -(circle::coeff_a(1.0) - 1.0).abs(),
        -(circle::coeff_b(1.0) + 3.0).abs(),
        -(circle::coeff_c(1.0) - 3.0).abs(),
    ])
}

fn diagonal_zero(rng: &mut ChaCha8Rng, _: Option<Fault>) -> Result<Vec<f64>> {
    (0..5)
        .map(|_| {
            let m = rng.random_range(1..4);
            let c = rng.random_range(-0.9..0.9) / m as f64;
            let psi = CircleMap::warp(c, m, rng.random_range(0.0..6.0))?;
            let g = circle::global_bound_functional(&psi, &psi, 256, (1.0, 1.0))?;
            Ok(-(g.j.abs() + g.sup_term))
        })
        .collect()
}
