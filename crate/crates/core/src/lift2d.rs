//! Dimension-doubling construction for a scalar target `f`.
//!
//! The lift `α(u) = (λu, 0)` places the compact set `K` inside the unit
//! disc, the cut-off field `X(u, v) = η(|(u, v)|)·(0, κ f(u/λ))` moves each
//! lifted point straight up to `(λu, κ f(u))` in unit time, and the projection
//! `β(u, v) = v/κ` reads off `f(u)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::{Error, Result};

/// Radius inside which the cut-off equals 1.
pub const INNER_RADIUS: f64 = 1.0;
/// Radius outside which the cut-off vanishes.
pub const OUTER_RADIUS: f64 = 1.5;
/// Local error tolerance of the adaptive integrator.
pub const RK_TOL: f64 = 1e-10;
/// Safety margin the default scalings leave to the unit circle.
pub const MIN_MARGIN: f64 = 0.1;
const CHECK_GRID: usize = 1000;

/// Scalar targets available to the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftTarget {
    /// `x²`
    Square,
    /// `sin 3x`
    Sin3,
    Zero,
}

impl LiftTarget {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Square => x * x,
            Self::Sin3 => (3.0 * x).sin(),
            Self::Zero => 0.0,
        }
    }
}

impl fmt::Display for LiftTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Square => "x2",
            Self::Sin3 => "sin3",
            Self::Zero => "zero",
        })
    }
}

impl FromStr for LiftTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x2" => Ok(Self::Square),
            "sin3" => Ok(Self::Sin3),
            "zero" => Ok(Self::Zero),
            _ => Err(Error::UnknownBuiltin(s.to_string())),
        }
    }
}

/// Quintic smoothstep cut-off: 1 on `r ≤ 1`, 0 on `r ≥ 3/2`.
pub fn eta(r: f64) -> f64 {
    if r <= INNER_RADIUS {
        1.0
    } else if r >= OUTER_RADIUS {
        0.0
    } else {
        let s = (r - INNER_RADIUS) / (OUTER_RADIUS - INNER_RADIUS);
        1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftConfig {
    pub target: LiftTarget,
    pub domain: (f64, f64),
    pub lambda: f64,
    pub kappa: f64,
}

impl LiftConfig {
    /// Validated configuration; missing scalings default to
    /// `λ = 0.45/max|K|` and `κ = 0.45/max|f|`.
    pub fn new(target: LiftTarget, domain: (f64, f64), lambda: Option<f64>, kappa: Option<f64>) -> Result<Self> {
        let (k0, k1) = domain;
        if !(k0.is_finite() && k1.is_finite() && k0 < k1) {
            return Err(Error::InvalidInput(format!(
                "domain must be a proper interval, got [{k0}, {k1}]"
            )));
        }
        let kmax = k0.abs().max(k1.abs());
        let lambda = lambda.unwrap_or(if kmax > 0.0 { 0.45 / kmax } else { 1.0 });
        let kappa = kappa.unwrap_or_else(|| {
            let fmax = grid(domain, CHECK_GRID)
                .map(|u| target.eval(u).abs())
                .fold(0.0, f64::max);
            if fmax > 0.0 {
                0.45 / fmax
            } else {
                1.0
            }
        });
        if !(lambda > 0.0 && kappa > 0.0 && lambda.is_finite() && kappa.is_finite()) {
            return Err(Error::ConfigViolation(format!(
                "scalings must be positive, got λ={lambda}, κ={kappa}"
            )));
        }
        let cfg = Self {
            target,
            domain,
            lambda,
            kappa,
        };
        let margin = cfg.segment_margin();
        if margin <= 0.0 {
            return Err(Error::ConfigViolation(format!(
                "lifted segments leave the unit disc (margin {margin:.3e})"
            )));
        }
        Ok(cfg)
    }

    /// `1 − max |(λu, κ f(u))|` over a grid of `K`; positive iff every segment
    /// `{(λu, tκf(u)) : t ∈ [0, 1]}` stays inside the unit disc.
    pub fn segment_margin(&self) -> f64 {
        let worst = grid(self.domain, CHECK_GRID)
            .map(|u| (self.lambda * u).hypot(self.kappa * self.target.eval(u)))
            .fold(0.0, f64::max);
        1.0 - worst
    }

    pub fn lift(&self, u: f64) -> [f64; 2] {
        [self.lambda * u, 0.0]
    }

    pub fn project(&self, p: [f64; 2]) -> f64 {
        p[1] / self.kappa
    }

    pub fn field(&self) -> CutoffField {
        CutoffField { cfg: *self }
    }
}

fn grid(domain: (f64, f64), m: usize) -> impl Iterator<Item = f64> {
    let (a, b) = domain;
    let m = m.max(2);
    (0..m).map(move |i| a + (b - a) * i as f64 / (m - 1) as f64)
}

/// `X(u, v) = η(r)·(0, κ f(u/λ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffField {
    cfg: LiftConfig,
}

impl CutoffField {
    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let e = eta(p[0].hypot(p[1]));
        if e == 0.0 {
            return [0.0, 0.0];
        }
        [0.0, e * self.cfg.kappa * self.cfg.target.eval(p[0] / self.cfg.lambda)]
    }
}

fn rk4_step(x: &CutoffField, p: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = x.eval(p);
    let k2 = x.eval(add(p, k1, 0.5 * h));
    let k3 = x.eval(add(p, k2, 0.5 * h));
    let k4 = x.eval(add(p, k3, h));
    [
        p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Time-`t` flow of the cut-off field (negative `t` flows backward), by RK4
/// with step doubling. Points outside radius 3/2 do not move.
pub fn lift_flow(cfg: &LiftConfig, t: f64, p: [f64; 2]) -> [f64; 2] {
    if t == 0.0 || p[0].hypot(p[1]) >= OUTER_RADIUS {
        return p;
    }
    let field = cfg.field();
    let dir = t.signum();
    let mut h = 0.05 * dir;
    let mut s = 0.0;
    let mut y = p;
    while (t - s) * dir > 0.0 {
        if (s + h - t) * dir > 0.0 {
            h = t - s;
        }
        let full = rk4_step(&field, y, h);
        let half = rk4_step(&field, rk4_step(&field, y, 0.5 * h), 0.5 * h);
        let err = (half[0] - full[0]).hypot(half[1] - full[1]) / 15.0;
        if err <= RK_TOL || h.abs() < 1e-12 {
            s = if (s + h - t) * dir >= 0.0 { t } else { s + h };
            y = [
                half[0] + (half[0] - full[0]) / 15.0,
                half[1] + (half[1] - full[1]) / 15.0,
            ];
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (RK_TOL / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).clamp(-0.25, 0.25);
        if h * dir <= 0.0 {
            h = 1e-12 * dir;
        }
    }
    y
}

/// Report of [`verify_factorization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftReport {
    pub sup_error: f64,
    pub segment_margin: f64,
}

/// `max |β(Φ₁(α(u))) − f(u)|` over `m` uniform points of `K`.
pub fn verify_factorization(cfg: &LiftConfig, m: usize) -> Result<LiftReport> {
    let segment_margin = cfg.segment_margin();
    if segment_margin <= 0.0 {
        return Err(Error::ConfigViolation(format!(
            "lifted segments leave the unit disc (margin {segment_margin:.3e})"
        )));
    }
    let points: Vec<f64> = grid(cfg.domain, m).collect();
    let sup_error = points
        .par_iter()
        .map(|&u| (cfg.project(lift_flow(cfg, 1.0, cfg.lift(u))) - cfg.target.eval(u)).abs())
        .reduce(|| 0.0, f64::max);
    Ok(LiftReport {
        sup_error,
        segment_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> LiftConfig {
        LiftConfig::new(LiftTarget::Square, (-1.0, 1.0), Some(0.5), Some(0.3)).unwrap()
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(eta(0.3), 1.0);
        assert_eq!(eta(1.0), 1.0);
        assert_eq!(eta(1.5), 0.0);
        assert!((eta(1.25) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let e = eta(1.0 + 0.005 * i as f64);
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn straight_line_inside_unit_disc() {
        let cfg = square();
        let q = lift_flow(&cfg, 1.0, cfg.lift(0.8));
        assert!((q[0] - 0.4).abs() < 1e-15);
        assert!((q[1] - 0.192).abs() < 1e-8);
    }

    #[test]
    fn trivial_cases() {
        let cfg = square();
        let p = [0.3, -0.2];
        assert_eq!(lift_flow(&cfg, 0.0, p), p);
        let far = [1.8 * 0.6, 1.8 * 0.8];
        assert_eq!(lift_flow(&cfg, 1.0, far), far);
        let z = LiftConfig::new(LiftTarget::Zero, (-1.0, 1.0), None, None).unwrap();
        assert_eq!(verify_factorization(&z, 100).unwrap().sup_error, 0.0);
    }

    #[test]
    fn defaults_leave_margin() {
        for t in [LiftTarget::Square, LiftTarget::Sin3, LiftTarget::Zero] {
            let cfg = LiftConfig::new(t, (-2.0, 3.0), None, None).unwrap();
            assert!(cfg.segment_margin() >= MIN_MARGIN, "{t}");
        }
    }

    #[test]
    fn oversized_scaling_is_rejected() {
        let err = LiftConfig::new(LiftTarget::Square, (-1.0, 1.0), Some(0.9), Some(0.9)).unwrap_err();
        assert!(matches!(err, Error::ConfigViolation(_)));
    }

    #[test]
    fn field_vanishes_outside_support() {
        let x = square().field();
        for i in 0..1000 {
            let r = 1.5 + 0.5 * (i as f64 + 0.5) / 1000.0;
            let th = i as f64 * 0.7;
            assert_eq!(x.eval([r * th.cos(), r * th.sin()]), [0.0, 0.0]);
        }
    }

    #[test]
    fn names_round_trip() {
        for t in [LiftTarget::Square, LiftTarget::Sin3, LiftTarget::Zero] {
            assert_eq!(t.to_string().parse::<LiftTarget>().unwrap(), t);
        }
    }
}
