//! Builtin analytic maps and velocities. Every entry supplies its value and
//! first three derivatives so that calculus never falls back to finite
//! differences of samples.

use std::f64::consts::{E, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::piecewise::Piecewise;
use super::pwl::MonotonePwl;
use super::step::StepFunction;
use crate::{Error, Result, SLOPE_FLOOR};

/// Analytic diffeomorphisms of `[0, 1]` fixing both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothMap {
    Identity,
    /// `(eˣ − 1)/(e − 1)`
    ExpMap,
    /// `(εx + x²)/(1 + ε)`, `ε > 0`
    EpsQuad(f64),
    /// `x + sin(nπx)/(2nπ)`
    Osc(u32),
    /// `x + sin(2πx)/(7π)`
    Fig1,
    /// `x + sin(4πx)/(7π)`
    Fig2,
    /// `x − sin(2πx)/(7π) − sin(4πx)/(7π)`
    Fig3,
    /// Convex combination `a·fig1 + b·fig2 + c·fig3`.
    Bary {
        a: f64,
        b: f64,
        c: f64,
    },
}

impl SmoothMap {
    pub fn eps_quad(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps_quad needs ε > 0, got {eps}")));
        }
        Ok(Self::EpsQuad(eps))
    }

    pub fn osc(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("osc needs n >= 1".into()));
        }
        Ok(Self::Osc(n))
    }

    pub fn bary(a: f64, b: f64, c: f64) -> Result<Self> {
        if a < 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "barycentric weights must be nonnegative and sum to 1, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self::Bary { a, b, c })
    }

    /// Coefficients `(c₁, c₂)` of the trigonometric family
    /// `x + (c₁ sin 2πx + c₂ sin 4πx)/(7π)`.
    fn trig_coefficients(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Fig1 => Some((1.0, 0.0)),
            Self::Fig2 => Some((0.0, 1.0)),
            Self::Fig3 => Some((-1.0, -1.0)),
            Self::Bary { a, b, c } => Some((a - c, b - c)),
            _ => None,
        }
    }

    /// `[ψ, ψ′, ψ″, ψ‴]` at `x`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        if let Some((c1, c2)) = self.trig_coefficients() {
            let (s1, k1) = (2.0 * PI * x).sin_cos();
            let (s2, k2) = (4.0 * PI * x).sin_cos();
            return [
                x + (c1 * s1 + c2 * s2) / (7.0 * PI),
                1.0 + (2.0 * c1 * k1 + 4.0 * c2 * k2) / 7.0,
                -(4.0 * PI * c1 * s1 + 16.0 * PI * c2 * s2) / 7.0,
                -(8.0 * PI * PI * c1 * k1 + 64.0 * PI * PI * c2 * k2) / 7.0,
            ];
        }
        match *self {
            Self::Identity => [x, 1.0, 0.0, 0.0],
            Self::ExpMap => {
                let d = x.exp() / (E - 1.0);
                [x.exp_m1() / (E - 1.0), d, d, d]
            }
            Self::EpsQuad(eps) => {
                let s = 1.0 + eps;
                [(eps * x + x * x) / s, (eps + 2.0 * x) / s, 2.0 / s, 0.0]
            }
            Self::Osc(n) => {
                let w = n as f64 * PI;
                let (s, c) = (w * x).sin_cos();
                [x + s / (2.0 * w), 1.0 + 0.5 * c, -0.5 * w * s, -0.5 * w * w * c]
            }
            _ => unreachable!("trigonometric maps handled above"),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.jet(x)[1]
    }

    /// `ln ψ′` with its derivative `ψ″/ψ′`.
    pub fn log_derivative(&self) -> Piecewise {
        let map = *self;
        Piecewise::smooth(move |x| {
            let j = map.jet(x);
            (j[1].ln(), j[2] / j[1])
        })
    }

    /// `ψ′` with its derivative `ψ″`.
    pub fn derivative_piecewise(&self) -> Piecewise {
        let map = *self;
        Piecewise::smooth(move |x| {
            let j = map.jet(x);
            (j[1], j[2])
        })
    }

    /// Numerical check of the registry contract on a uniform grid: fixed
    /// endpoints and derivative above the slope floor.
    pub fn check(&self, samples: usize) -> Result<f64> {
        let mut min_d = f64::INFINITY;
        for i in 0..=samples {
            let x = i as f64 / samples as f64;
            let d = self.derivative(x);
            if !(d > SLOPE_FLOOR) {
                return Err(Error::NonPositiveSlope { index: i, slope: d });
            }
            min_d = min_d.min(d);
        }
        let (a, b) = (self.eval(0.0), self.eval(1.0));
        if a.abs() > 1e-12 || (b - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("{self} does not fix the endpoints")));
        }
        Ok(min_d)
    }

    /// Uniform pwl interpolant with `n` segments.
    pub fn to_pwl(&self, n: usize) -> Result<MonotonePwl> {
        MonotonePwl::from_fn(n, |x| self.eval(x))
    }

    /// All parameter-free builtins plus representative parameterised ones.
    pub fn registry() -> Vec<SmoothMap> {
        vec![
            Self::Identity,
            Self::ExpMap,
            Self::EpsQuad(1.0),
            Self::EpsQuad(0.1),
            Self::Osc(1),
            Self::Osc(2),
            Self::Osc(5),
            Self::Fig1,
            Self::Fig2,
            Self::Fig3,
            Self::Bary { a: 0.2, b: 0.5, c: 0.3 },
        ]
    }
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::ExpMap => write!(f, "exp_map"),
            Self::EpsQuad(e) => write!(f, "eps_quad:{e}"),
            Self::Osc(n) => write!(f, "osc:{n}"),
            Self::Fig1 => write!(f, "fig1"),
            Self::Fig2 => write!(f, "fig2"),
            Self::Fig3 => write!(f, "fig3"),
            Self::Bary { a, b, c } => write!(f, "bary:{a},{b},{c}"),
        }
    }
}

impl FromStr for SmoothMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums = |a: Option<&str>| -> Result<Vec<f64>> {
            a.unwrap_or("")
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("{s}: {e}")))
                })
                .collect()
        };
        let arity = |v: &[f64], k: usize| -> Result<()> {
            if v.len() != k {
                return Err(Error::InvalidInput(format!("{name} takes {k} parameter(s)")));
            }
            Ok(())
        };
        match name {
            "identity" | "id" => Ok(Self::Identity),
            "exp_map" | "exp" => Ok(Self::ExpMap),
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "eps_quad" => {
                let v = nums(args)?;
                arity(&v, 1)?;
                Self::eps_quad(v[0])
            }
            "osc" => {
                let v = nums(args)?;
                arity(&v, 1)?;
                if v[0].fract() != 0.0 || v[0] < 1.0 {
                    return Err(Error::InvalidInput("osc takes a positive integer".into()));
                }
                Self::osc(v[0] as u32)
            }
            "bary" => {
                let v = nums(args)?;
                arity(&v, 3)?;
                Self::bary(v[0], v[1], v[2])
            }
            _ => Err(Error::UnknownBuiltin(s.to_string())),
        }
    }
}

/// Analytic velocities `u` with `u(0) = u(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticVelocity {
    Zero,
    /// `x(1 − x)`
    Bump,
    /// `sin(kπx)`
    Sine(u32),
}

impl AnalyticVelocity {
    /// `[u, u′, u″]` at `x`.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        match *self {
            Self::Zero => [0.0; 3],
            Self::Bump => [x * (1.0 - x), 1.0 - 2.0 * x, -2.0],
            Self::Sine(k) => {
                let w = k as f64 * PI;
                let (s, c) = (w * x).sin_cos();
                [s, w * c, -w * w * s]
            }
        }
    }

    /// `u′` with its derivative `u″`.
    pub fn derivative_piecewise(&self) -> Piecewise {
        let v = *self;
        Piecewise::smooth(move |x| {
            let j = v.jet(x);
            (j[1], j[2])
        })
    }
}

/// A target map: either an analytic builtin or an explicit pwl.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Smooth(SmoothMap),
    Pwl(MonotonePwl),
}

impl MapSpec {
    pub fn identity() -> Self {
        Self::Smooth(SmoothMap::Identity)
    }

    /// Parses a builtin name, or reads a pwl from a CSV path.
    pub fn parse(s: &str) -> Result<Self> {
        match s.parse::<SmoothMap>() {
            Ok(m) => Ok(Self::Smooth(m)),
            Err(Error::UnknownBuiltin(_)) if s.ends_with(".csv") || Path::new(s).is_file() => {
                let file = std::fs::File::open(s)?;
                Ok(Self::Pwl(MonotonePwl::read_csv(file)?))
            }
            Err(e) => Err(e),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Smooth(m) => m.to_string(),
            Self::Pwl(p) => format!("pwl[{}]", p.segments()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Smooth(m) => m.eval(x),
            Self::Pwl(p) => p.eval(x),
        }
    }

    pub fn check_diffeo(&self) -> Result<()> {
        match self {
            Self::Smooth(m) => m.check(10_000).map(|_| ()),
            Self::Pwl(p) => p.check_diffeo(),
        }
    }

    /// `ln ψ′` as a piecewise function (errors if ψ is not a diffeomorphism).
    pub fn log_derivative(&self) -> Result<Piecewise> {
        self.check_diffeo()?;
        Ok(match self {
            Self::Smooth(m) => m.log_derivative(),
            Self::Pwl(p) => Piecewise::from_step(&super::log_slope(p)?),
        })
    }

    /// `ψ′` as a piecewise function.
    pub fn derivative_piecewise(&self) -> Result<Piecewise> {
        self.check_diffeo()?;
        Ok(match self {
            Self::Smooth(m) => m.derivative_piecewise(),
            Self::Pwl(p) => Piecewise::from_step(&StepFunction::new(p.xs().to_vec(), p.slopes())?),
        })
    }

    /// One-sided derivatives `(ψ′(0⁺), ψ′(1⁻))`.
    pub fn endpoint_derivatives(&self) -> (f64, f64) {
        match self {
            Self::Smooth(m) => (m.derivative(0.0), m.derivative(1.0)),
            Self::Pwl(p) => {
                let s = p.slopes();
                (s[0], s[s.len() - 1])
            }
        }
    }

    /// Breakpoints that any faithful discretization has to keep.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Smooth(_) => vec![0.0, 1.0],
            Self::Pwl(p) => p.xs().to_vec(),
        }
    }
}

impl From<SmoothMap> for MapSpec {
    fn from(m: SmoothMap) -> Self {
        Self::Smooth(m)
    }
}

impl From<MonotonePwl> for MapSpec {
    fn from(p: MonotonePwl) -> Self {
        Self::Pwl(p)
    }
}
