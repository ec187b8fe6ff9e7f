//! Layer-normalized ReLU fields on the circle.
//!
//! The family consists of rotations of `g_b(θ) = σ(cos θ − cos β)`. Smooth
//! velocities are superpositions `g_b ⊛ ρ` with
//! `(g ⊛ ρ)(x) = (1/2π)∫ g(x − y) ρ(y) dy`, so ρ is obtained by dividing
//! Fourier coefficients by those of `g_b`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;

use crate::{Error, Result};

/// Default kernel half-width `β = π(√5 − 1)/2`, an irrational multiple of π.
pub fn default_beta() -> f64 {
    PI * (5f64.sqrt() - 1.0) / 2.0
}

/// Smallest kernel coefficient accepted by [`deconvolve`].
pub const ZERO_DIVISOR_TOL: f64 = 1e-14;
const INVERSE_TOL: f64 = 1e-12;

/// In-place radix-2 FFT. `inverse` uses `e^{+2πi jk/n}` and does not scale.
pub fn fft(data: &mut [Complex<f64>], inverse: bool) {
    let n = data.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * TAU / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = Complex::from_polar(1.0, ang * k as f64);
                let a = data[start + k];
                let b = data[start + k + len / 2] * w;
                data[start + k] = a + b;
                data[start + k + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Samples of a real `2π`-periodic function at `2πi/n`, `n = 2^k ≥ 16`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    values: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "periodic grid size must be a power of two >= 16, got {n}"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| f(node(i, n))).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Complex coefficients `f̂(k) = (1/n)Σ f(xᵢ)e^{−ikxᵢ}` in FFT order.
    pub fn coefficients(&self) -> Vec<Complex<f64>> {
        let n = self.n();
        let mut c: Vec<Complex<f64>> = self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft(&mut c, false);
        c.iter_mut().for_each(|z| *z /= n as f64);
        c
    }

    /// `‖f‖_{L²[0, 2π]}` by the periodic trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        (TAU * self.values.iter().map(|v| v * v).sum::<f64>() / self.n() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn node(i: usize, n: usize) -> f64 {
    TAU * i as f64 / n as f64
}

/// Trigonometric polynomial `Σ_{|k| ≤ M} c_k e^{ikx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    /// `coeffs[k + M]` holds `c_k`.
    coeffs: Vec<Complex<f64>>,
}

impl TrigPoly {
    /// Truncation of grid data to modes `|k| ≤ m` (requires `m < n/2`).
    pub fn from_grid(g: &PeriodicGrid, m: usize) -> Result<Self> {
        let n = g.n();
        if m >= n / 2 {
            return Err(Error::InvalidInput(format!(
                "mode cap {m} must be below n/2 = {}",
                n / 2
            )));
        }
        let c = g.coefficients();
        let coeffs = (-(m as i64)..=m as i64)
            .map(|k| c[k.rem_euclid(n as i64) as usize])
            .collect();
        Ok(Self { coeffs })
    }

    pub fn modes(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn coeff(&self, k: i64) -> Complex<f64> {
        let m = self.modes() as i64;
        if k.abs() > m {
            Complex::new(0.0, 0.0)
        } else {
            self.coeffs[(k + m) as usize]
        }
    }

    /// Direct evaluation (real part).
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.modes() as i64;
        let mut acc = self.coeff(0).re;
        for k in 1..=m {
            let e = Complex::from_polar(1.0, k as f64 * x);
            acc += 2.0 * (self.coeff(k) * e).re;
        }
        acc
    }

    /// Samples on an `n`-point grid via the inverse FFT.
    pub fn sample(&self, n: usize) -> Result<PeriodicGrid> {
        let m = self.modes();
        if m >= n / 2 {
            return Err(Error::InvalidInput("grid too coarse for the retained modes".into()));
        }
        let mut c = vec![Complex::new(0.0, 0.0); n];
        for k in -(m as i64)..=m as i64 {
            c[k.rem_euclid(n as i64) as usize] = self.coeff(k);
        }
        fft(&mut c, true);
        PeriodicGrid::new(c.iter().map(|z| z.re).collect())
    }

    /// `‖p‖_{L²[0, 2π]}` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        (TAU * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `‖p^{(d)}‖_{L²[0, 2π]}` by Parseval.
    pub fn derivative_l2_norm(&self, d: i32) -> f64 {
        let m = self.modes() as i64;
        let s: f64 = (-m..=m)
            .map(|k| (k as f64).abs().powi(2 * d) * self.coeff(k).norm_sqr())
            .sum();
        (TAU * s).sqrt()
    }
}

/// Fourier coefficient `(1/2π)∫ σ(cos x − cos β) cos(nx) dx` of the kernel.
pub fn gb_coeff(n: usize, beta: f64) -> f64 {
    let nf = n as f64;
    match n {
        0 => (beta.sin() - beta * beta.cos()) / PI,
        1 => (beta - (2.0 * beta).sin() / 2.0) / TAU,
        _ => (((nf - 1.0) * beta).sin() / (nf * (nf - 1.0)) - ((nf + 1.0) * beta).sin() / (nf * (nf + 1.0))) / TAU,
    }
}

/// `g_b(x) = σ(cos x − cos β)`.
pub fn gb(x: f64, beta: f64) -> f64 {
    (x.cos() - beta.cos()).max(0.0)
}

/// `Σ_{n=0}^{M} a_n`, a fingerprint of the kernel coefficients used.
pub fn gb_checksum(beta: f64, m: usize) -> f64 {
    (0..=m).map(|n| gb_coeff(n, beta)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deconvolution {
    pub rho: TrigPoly,
    pub rho_grid: PeriodicGrid,
    pub l2_bound: f64,
    pub l1_bound: f64,
}

/// Solves `g_b ⊛ ρ = f_M` for the `M`-mode truncation `f_M` of `f`.
pub fn deconvolve(f: &PeriodicGrid, beta: f64, m: usize) -> Result<Deconvolution> {
    let fm = TrigPoly::from_grid(f, m)?;
    let a: Vec<f64> = (0..=m).map(|k| gb_coeff(k, beta)).collect();
    if let Some(k) = a.iter().position(|v| v.abs() < ZERO_DIVISOR_TOL) {
        return Err(Error::ZeroDivisor(k));
    }
    let coeffs = (-(m as i64)..=m as i64)
        .map(|k| fm.coeff(k) / a[k.unsigned_abs() as usize])
        .collect();
    let rho = TrigPoly { coeffs };
    let rho_grid = rho.sample(f.n())?;
    let l2_bound = rho.l2_norm();
    Ok(Deconvolution {
        l1_bound: TAU.sqrt() * l2_bound,
        rho,
        rho_grid,
        l2_bound,
    })
}

/// Smooth circle diffeomorphisms given by their lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleMap {
    Identity,
    /// `θ + c·sin(m(θ + phase))` with `|c·m| < 1`.
    Warp {
        c: f64,
        m: u32,
        phase: f64,
    },
}

impl CircleMap {
    pub fn warp(c: f64, m: u32, phase: f64) -> Result<Self> {
        if m == 0 || !((c * m as f64).abs() < 1.0) || !phase.is_finite() {
            return Err(Error::InvalidInput(format!(
                "warp needs m >= 1 and |c·m| < 1, got c={c}, m={m}"
            )));
        }
        Ok(Self::Warp { c, m, phase })
    }

    /// `[ψ, ψ′, ψ″, ψ‴]` of the lift at `θ`.
    pub fn jet(&self, theta: f64) -> [f64; 4] {
        match *self {
            Self::Identity => [theta, 1.0, 0.0, 0.0],
            Self::Warp { c, m, phase } => {
                let w = m as f64;
                let (s, k) = (w * (theta + phase)).sin_cos();
                [theta + c * s, 1.0 + c * w * k, -c * w * w * s, -c * w * w * w * k]
            }
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.jet(theta)[0]
    }

    /// Conjugate by a rotation: `θ ↦ ψ(θ + s) − s`.
    pub fn shifted(&self, s: f64) -> Self {
        match *self {
            Self::Identity => Self::Identity,
            Self::Warp { c, m, phase } => Self::Warp { c, m, phase: phase + s },
        }
    }

    /// Bound on `|ψ(θ) − θ|`.
    fn displacement_bound(&self) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::Warp { c, .. } => c.abs(),
        }
    }

    /// Checks `ψ′ > 0` on an `n`-point grid and the lift periodicity.
    pub fn check(&self, n: usize) -> Result<()> {
        if (0..n).any(|i| !(self.jet(node(i, n))[1] > 0.0)) {
            return Err(Error::NonInvertible);
        }
        if ((self.eval(TAU) - self.eval(0.0)) - TAU).abs() > 1e-10 {
            return Err(Error::NonInvertible);
        }
        Ok(())
    }

    /// `ψ⁻¹(y)` by bisection.
    pub fn inverse(&self, y: f64) -> f64 {
        let d = self.displacement_bound();
        let (mut lo, mut hi) = (y - d - 1e-12, y + d + 1e-12);
        for _ in 0..200 {
            if hi - lo <= INVERSE_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl fmt::Display for CircleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Warp { c, m, phase } if *phase == 0.0 => write!(f, "warp:{c},{m}"),
            Self::Warp { c, m, phase } => write!(f, "warp:{c},{m},{phase}"),
        }
    }
}

impl FromStr for CircleMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(Self::Identity);
        }
        let args = s
            .strip_prefix("warp:")
            .ok_or_else(|| Error::UnknownBuiltin(s.to_string()))?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let bad = || Error::InvalidInput(format!("cannot parse circle map '{s}'"));
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let c: f64 = parts[0].parse().map_err(|_| bad())?;
        let m: u32 = parts[1].parse().map_err(|_| bad())?;
        let phase: f64 = match parts.get(2) {
            Some(p) => p.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        Self::warp(c, m, phase)
    }
}

/// Weights of the global bound.
pub fn coeff_a(r: f64) -> f64 {
    (67.0 * r.powi(6) + 67.0 * r.powi(5) + 67.0 * r.powi(4) + 67.0 * r.powi(3) + 172.0 * r * r - 80.0 * r + 60.0)
        / (420.0 * r.powi(7))
}

pub fn coeff_b(r: f64) -> f64 {
    -(17.0 * r.powi(6) + 34.0 * r.powi(5) + 51.0 * r.powi(4) + 68.0 * r.powi(3) + 295.0 * r * r - 150.0 * r + 105.0)
        / (140.0 * r.powi(8))
}

pub fn coeff_c(r: f64) -> f64 {
    3.0 * (r.powi(5) + 3.0 * r.powi(4) + 6.0 * r.powi(3) + 10.0 * r * r + 15.0 * r + 21.0) / (56.0 * r.powi(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBound {
    pub third_derivative_l2: f64,
    pub sup: f64,
    pub value: f64,
}

/// `C₁‖(u∘ψ⁻¹)‴‖_{L²} + C₂‖u∘ψ⁻¹‖_∞` with the derivative taken spectrally on
/// `m` modes. `u` is evaluated off-grid by trigonometric interpolation.
pub fn local_bound(u: &PeriodicGrid, psi: &CircleMap, consts: (f64, f64), m: usize) -> Result<LocalBound> {
    let n = u.n();
    psi.check(n)?;
    let interp = TrigPoly::from_grid(u, n / 2 - 1)?;
    let moved = PeriodicGrid::from_fn(n, |x| interp.eval(psi.inverse(x)))?;
    let w = TrigPoly::from_grid(&moved, m)?;
    let third_derivative_l2 = w.derivative_l2_norm(3);
    let sup = moved.sup_norm();
    Ok(LocalBound {
        third_derivative_l2,
        sup,
        value: consts.0 * third_derivative_l2 + consts.1 * sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalBound {
    pub j: f64,
    pub sup_term: f64,
    pub value: f64,
}

/// The curve-length functional `J` for the pair, the sup distance of the lifts
/// and the combined bound `C₃·J + C₄·sup_term`.
pub fn global_bound_functional(
    psi1: &CircleMap,
    psi2: &CircleMap,
    n: usize,
    consts: (f64, f64),
) -> Result<GlobalBound> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "grid size must be a power of two >= 16, got {n}"
        )));
    }
    psi1.check(n)?;
    psi2.check(n)?;
    let mut integral = 0.0;
    for i in 0..n {
        let x = node(i, n);
        let z = psi2.inverse(x);
        let [_, a1, a2, a3] = psi1.jet(z);
        let [_, b1, b2, b3] = psi2.jet(z);
        let rho = a1 / b1;
        if !(rho > 1e-12) {
            return Err(Error::NonPositiveRho(rho));
        }
        // derivatives in z, then converted to the x = ψ₂(z) variable
        let num = a2 * b1 - a1 * b2;
        let rho_z = num / (b1 * b1);
        let rho_zz = (a3 * b1 - a1 * b3) / (b1 * b1) - 2.0 * num * b2 / (b1 * b1 * b1);
        let d1 = rho_z / b1;
        let d2 = (rho_zz / b1 - rho_z * b2 / (b1 * b1)) / b1;
        integral += coeff_a(rho) * d2 * d2 + coeff_b(rho) * d1 * d1 * d2 + coeff_c(rho) * d1.powi(4);
    }
    let j = integral * TAU / n as f64;
    let sup_term = (0..n)
        .map(|i| {
            let t = node(i, n);
            (psi1.eval(t) - psi2.eval(t)).abs()
        })
        .fold(0.0, f64::max);
    Ok(GlobalBound {
        j,
        sup_term,
        value: consts.0 * j + consts.1 * sup_term,
    })
}
