//! Piecewise functions on `[0, 1]` whose pieces are either constants or smooth
//! closures carrying their own derivative. Total variation is computed exactly
//! on constant pieces (jump sums) and by dyadic quadrature of `|f'|` on smooth
//! pieces.

use std::fmt;
use std::sync::Arc;

use super::pwl::{merge_breaks, segment_index};
use super::step::StepFunction;

/// Smooth piece: returns `(value, derivative)` at `x`.
pub type PieceFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
pub enum Piece {
    Const(f64),
    Smooth(PieceFn),
}

impl Piece {
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Piece::Const(c) => (*c, 0.0),
            Piece::Smooth(f) => f(x),
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Const(c) => write!(f, "Const({c})"),
            Piece::Smooth(_) => write!(f, "Smooth(..)"),
        }
    }
}

/// Default relative tolerance for accepting a dyadic quadrature refinement.
pub const DEFAULT_RTOL: f64 = 1e-6;
const START_POINTS: usize = 1 << 8;
const MAX_POINTS: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct Piecewise {
    breaks: Vec<f64>,
    pieces: Vec<Piece>,
}

impl Piecewise {
    pub fn constant(c: f64) -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            pieces: vec![Piece::Const(c)],
        }
    }

    pub fn smooth(f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            pieces: vec![Piece::Smooth(Arc::new(f))],
        }
    }

    pub fn from_step(step: &StepFunction) -> Self {
        Self {
            breaks: step.breaks().to_vec(),
            pieces: step.values().iter().map(|&v| Piece::Const(v)).collect(),
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, Piece::Const(_)))
    }

    pub fn cell_of(&self, x: f64) -> usize {
        segment_index(&self.breaks, x)
    }

    /// Value and derivative at `x` using the cell that contains `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        self.pieces[self.cell_of(x)].eval(x)
    }

    /// Value of the piece in cell `cell` at `x` (one-sided evaluation at breaks).
    pub fn eval_in(&self, cell: usize, x: f64) -> (f64, f64) {
        self.pieces[cell].eval(x)
    }

    /// Pointwise binary operation. `op` receives `(a, a', b, b')` and returns
    /// `(value, derivative)`; constant pieces stay constant.
    pub fn combine(
        &self,
        other: &Piecewise,
        op: impl Fn(f64, f64, f64, f64) -> (f64, f64) + Send + Sync + Clone + 'static,
    ) -> Piecewise {
        let breaks = merge_breaks(&self.breaks, &other.breaks);
        let pieces = breaks
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let pa = self.pieces[self.cell_of(mid)].clone();
                let pb = other.pieces[other.cell_of(mid)].clone();
                match (&pa, &pb) {
                    (Piece::Const(a), Piece::Const(b)) => Piece::Const(op(*a, 0.0, *b, 0.0).0),
                    _ => {
                        let op = op.clone();
                        Piece::Smooth(Arc::new(move |x| {
                            let (a, da) = pa.eval(x);
                            let (b, db) = pb.eval(x);
                            op(a, da, b, db)
                        }))
                    }
                }
            })
            .collect();
        Piecewise { breaks, pieces }
    }

    /// Pointwise unary map with chain rule: `g` returns `(g(v), g'(v))`.
    pub fn map(&self, g: impl Fn(f64) -> (f64, f64) + Send + Sync + Clone + 'static) -> Piecewise {
        let pieces = self
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Const(c) => Piece::Const(g(*c).0),
                Piece::Smooth(f) => {
                    let f = f.clone();
                    let g = g.clone();
                    Piece::Smooth(Arc::new(move |x| {
                        let (v, dv) = f(x);
                        let (gv, dg) = g(v);
                        (gv, dg * dv)
                    }))
                }
            })
            .collect();
        Piecewise {
            breaks: self.breaks.clone(),
            pieces,
        }
    }

    pub fn sub(&self, other: &Piecewise) -> Piecewise {
        self.combine(other, |a, da, b, db| (a - b, da - db))
    }

    /// `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &Piecewise, t: f64) -> Piecewise {
        let s = 1.0 - t;
        self.combine(other, move |a, da, b, db| (s * a + t * b, s * da + t * db))
    }

    pub fn div(&self, other: &Piecewise) -> Piecewise {
        self.combine(other, |a, da, b, db| (a / b, (da * b - a * db) / (b * b)))
    }

    pub fn ln(&self) -> Piecewise {
        self.map(|v| (v.ln(), 1.0 / v))
    }

    pub fn exp(&self) -> Piecewise {
        self.map(|v| {
            let e = v.exp();
            (e, e)
        })
    }

    /// Sum of absolute jumps at the interior breakpoints.
    pub fn jump_variation(&self) -> f64 {
        (1..self.pieces.len())
            .map(|k| {
                let b = self.breaks[k];
                (self.pieces[k].eval(b).0 - self.pieces[k - 1].eval(b).0).abs()
            })
            .sum()
    }

    /// Total variation on `[0, 1]` with the default quadrature tolerance.
    pub fn tv(&self) -> f64 {
        self.tv_with(DEFAULT_RTOL)
    }

    /// Total variation: exact jump sum plus `∫|f'|` over smooth cells. The
    /// integral uses composite trapezoid rules on a dyadic point budget that is
    /// doubled until two successive totals agree to `rtol` (relative, floored
    /// at an absolute scale of 1).
    pub fn tv_with(&self, rtol: f64) -> f64 {
        self.jump_variation() + self.smooth_variation(rtol)
    }

    fn smooth_variation(&self, rtol: f64) -> f64 {
        let smooth: Vec<(f64, f64, &PieceFn)> = self
            .breaks
            .windows(2)
            .zip(&self.pieces)
            .filter_map(|(w, p)| match p {
                Piece::Smooth(f) => Some((w[0], w[1], f)),
                Piece::Const(_) => None,
            })
            .collect();
        if smooth.is_empty() {
            return 0.0;
        }
        let mut budget = START_POINTS;
        let mut prev = trapezoid_abs_derivative(&smooth, budget);
        loop {
            budget *= 2;
            let next = trapezoid_abs_derivative(&smooth, budget);
            if (next - prev).abs() <= rtol * next.abs().max(1.0) || budget >= MAX_POINTS {
                return next;
            }
            prev = next;
        }
    }
}

/// Composite trapezoid of `|f'|` with roughly `budget` points spread over the
/// cells proportionally to their length.
fn trapezoid_abs_derivative(cells: &[(f64, f64, &PieceFn)], budget: usize) -> f64 {
    cells
        .iter()
        .map(|&(a, b, f)| {
            let m = ((b - a) * budget as f64).ceil().max(2.0) as usize;
            let h = (b - a) / m as f64;
            let mut acc = 0.5 * (f(a).1.abs() + f(b).1.abs());
            for i in 1..m {
                acc += f(a + i as f64 * h).1.abs();
            }
            acc * h
        })
        .sum()
}
