use super::pwl::{merge_breaks, segment_index, MonotonePwl};
use crate::{Error, Result};

/// Right-continuous step function on `[0, 1]`: `values[i]` on
/// `[breaks[i], breaks[i + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidInput(format!(
                "step function needs len(breaks) = len(values) + 1, got {} and {}",
                breaks.len(),
                values.len()
            )));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("step breaks must span [0, 1]".into()));
        }
        for (index, w) in breaks.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::DegenerateSegment { index });
            }
        }
        Ok(Self { breaks, values })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            values: vec![c],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[segment_index(&self.breaks, x)]
    }

    /// Sum of absolute jumps.
    pub fn tv(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// `self ∘ phi`; the values are unchanged, only the breakpoints move.
    pub fn reparameterize(&self, phi: &MonotonePwl) -> Result<Self> {
        phi.check_diffeo()?;
        let breaks: Vec<f64> = self
            .breaks
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                if i == 0 {
                    0.0
                } else if i + 1 == self.breaks.len() {
                    1.0
                } else {
                    phi.inverse_eval(b)
                }
            })
            .collect();
        Self::new(breaks, self.values.clone())
    }

    /// Pointwise combination on the merged breakpoint set.
    pub fn zip_with(&self, other: &StepFunction, op: impl Fn(f64, f64) -> f64) -> StepFunction {
        let breaks = merge_breaks(&self.breaks, &other.breaks);
        let values = breaks
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                op(self.eval(mid), other.eval(mid))
            })
            .collect();
        StepFunction { breaks, values }
    }
}

/// Exact total variation of `a − b`: the sum of absolute jumps of the
/// difference over the merged breakpoint set.
pub fn tv_step_difference(a: &StepFunction, b: &StepFunction) -> f64 {
    a.zip_with(b, |p, q| p - q).tv()
}
