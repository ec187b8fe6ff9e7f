use crate::{Error, Result, SLOPE_FLOOR};

/// Strictly increasing piecewise-linear map of `[0, 1]` onto itself.
///
/// Breakpoints start at 0 and end at 1, values start at 0 and end at 1.
/// Zero-width segments are rejected at construction. Values are only
/// required to be nondecreasing here; operations that treat the map as a
/// diffeomorphism check slopes against [`SLOPE_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePwl {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Tolerance under which two merged breakpoints are considered identical.
pub(crate) const MERGE_TOL: f64 = 1e-14;

impl MonotonePwl {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidPwl(format!(
                "{} breakpoints but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidPwl("need at least two breakpoints".into()));
        }
        let last = xs.len() - 1;
        if xs[0] != 0.0 || xs[last] != 1.0 {
            return Err(Error::InvalidPwl("breakpoints must start at 0 and end at 1".into()));
        }
        if ys[0] != 0.0 || ys[last] != 1.0 {
            return Err(Error::InvalidPwl("values must start at 0 and end at 1".into()));
        }
        for i in 0..last {
            if !(xs[i + 1] > xs[i]) {
                return Err(Error::DegenerateSegment { index: i });
            }
            if !(ys[i + 1] >= ys[i]) {
                return Err(Error::NonMonotoneSamples { index: i });
            }
        }
        Ok(Self { xs, ys })
    }

    pub fn identity() -> Self {
        Self {
            xs: vec![0.0, 1.0],
            ys: vec![0.0, 1.0],
        }
    }

    /// Samples `f` at `n + 1` uniform nodes. The endpoint values are pinned to
    /// 0 and 1 so that rounding in `f(1)` does not break the invariants.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let xs = uniform_nodes(n);
        Self::from_fn_at(xs, f)
    }

    /// Samples `f` at the given nodes (which must start at 0 and end at 1).
    pub fn from_fn_at(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        if let Some(first) = ys.first_mut() {
            *first = 0.0;
        }
        if let Some(last) = ys.last_mut() {
            *last = 1.0;
        }
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Number of segments.
    pub fn segments(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Fails with [`Error::NonPositiveSlope`] unless every slope exceeds the floor.
    pub fn check_diffeo(&self) -> Result<()> {
        for (index, slope) in self.slopes().into_iter().enumerate() {
            if !(slope > SLOPE_FLOOR) {
                return Err(Error::NonPositiveSlope { index, slope });
            }
        }
        Ok(())
    }

    /// Index of the segment containing `x` (the last segment owns `x = 1`).
    pub fn segment_of(&self, x: f64) -> usize {
        segment_index(&self.xs, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.segment_of(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        if x == x1 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Inverse map. Requires strictly increasing values.
    pub fn inverse_eval(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        let i = segment_index(&self.ys, y);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        if y == y1 {
            return x1;
        }
        if y1 == y0 {
            return x0;
        }
        x0 + (x1 - x0) * (y - y0) / (y1 - y0)
    }

    /// The inverse map as a pwl (breakpoints and values swapped).
    pub fn inverse(&self) -> Result<Self> {
        self.check_diffeo()?;
        Ok(Self {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        })
    }

    /// Exact composition `self ∘ inner`.
    ///
    /// The breakpoints of the result are `inner⁻¹(breakpoints of self)` merged
    /// with the breakpoints of `inner`.
    pub fn compose(&self, inner: &MonotonePwl) -> Result<MonotonePwl> {
        self.check_diffeo()?;
        inner.check_diffeo()?;
        let pulled: Vec<f64> = self.xs.iter().map(|&y| inner.inverse_eval(y)).collect();
        let xs = merge_breaks(&inner.xs, &pulled);
        let ys: Vec<f64> = xs.iter().map(|&x| self.eval(inner.eval(x))).collect();
        let out = Self::from_values_pinned(xs, ys)?;
        out.check_diffeo()?;
        Ok(out)
    }

    fn from_values_pinned(xs: Vec<f64>, mut ys: Vec<f64>) -> Result<Self> {
        let last = ys.len() - 1;
        ys[0] = 0.0;
        ys[last] = 1.0;
        Self::new(xs, ys)
    }

    /// Sup-norm distance on the union of both breakpoint sets, which is exact
    /// for two piecewise-linear maps.
    pub fn sup_distance(&self, other: &MonotonePwl) -> f64 {
        merge_breaks(&self.xs, &other.xs)
            .into_iter()
            .map(|x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn uniform_nodes(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| if i == n { 1.0 } else { i as f64 / n as f64 })
        .collect()
}

/// Index `i` with `nodes[i] <= x < nodes[i + 1]`, clamped to a valid segment.
pub(crate) fn segment_index(nodes: &[f64], x: f64) -> usize {
    let last = nodes.len() - 2;
    match nodes.partition_point(|&b| b <= x) {
        0 => 0,
        p => (p - 1).min(last),
    }
}

/// Sorted union of two breakpoint lists on `[0, 1]`, dropping points closer
/// than [`MERGE_TOL`] to the previously kept one. Points from `primary` win
/// ties.
pub(crate) fn merge_breaks(primary: &[f64], secondary: &[f64]) -> Vec<f64> {
    let mut tagged: Vec<(f64, u8)> = primary
        .iter()
        .map(|&x| (x, 0))
        .chain(secondary.iter().map(|&x| (x, 1)))
        .collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<f64> = Vec::with_capacity(tagged.len());
    for (x, _) in tagged {
        match out.last() {
            Some(&prev) if x - prev <= MERGE_TOL => {}
            _ => out.push(x),
        }
    }
    if let Some(last) = out.last_mut() {
        // keep exact endpoints
        if (*last - 1.0).abs() <= MERGE_TOL {
            *last = 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point() -> MonotonePwl {
        MonotonePwl::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 1.0]).unwrap()
    }

    #[test]
    fn rejects_degenerate_segments() {
        let err = MonotonePwl::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.2, 0.3, 1.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSegment { index: 1 }));
    }

    #[test]
    fn rejects_bad_endpoints() {
        assert!(MonotonePwl::new(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
        assert!(MonotonePwl::new(vec![0.0, 0.9], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn flat_segment_is_not_a_diffeo() {
        let p = MonotonePwl::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            p.check_diffeo(),
            Err(Error::NonPositiveSlope { index: 0, .. })
        ));
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let p = three_point();
        let id = MonotonePwl::identity();
        assert_eq!(p.compose(&id).unwrap(), p);
        assert_eq!(id.compose(&p).unwrap(), p);
    }

    #[test]
    fn self_composition_matches_pointwise() {
        let p = three_point();
        let pp = p.compose(&p).unwrap();
        // ψ⁻¹(½) = 2/3 is the new breakpoint
        assert_eq!(pp.xs().len(), 4);
        assert!((pp.xs()[2] - 2.0 / 3.0).abs() < 1e-15);
        let slopes = pp.slopes();
        let expected = [0.25, 0.75, 2.25];
        for (s, e) in slopes.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12, "{s} vs {e}");
        }
        for k in 0..=100_000 {
            let x = k as f64 / 100_000.0;
            assert!((pp.eval(x) - p.eval(p.eval(x))).abs() <= 1e-12);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let p = three_point();
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            assert!((p.inverse_eval(p.eval(x)) - x).abs() < 1e-14);
        }
    }
}
