use std::io::{Read, Write};

use super::pwl::{uniform_nodes, MonotonePwl};
use crate::{Error, Result};

/// Samples of a scalar function at the uniform nodes `i / n`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "grid function needs n >= 2, got n = {}",
                values.len().saturating_sub(1)
            )));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(uniform_nodes(n).into_iter().map(f).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n() {
            1.0
        } else {
            i as f64 / self.n() as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.n())
    }

    /// Checks the zero boundary values required of a velocity.
    pub fn check_zero_boundary(&self, tol: f64) -> Result<()> {
        let (left, right) = (self.values[0], self.values[self.n()]);
        if left.abs() > tol || right.abs() > tol {
            return Err(Error::BoundaryViolation { left, right });
        }
        Ok(())
    }

    /// Slopes of the piecewise-linear interpolant.
    pub fn slopes(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.values.windows(2).map(|w| (w[1] - w[0]) * n).collect()
    }

    /// Reads the `x,u` CSV layout. The x column must be the uniform grid.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let (xs, us) = read_two_columns(reader, ("x", "u"))?;
        let n = xs.len().saturating_sub(1);
        for (i, &x) in xs.iter().enumerate() {
            let expected = i as f64 / n as f64;
            if (x - expected).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "row {i}: x = {x} is not on the uniform grid (expected {expected})"
                )));
            }
        }
        Self::new(us)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_two_columns(writer, ("x", "u"), &self.nodes(), &self.values)
    }
}

/// Sum of absolute increments over the grid.
pub fn tv_of_samples(g: &GridFunction) -> f64 {
    g.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

impl MonotonePwl {
    /// Reads the `x,y` CSV layout.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let (xs, ys) = read_two_columns(reader, ("x", "y"))?;
        Self::new(xs, ys)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_two_columns(writer, ("x", "y"), self.xs(), self.ys())
    }
}

fn read_two_columns(reader: impl Read, header: (&str, &str)) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let head = rdr.headers()?.clone();
    if head.len() != 2 || &head[0] != header.0 || &head[1] != header.1 {
        return Err(Error::InvalidInput(format!(
            "expected header `{},{}`, found `{}`",
            header.0,
            header.1,
            head.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("row {row}, column {k}: {e}")))
        };
        a.push(parse(0)?);
        b.push(parse(1)?);
    }
    Ok((a, b))
}

fn write_two_columns(writer: impl Write, header: (&str, &str), a: &[f64], b: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([header.0, header.1])?;
    for (x, y) in a.iter().zip(b) {
        // `{:e}` of an f64 is the shortest round-tripping representation
        w.write_record([format!("{x:e}"), format!("{y:e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_of_monotone_samples_is_range() {
        let g = GridFunction::from_fn(10, |x| x).unwrap();
        assert!((tv_of_samples(&g) - 1.0).abs() < 1e-15);
        let g = GridFunction::from_fn(100, |x| 1.0 - 2.0 * x).unwrap();
        assert!((tv_of_samples(&g) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn tv_of_log_cosine_matches_closed_form() {
        // ∫|d ln(1 + (2/7) cos 2πx)| = 2 ln(9/5)
        let g = GridFunction::from_fn(1 << 16, |x| {
            (1.0 + 2.0 / 7.0 * (2.0 * std::f64::consts::PI * x).cos()).ln()
        })
        .unwrap();
        assert!((tv_of_samples(&g) - 2.0 * (9.0f64 / 5.0).ln()).abs() < 1e-4);
    }

    #[test]
    fn refinement_never_decreases_tv() {
        let f = |x: f64| (7.0 * x).sin() + x * x;
        let mut prev = 0.0;
        for k in 1..12 {
            let tv = tv_of_samples(&GridFunction::from_fn(1 << k, f).unwrap());
            assert!(tv >= prev - 1e-14);
            prev = tv;
        }
    }

    #[test]
    fn needs_two_cells() {
        assert!(GridFunction::new(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = GridFunction::from_fn(8, |x| x * (1.0 - x) / 3.0).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(GridFunction::read_csv(buf.as_slice()).unwrap(), g);

        let p = MonotonePwl::from_fn(7, |x| x.powf(1.3)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(MonotonePwl::read_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn csv_requires_header() {
        let err = MonotonePwl::read_csv("0,0\n1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
