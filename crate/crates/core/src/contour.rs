//! Distance fields over the barycentric family `aψ₁ + bψ₂ + cψ₃` of the three
//! trigonometric generators. The centre `(⅓, ⅓, ⅓)` is the identity, which
//! serves as the reference point for both metrics.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core1d::{MapSpec, SmoothMap};
use crate::relu1d;
use crate::{Error, Result};

/// Default number of subdivisions per edge of the barycentric triangle.
pub const DEFAULT_SUBDIVISIONS: usize = 60;
/// Default grid of the `L²` quadrature.
pub const DEFAULT_L2_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourMetric {
    Flow,
    L2,
}

impl fmt::Display for ContourMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Flow => "flow",
            Self::L2 => "l2",
        })
    }
}

impl FromStr for ContourMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flow" => Ok(Self::Flow),
            "l2" => Ok(Self::L2),
            _ => Err(Error::InvalidInput(format!(
                "unknown contour metric '{s}' (expected flow or l2)"
            ))),
        }
    }
}

/// One CSV row: barycentric weights and the distance to the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub value: f64,
}

/// Points `(i/g, j/g, (g − i − j)/g)`, `(g + 1)(g + 2)/2` in total.
pub fn barycentric_grid(g: usize) -> Result<Vec<(f64, f64, f64)>> {
    if g < 3 {
        return Err(Error::InvalidInput(format!("barycentric grid needs g >= 3, got {g}")));
    }
    let gf = g as f64;
    Ok((0..=g)
        .flat_map(|i| (0..=g - i).map(move |j| (i as f64 / gf, j as f64 / gf, (g - i - j) as f64 / gf)))
        .collect())
}

/// `‖ψ − id‖_{L²[0,1]}` by the trapezoid rule on `n` cells.
pub fn l2_to_identity(psi: &SmoothMap, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let sq = |i: usize| {
        let x = i as f64 * h;
        (psi.eval(x) - x).powi(2)
    };
    let inner: f64 = (1..n).map(sq).sum();
    ((inner + 0.5 * (sq(0) + sq(n))) * h).sqrt()
}

/// Distance of every grid point to the centre under `metric`; `l2_grid` is
/// only used by the `L²` metric.
pub fn run_contour(g: usize, metric: ContourMetric, l2_grid: usize) -> Result<Vec<ContourRow>> {
    let pts = barycentric_grid(g)?;
    let id = MapSpec::identity();
    pts.par_iter()
        .map(|&(a, b, c)| {
            let psi = SmoothMap::bary(a, b, c)?;
            let value = match metric {
                ContourMetric::Flow => relu1d::distance(&MapSpec::Smooth(psi), &id)?,
                ContourMetric::L2 => l2_to_identity(&psi, l2_grid),
            };
            Ok(ContourRow { a, b, c, value })
        })
        .collect()
}

/// Writes rows with the header `a,b,c,value`.
pub fn write_csv(rows: &[ContourRow], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(reader: impl Read) -> Result<Vec<ContourRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Average ranks (ties share the mean rank), starting at 1.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
            e += 1;
        }
        let mean = (s + e) as f64 / 2.0 + 1.0;
        for &k in &idx[s..=e] {
            r[k] = mean;
        }
        s = e + 1;
    }
    r
}

/// Spearman rank correlation of two equally long samples.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
