//! Transport-time bounds on SO(3).
//!
//! With the ℓ2 family of rotation generators the minimal time is the rotation
//! angle. For the ℓ1 (axial) family only a sandwich is available:
//! `θ ≤ d ≤ min(‖vee Log‖₁, best axial factorization) ≤ √3·θ`.

use std::f64::consts::PI;
use std::io::Read;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// Orthonormal 3×3 matrix with determinant 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    m: Matrix3<f64>,
}

impl Rotation3 {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if !(ortho <= ORTHO_TOL) || !((det - 1.0).abs() <= ORTHO_TOL) {
            return Err(Error::InvalidInput(format!(
                "not a rotation: |RᵀR − I| = {ortho:.3e}, det = {det}"
            )));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self { m: Matrix3::identity() }
    }

    /// Rodrigues formula for a rotation by `theta` about `axis` (normalized here).
    pub fn from_axis_angle(axis: Vector3<f64>, theta: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidInput("axis must be nonzero and angle finite".into()));
        }
        Ok(Self::exp(axis / n * theta))
    }

    /// Exponential of the skew matrix of `w`.
    pub fn exp(w: Vector3<f64>) -> Self {
        let theta = w.norm();
        if theta == 0.0 {
            return Self::identity();
        }
        let k = hat(&(w / theta));
        let m = Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
        Self { m }
    }

    /// Rotation by `angle` about coordinate axis `axis` (0, 1 or 2).
    pub fn axial(axis: usize, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut m = Matrix3::identity();
        m[(p, p)] = c;
        m[(q, q)] = c;
        m[(q, p)] = s;
        m[(p, q)] = -s;
        Self { m }
    }

    /// Haar-uniform random rotation.
    pub fn random(rng: &mut impl Rng) -> Self {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-6 {
                return Self::from_quaternion(q[0] / n, q[1] / n, q[2] / n, q[3] / n);
            }
        }
    }

    fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Self { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn compose(&self, other: &Rotation3) -> Self {
        Self { m: self.m * other.m }
    }

    /// Parses `axis=x,y,z;angle=r`.
    pub fn parse_axis_angle(s: &str) -> Result<Self> {
        let mut axis = None;
        let mut angle = None;
        for part in s.split(';') {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value in '{part}'")))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad number '{t}'")))
            };
            match key.trim() {
                "axis" => {
                    let v: Vec<f64> = val.split(',').map(num).collect::<Result<_>>()?;
                    if v.len() != 3 {
                        return Err(Error::InvalidInput("axis needs three components".into()));
                    }
                    axis = Some(Vector3::new(v[0], v[1], v[2]));
                }
                "angle" => angle = Some(num(val)?),
                k => return Err(Error::InvalidInput(format!("unknown rotation key '{k}'"))),
            }
        }
        match (axis, angle) {
            (Some(a), Some(t)) => Self::from_axis_angle(a, t),
            _ => Err(Error::InvalidInput("rotation needs both axis= and angle=".into())),
        }
    }

    /// Reads a 3×3 matrix from headerless CSV.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut m = Matrix3::zeros();
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rows == 3 || rec.len() != 3 {
                return Err(Error::InvalidInput("rotation CSV must be 3 rows of 3 numbers".into()));
            }
            for (c, field) in rec.iter().enumerate() {
                m[(rows, c)] = field
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad number '{field}'")))?;
            }
            rows += 1;
        }
        if rows != 3 {
            return Err(Error::InvalidInput("rotation CSV must be 3 rows of 3 numbers".into()));
        }
        Self::new(m)
    }
}

fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Principal logarithm in axis-angle form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    /// Unit axis; zero when `theta == 0`.
    pub axis: Vector3<f64>,
    /// Angle in `[0, π]`.
    pub theta: f64,
}

impl AxisAngle {
    /// `vee(Log R) = θ·axis`.
    pub fn vector(&self) -> Vector3<f64> {
        self.axis * self.theta
    }
}

/// Principal log via the unit quaternion (Shepperd's method), which stays
/// accurate near `θ = π` where the antisymmetric part vanishes.
pub fn principal_log(r: &Rotation3) -> AxisAngle {
    let m = &r.m;
    let tr = m.trace();
    let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let (w, v) = if tr >= diag[0].max(diag[1]).max(diag[2]) {
        let s = 2.0 * (1.0 + tr).sqrt();
        (
            s / 4.0,
            Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) / s,
        )
    } else {
        let i = (0..3).max_by(|&a, &b| diag[a].total_cmp(&diag[b])).unwrap();
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let s = 2.0 * (1.0 + diag[i] - diag[j] - diag[k]).sqrt();
        let mut v = Vector3::zeros();
        v[i] = s / 4.0;
        v[j] = (m[(j, i)] + m[(i, j)]) / s;
        v[k] = (m[(k, i)] + m[(i, k)]) / s;
        ((m[(k, j)] - m[(j, k)]) / s, v)
    };
    let (w, v) = if w < 0.0 { (-w, -v) } else { (w, v) };
    let n = v.norm();
    if n == 0.0 {
        return AxisAngle {
            axis: Vector3::zeros(),
            theta: 0.0,
        };
    }
    AxisAngle {
        axis: v / n,
        theta: 2.0 * n.atan2(w),
    }
}

/// Geodesic distance of the bi-invariant metric: `θ(R₂R₁ᵀ)`.
pub fn d_l2(r1: &Rotation3, r2: &Rotation3) -> f64 {
    principal_log(&r2.compose(&r1.transpose())).theta
}

/// Axial factorization `R = R_i(a)·R_j(b)·R_k(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub axes: [usize; 3],
    pub angles: [f64; 3],
}

impl EulerDecomposition {
    pub fn cost(&self) -> f64 {
        self.angles.iter().map(|a| a.abs()).sum()
    }

    pub fn recompose(&self) -> Rotation3 {
        let [i, j, k] = self.axes;
        let [a, b, c] = self.angles;
        Rotation3::axial(i, a)
            .compose(&Rotation3::axial(j, b))
            .compose(&Rotation3::axial(k, c))
    }

    /// Convention name such as `ZXZ` or `XYZ`.
    pub fn convention(&self) -> String {
        self.axes.iter().map(|&a| ['X', 'Y', 'Z'][a]).collect()
    }
}

/// All axis triples: six proper (`i j i`) and six Tait–Bryan (`i j k`).
pub fn conventions() -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(12);
    for i in 0..3 {
        for j in 0..3 {
            if j == i {
                continue;
            }
            out.push([i, j, i]);
            out.push([i, j, 3 - i - j]);
        }
    }
    out
}

fn wrap(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Both branches of the factorization of `r` in convention `axes`. The middle
/// angle is taken from a well-conditioned `atan2`; the last angle is read off
/// the residual so that recomposition is accurate even near gimbal lock.
pub fn euler_decompose(r: &Rotation3, axes: [usize; 3]) -> [EulerDecomposition; 2] {
    let m = &r.m;
    let [i, j, k] = axes;
    let branches: [(f64, f64); 2] = if i == k {
        let o = 3 - i - j;
        // R e_i = cos b e_i + sin b (cos a (e_j × e_i) + sin a e_j)
        let mi = cross_sign(j, i) * m[(o, i)];
        let ji = m[(j, i)];
        let b = ji.hypot(mi).atan2(m[(i, i)]);
        [(ji.atan2(mi), b), ((-ji).atan2(-mi), -b)]
    } else {
        let s = cross_sign(i, j);
        // R e_k = s sin b e_i + cos b (cos a e_k − s sin a e_j)
        let (jk, kk) = (m[(j, k)], m[(k, k)]);
        let b = (s * m[(i, k)]).atan2(jk.hypot(kk));
        let b2 = wrap(PI - b);
        [((-s * jk).atan2(kk), b), ((s * jk).atan2(-kk), b2)]
    };
    branches.map(|(a, b)| {
        let partial = Rotation3::axial(i, a).compose(&Rotation3::axial(j, b));
        let res = partial.transpose().compose(r).m;
        let (p, q) = ((k + 1) % 3, (k + 2) % 3);
        let c = res[(q, p)].atan2(res[(p, p)]);
        EulerDecomposition {
            axes,
            angles: [wrap(a), wrap(b), wrap(c)],
        }
    })
}

/// `+1` when `(a, b)` is a cyclic pair, so `e_a × e_b = ±e_c`.
fn cross_sign(a: usize, b: usize) -> f64 {
    if (a + 1) % 3 == b {
        1.0
    } else {
        -1.0
    }
}

/// Cheapest axial factorization over all conventions and branches.
pub fn best_euler(r: &Rotation3) -> EulerDecomposition {
    conventions()
        .into_iter()
        .flat_map(|axes| euler_decompose(r, axes))
        .min_by(|a, b| a.cost().total_cmp(&b.cost()))
        .expect("twelve conventions")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Bounds {
    pub lower: f64,
    pub log_upper: f64,
    pub euler_upper: f64,
    pub euler: EulerDecomposition,
}

impl L1Bounds {
    pub fn upper(&self) -> f64 {
        self.log_upper.min(self.euler_upper)
    }
}

/// Sandwich for the ℓ1 transport time between `r1` and `r2`.
pub fn d_l1_bounds(r1: &Rotation3, r2: &Rotation3) -> L1Bounds {
    let rel = r2.compose(&r1.transpose());
    let log = principal_log(&rel);
    let euler = best_euler(&rel);
    L1Bounds {
        lower: log.theta,
        log_upper: log.vector().abs().sum(),
        euler_upper: euler.cost(),
        euler,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn diag_axis() -> Vector3<f64> {
        Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt()
    }

    #[test]
    fn log_examples() {
        assert_eq!(principal_log(&Rotation3::identity()).theta, 0.0);
        let r = Rotation3::from_axis_angle(Vector3::z(), FRAC_PI_2).unwrap();
        let l = principal_log(&r);
        assert!((l.theta - FRAC_PI_2).abs() < 1e-15);
        assert!((l.axis - Vector3::z()).norm() < 1e-15);

        let r = Rotation3::from_axis_angle(diag_axis(), 1.0).unwrap();
        let l = principal_log(&r);
        assert!((l.theta - 1.0).abs() < 1e-14);
        assert!((l.axis - diag_axis()).norm() < 1e-14);
        assert!((Rotation3::exp(l.vector()).m - r.m).norm() < 1e-10);
    }

    #[test]
    fn log_near_pi() {
        for theta in [PI, PI - 1e-9, PI - 1e-5] {
            let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
            let r = Rotation3::from_axis_angle(axis, theta).unwrap();
            let l = principal_log(&r);
            assert!((l.theta - theta).abs() < 1e-9);
            assert!((Rotation3::exp(l.vector()).m - r.m).norm() < 1e-9);
        }
    }

    #[test]
    fn l2_examples() {
        let r = Rotation3::from_axis_angle(Vector3::z(), FRAC_PI_2).unwrap();
        assert_eq!(d_l2(&r, &r), 0.0);
        assert!((d_l2(&Rotation3::identity(), &r) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn axial_rotation_bounds() {
        let r = Rotation3::from_axis_angle(Vector3::z(), FRAC_PI_2).unwrap();
        let b = d_l1_bounds(&Rotation3::identity(), &r);
        for v in [b.lower, b.log_upper, b.euler_upper] {
            assert!((v - FRAC_PI_2).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn diagonal_axis_bounds() {
        let r = Rotation3::from_axis_angle(diag_axis(), 0.3).unwrap();
        let b = d_l1_bounds(&Rotation3::identity(), &r);
        assert!((b.lower - 0.3).abs() < 1e-14);
        assert!((b.log_upper - 3f64.sqrt() * 0.3).abs() < 1e-14);
        assert!(b.euler_upper <= b.log_upper + 1e-9);
    }

    #[test]
    fn identity_bounds_vanish() {
        let b = d_l1_bounds(&Rotation3::identity(), &Rotation3::identity());
        assert_eq!((b.lower, b.log_upper), (0.0, 0.0));
        assert!(b.euler_upper.abs() < 1e-15);
    }

    #[test]
    fn gimbal_lock_recomposes() {
        for axes in conventions() {
            for b in [0.0, FRAC_PI_2, -FRAC_PI_2, PI] {
                let r = Rotation3::axial(axes[0], 0.4)
                    .compose(&Rotation3::axial(axes[1], b))
                    .compose(&Rotation3::axial(axes[2], -1.1));
                for d in euler_decompose(&r, axes) {
                    assert!((d.recompose().m - r.m).norm() < 1e-12, "{} b={b}", d.convention());
                }
            }
        }
    }

    #[test]
    fn rejects_non_rotations() {
        assert!(Rotation3::new(Matrix3::identity() * 2.0).is_err());
        assert!(Rotation3::new(-Matrix3::identity()).is_err());
    }

    #[test]
    fn parsing() {
        let r = Rotation3::parse_axis_angle("axis=0,0,1;angle=1.5707963267948966").unwrap();
        assert!((d_l2(&Rotation3::identity(), &r) - FRAC_PI_2).abs() < 1e-15);
        assert!(Rotation3::parse_axis_angle("axis=0,0;angle=1").is_err());
        let csv = "1,0,0\n0,0,-1\n0,1,0\n";
        let r = Rotation3::read_csv(csv.as_bytes()).unwrap();
        assert!((principal_log(&r).theta - FRAC_PI_2).abs() < 1e-15);
    }
}
