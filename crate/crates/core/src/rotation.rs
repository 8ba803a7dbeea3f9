//! SO(3) charts, the Λ/λ chart matrices and Haar integration.
//!
//! Generators follow `(T_j)_{ik} = ε_{ijk}`, so `T_j v = e_j × v` and
//! `exp(θ·T)` is the right-handed rotation by `|θ|` about `θ/|θ|`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Threshold below which a chart is declared singular.
pub const CHART_SINGULAR: f64 = 1e-10;

/// Levi-Civita symbol on 0-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

pub fn eps(i: usize, j: usize, k: usize) -> f64 {
    levi_civita(i, j, k) as f64
}

/// Integer generator `(T_j)_{ik} = ε_{ijk}`.
pub fn generator_int(j: usize) -> [[i64; 3]; 3] {
    let mut t = [[0; 3]; 3];
    for (i, row) in t.iter_mut().enumerate() {
        for (k, x) in row.iter_mut().enumerate() {
            *x = levi_civita(i, j, k);
        }
    }
    t
}

pub fn generator(j: usize) -> Mat3 {
    let t = generator_int(j);
    Mat3::from_fn(|i, k| t[i][k] as f64)
}

/// The three generators as one struct.
#[derive(Clone, Debug)]
pub struct SO3Generators {
    pub t: [Mat3; 3],
}

impl Default for SO3Generators {
    fn default() -> Self {
        SO3Generators { t: [generator(0), generator(1), generator(2)] }
    }
}

/// `v·T`, the antisymmetric matrix with `(v·T) w = v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Inverse of [`hat`] on the antisymmetric part.
pub fn vee(a: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (a[(2, 1)] - a[(1, 2)]),
        0.5 * (a[(0, 2)] - a[(2, 0)]),
        0.5 * (a[(1, 0)] - a[(0, 1)]),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Exponential,
    EulerZyz,
}

/// A point of a chart: `θ ↦ U(θ)`.
///
/// The Euler chart is `U = Rz(θ₃) Ry(θ₂) Rz(θ₁)`, ordered so that `|Λ| = sin θ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationChart {
    pub kind: ChartKind,
    pub theta: [f64; 3],
}

/// `Λ_{ai}`, `λ_{ai}` (rows indexed by `a`) and `|Λ| = det Λ`.
#[derive(Clone, Copy, Debug)]
pub struct ChartMatrices {
    pub big: Mat3,
    pub small: Mat3,
    pub det: f64,
}

fn rot_axis(axis: usize, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    match axis {
        0 => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        _ => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

/// `(1 - cos φ)/φ²` and `(φ - sin φ)/φ³` with series near zero.
fn exp_coeffs(phi: f64) -> (f64, f64, f64) {
    let p2 = phi * phi;
    if phi < 1e-4 {
        let s = 1.0 - p2 / 6.0 + p2 * p2 / 120.0;
        let a = 0.5 - p2 / 24.0 + p2 * p2 / 720.0;
        let b = 1.0 / 6.0 - p2 / 120.0 + p2 * p2 / 5040.0;
        (s, a, b)
    } else {
        (phi.sin() / phi, (1.0 - phi.cos()) / p2, (phi - phi.sin()) / (p2 * phi))
    }
}

/// Rodrigues: `exp(θ·T)`.
pub fn exp_so3(theta: &Vec3) -> Mat3 {
    let k = hat(theta);
    let (s, a, _) = exp_coeffs(theta.norm());
    Mat3::identity() + k * s + k * k * a
}

/// Principal logarithm, `|θ| ≤ π`.
pub fn log_so3(u: &Mat3) -> Vec3 {
    let c = ((u.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let phi = c.acos();
    if phi < 1e-7 {
        return vee(&(u - u.transpose())) * 0.5;
    }
    if PI - phi < 1e-6 {
        // axis from the symmetric part, sign from the antisymmetric part
        let b = (u + Mat3::identity()) * 0.5;
        let mut k = 0;
        for i in 1..3 {
            if b[(i, i)] > b[(k, k)] {
                k = i;
            }
        }
        let mut axis = b.column(k).into_owned();
        axis /= axis.norm();
        let w = vee(&(u - u.transpose()));
        if w.dot(&axis) < 0.0 {
            axis = -axis;
        }
        return axis * phi;
    }
    vee(&(u - u.transpose())) * (phi / (2.0 * phi.sin()))
}

/// Geodesic distance (rotation angle of `u1ᵀ u2`).
pub fn geodesic_distance(u1: &Mat3, u2: &Mat3) -> f64 {
    log_so3(&(u1.transpose() * u2)).norm()
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Mat3 {
    loop {
        let q: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
            return Mat3::new(
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
        }
    }
}

impl RotationChart {
    pub fn new(kind: ChartKind, theta: [f64; 3]) -> Self {
        RotationChart { kind, theta }
    }

    pub fn exponential(theta: [f64; 3]) -> Self {
        Self::new(ChartKind::Exponential, theta)
    }

    pub fn euler(theta: [f64; 3]) -> Self {
        Self::new(ChartKind::EulerZyz, theta)
    }

    fn check_finite(&self) -> Result<()> {
        if self.theta.iter().all(|t| t.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("non-finite θ {:?}", self.theta)))
        }
    }

    /// Default domain: the open ball `‖θ‖ < π` or the Euler box `0 < θ₂ < π`, `|θ₁|, |θ₃| ≤ π`.
    pub fn in_domain(&self) -> bool {
        match self.kind {
            ChartKind::Exponential => Vec3::from(self.theta).norm() < PI,
            ChartKind::EulerZyz => {
                let [a, b, g] = self.theta;
                b > 0.0 && b < PI && a.abs() <= PI && g.abs() <= PI
            }
        }
    }

    pub fn rotation_matrix(&self) -> Result<Mat3> {
        self.check_finite()?;
        Ok(match self.kind {
            ChartKind::Exponential => exp_so3(&Vec3::from(self.theta)),
            ChartKind::EulerZyz => {
                let [t1, t2, t3] = self.theta;
                rot_axis(2, t3) * rot_axis(1, t2) * rot_axis(2, t1)
            }
        })
    }

    /// Closed-form `Λ`, `λ = ΛU` and `|Λ|`.
    pub fn chart_matrices(&self) -> Result<ChartMatrices> {
        let u = self.rotation_matrix()?;
        let big = match self.kind {
            ChartKind::Exponential => {
                let th = Vec3::from(self.theta);
                let k = hat(&th);
                let (_, a, b) = exp_coeffs(th.norm());
                // Λ = J_lᵀ with J_l = I + a K + b K²
                (Mat3::identity() + k * a + k * k * b).transpose()
            }
            ChartKind::EulerZyz => {
                let [_, t2, t3] = self.theta;
                let (s2, c2) = t2.sin_cos();
                let (s3, c3) = t3.sin_cos();
                Mat3::new(c3 * s2, s3 * s2, c2, -s3, c3, 0.0, 0.0, 0.0, 1.0)
            }
        };
        let det = big.determinant();
        if det.abs() < CHART_SINGULAR {
            return Err(Error::ChartSingular(det));
        }
        Ok(ChartMatrices { big, small: big * u, det })
    }

    /// Central-difference `∂U/∂θ_a`.
    pub fn fd_derivative(&self, a: usize, h: f64) -> Result<Mat3> {
        let mut p = *self;
        let mut m = *self;
        p.theta[a] += h;
        m.theta[a] -= h;
        Ok((p.rotation_matrix()? - m.rotation_matrix()?) / (2.0 * h))
    }

    /// Point on the same chart with `θ + δ`.
    pub fn shifted(&self, a: usize, d: f64) -> Self {
        let mut c = *self;
        c.theta[a] += d;
        c
    }
}

/// Quadrature resolution for [`haar_integrate`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { points: 16 }
    }
}

/// `∫ dθ |Λ| f(U(θ))` over the chart's cover: the ball `‖θ‖ ≤ π` or the Euler box.
pub fn haar_integrate<F>(kind: ChartKind, f: F, rule: QuadratureSpec) -> Result<f64>
where
    F: Fn(&Mat3) -> f64,
{
    let n = rule.points;
    if n < 8 {
        return Err(Error::InvalidParameter(format!("{n} points per parameter, need ≥ 8")));
    }
    let mut total = 0.0;
    match kind {
        ChartKind::Exponential => {
            // spherical coordinates θ = φ n̂; dθ = φ² dφ dΩ
            let rphi = quad::gauss_legendre_on(n, 0.0, PI);
            let rcos = quad::gauss_legendre(n);
            let naz = 2 * n;
            for (phi, wphi) in rphi.nodes.iter().zip(&rphi.weights) {
                for (ct, wct) in rcos.nodes.iter().zip(&rcos.weights) {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for k in 0..naz {
                        let az = 2.0 * PI * (k as f64 + 0.5) / naz as f64;
                        let th = [phi * st * az.cos(), phi * st * az.sin(), phi * ct];
                        let c = RotationChart::exponential(th);
                        let cm = c.chart_matrices()?;
                        let w = wphi * wct * (2.0 * PI / naz as f64) * phi * phi;
                        total += w * cm.det * f(&c.rotation_matrix()?);
                    }
                }
            }
        }
        ChartKind::EulerZyz => {
            let rb = quad::gauss_legendre_on(n, 0.0, PI);
            let na = 2 * n;
            let h = 2.0 * PI / na as f64;
            for (b, wb) in rb.nodes.iter().zip(&rb.weights) {
                for i in 0..na {
                    let t1 = -PI + h * (i as f64 + 0.5);
                    for k in 0..na {
                        let t3 = -PI + h * (k as f64 + 0.5);
                        let c = RotationChart::euler([t1, *b, t3]);
                        let cm = c.chart_matrices()?;
                        total += wb * h * h * cm.det * f(&c.rotation_matrix()?);
                    }
                }
            }
        }
    }
    Ok(total)
}
