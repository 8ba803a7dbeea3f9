//! Curvilinear coordinates `(θ, Q)` on configuration space: closed-form derivatives,
//! the inverse metric in block form, finite-difference oracles and the quantum potential `V_Q`.
//!
//! Lab coordinates are `q_c = Σ (m_α/ℜ_c) Γ_{cα}·r_α` over the full extended basis, and
//! body positions `R = Σ_{a≥4} Q_a Γ_a`, `r = Uᵀ R`.

pub mod inner;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gauge::{eval_geometry, ExtendedBasis, FrameTag, GaugeSpec, Configuration};
use crate::rotation::{generator, Mat3, RotationChart, Vec3};

pub use inner::{apply_expansion, inner_matrix, inner_product, GaussPoly, HermiteGrid, InnerWeight, WaveFunction};

/// Central-difference step for derivatives of closed-form quantities.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct CoordinateMap {
    pub spec: GaugeSpec,
    pub basis: ExtendedBasis,
    pub chart: RotationChart,
    /// `Q_a` for rows `4..3N` of the basis.
    pub coords: Vec<f64>,
    pub u: Mat3,
    /// `Λ_{ai}`.
    pub lam: Mat3,
    pub lam_inv: Mat3,
    /// Gauge block `𝔔_{ai}`, `a ≤ 3`.
    pub q: Mat3,
    pub q_inv: Mat3,
    /// `𝔔_{bi}` for the remaining rows, `(3N−3) × 3`.
    pub q_ext: DMatrix<f64>,
    pub ninv: Mat3,
    pub jac: f64,
}

fn row_dot_rotated(basis: &ExtendedBasis, u: &Mat3) -> DMatrix<f64> {
    // G[b][c] = Σ_α m_α Γ_{cα}·(Uᵀ Γ_{bα})
    let d = basis.dim();
    let n = basis.masses.len();
    let ut = u.transpose();
    let rot: Vec<Vec<Vec3>> = basis
        .rows
        .iter()
        .map(|r| (0..n).map(|al| ut * Vec3::new(r[3 * al], r[3 * al + 1], r[3 * al + 2])).collect())
        .collect();
    DMatrix::from_fn(d, d, |b, c| {
        (0..n)
            .map(|al| {
                let g = &basis.rows[c];
                basis.masses[al] * Vec3::new(g[3 * al], g[3 * al + 1], g[3 * al + 2]).dot(&rot[b][al])
            })
            .sum()
    })
}

impl CoordinateMap {
    pub fn new(spec: &GaugeSpec, basis: &ExtendedBasis, chart: RotationChart, coords: &[f64]) -> Result<Self> {
        let d = basis.dim();
        if d != 3 * spec.n_particles() || coords.len() != d - 3 {
            return Err(Error::DimensionMismatch(format!("{} coordinates for a basis of {d}", coords.len())));
        }
        let cm = chart.chart_matrices()?;
        let u = chart.rotation_matrix()?;
        let lam_inv = cm.big.try_inverse().ok_or(Error::ChartSingular(cm.det))?;
        let cfg = Self::body_of(basis, coords);
        let geo = eval_geometry(spec, &cfg)?;
        let ninv = match (geo.singular, geo.ninv) {
            (false, Some(n)) => n,
            _ => return Err(Error::Horizon(geo.det_q)),
        };
        let q_inv = geo.q.try_inverse().ok_or(Error::Horizon(geo.det_q))?;
        let ext = extended_q(basis, &cfg.positions);
        Ok(CoordinateMap {
            spec: spec.clone(),
            basis: basis.clone(),
            chart,
            coords: coords.to_vec(),
            u,
            lam: cm.big,
            lam_inv,
            q: geo.q,
            q_inv,
            q_ext: ext,
            ninv,
            jac: geo.jac,
        })
    }

    fn body_of(basis: &ExtendedBasis, coords: &[f64]) -> Configuration {
        let mut x = vec![0.0; basis.dim()];
        for (qa, row) in coords.iter().zip(&basis.rows[3..]) {
            for (xi, g) in x.iter_mut().zip(row) {
                *xi += qa * g;
            }
        }
        Configuration::from_flat(&x, FrameTag::Body)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn body(&self) -> Configuration {
        Self::body_of(&self.basis, &self.coords)
    }

    /// Point shifted along generalized coordinate `k` (0..3 angles, then `Q`).
    pub fn shifted(&self, k: usize, h: f64) -> Result<Self> {
        if k < 3 {
            Self::new(&self.spec, &self.basis, self.chart.shifted(k, h), &self.coords)
        } else {
            let mut c = self.coords.clone();
            c[k - 3] += h;
            Self::new(&self.spec, &self.basis, self.chart, &c)
        }
    }

    fn common_r2(&self) -> f64 {
        self.basis.common_norm_sq
    }

    /// Lab coordinates `q` of the point.
    pub fn lab_coords(&self) -> Vec<f64> {
        lab_coords(&self.basis, &self.u, &self.coords)
    }

    /// Closed-form `∂q_c/∂x_k`, `x = (θ, Q)`: rows `c`, columns `k`.
    pub fn forward_jacobian(&self) -> DMatrix<f64> {
        let d = self.dim();
        let n = self.basis.masses.len();
        let cfg = self.body();
        let ut = self.u.transpose();
        // ∂r/∂θ_a = −Λ_{ai} Uᵀ T_i R
        let mut dr: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                let t = (0..3).fold(Mat3::zeros(), |acc, i| acc + generator(i) * self.lam[(a, i)]);
                cfg.positions
                    .iter()
                    .flat_map(|p| {
                        let v = -(ut * (t * Vec3::from(*p)));
                        [v[0], v[1], v[2]]
                    })
                    .collect()
            })
            .collect();
        for row in &self.basis.rows[3..] {
            dr.push(
                (0..n)
                    .flat_map(|al| {
                        let v = ut * Vec3::new(row[3 * al], row[3 * al + 1], row[3 * al + 2]);
                        [v[0], v[1], v[2]]
                    })
                    .collect(),
            );
        }
        DMatrix::from_fn(d, d, |c, k| {
            crate::gauge::mdot(&self.basis.masses, &self.basis.rows[c], &dr[k]) / self.basis.norm_sq[c].sqrt()
        })
    }

    /// Closed-form `∂x_a/∂q_c`: the angle rows from the rotation's response to lab
    /// displacements, the `Q` rows from projecting the gauge-corrected displacement.
    pub fn inverse_jacobian(&self) -> DMatrix<f64> {
        let d = self.dim();
        let g = row_dot_rotated(&self.basis, &self.u);
        let k = self.lam_inv.transpose() * self.q_inv;
        let qq = &self.q_ext * DMatrix::from_fn(3, 3, |i, j| self.q_inv[(i, j)]);
        let r2 = self.common_r2();
        DMatrix::from_fn(d, d, |a, c| {
            let rc = self.basis.norm_sq[c].sqrt();
            if a < 3 {
                -(0..3).map(|b| k[(a, b)] * g[(b, c)]).sum::<f64>() / rc
            } else {
                let corr: f64 = (0..3).map(|dd| qq[(a - 3, dd)] * g[(dd, c)]).sum();
                (g[(a, c)] - corr) / (r2 * rc)
            }
        })
    }
}

/// `𝔔_{bi}` for rows `b ≥ 4` of the extended basis.
pub fn extended_q(basis: &ExtendedBasis, positions: &[[f64; 3]]) -> DMatrix<f64> {
    let d = basis.dim();
    let mut out = DMatrix::zeros(d - 3, 3);
    for (b, row) in basis.rows[3..].iter().enumerate() {
        for (be, r) in positions.iter().enumerate() {
            let g = Vec3::new(row[3 * be], row[3 * be + 1], row[3 * be + 2]);
            // Σ_j Γ_j ε_{jik} R_k = (R × Γ)_i
            let c = Vec3::from(*r).cross(&g) * basis.masses[be];
            for i in 0..3 {
                out[(b, i)] += c[i];
            }
        }
    }
    out
}

/// `q(θ, Q)` for the rotation `U(θ)`.
pub fn lab_coords(basis: &ExtendedBasis, u: &Mat3, coords: &[f64]) -> Vec<f64> {
    let cfg = CoordinateMap::body_of(basis, coords).rotated(&u.transpose(), FrameTag::Lab);
    let x = cfg.flat();
    basis
        .rows
        .iter()
        .zip(&basis.norm_sq)
        .map(|(r, n)| crate::gauge::mdot(&basis.masses, r, &x) / n.sqrt())
        .collect()
}

/// `M⁻¹` in four blocks and `J = ℜ^{3N−3} |Λ| 𝒥`.
#[derive(Clone, Debug)]
pub struct MetricBlocks {
    pub angle_angle: Mat3,
    pub angle_coord: DMatrix<f64>,
    pub coord_coord: DMatrix<f64>,
    pub jac: f64,
}

impl MetricBlocks {
    pub fn full(&self) -> DMatrix<f64> {
        let d = 3 + self.coord_coord.nrows();
        DMatrix::from_fn(d, d, |a, b| match (a < 3, b < 3) {
            (true, true) => self.angle_angle[(a, b)],
            (true, false) => self.angle_coord[(a, b - 3)],
            (false, true) => self.angle_coord[(b, a - 3)],
            (false, false) => self.coord_coord[(a - 3, b - 3)],
        })
    }
}

pub fn metric_blocks(map: &CoordinateMap) -> MetricBlocks {
    let li = DMatrix::from_fn(3, 3, |i, j| map.lam_inv[(i, j)]);
    let ni = DMatrix::from_fn(3, 3, |i, j| map.ninv[(i, j)]);
    let r2 = map.common_r2();
    let aa = li.transpose() * &ni * &li;
    let ac = li.transpose() * &ni * map.q_ext.transpose() / r2;
    let m = map.q_ext.nrows();
    let cc = DMatrix::identity(m, m) / r2 + &map.q_ext * &ni * map.q_ext.transpose() / (r2 * r2);
    let jac = r2.sqrt().powi(m as i32) * map.lam.determinant().abs() * map.jac;
    MetricBlocks { angle_angle: Mat3::from_fn(|i, j| aa[(i, j)]), angle_coord: ac, coord_coord: cc, jac }
}

/// Finite-difference oracle: `(M⁻¹, |det ∂q/∂x|)` from central differences of `q(θ, Q)`.
pub fn fd_inverse_metric(map: &CoordinateMap, h: f64) -> Result<(DMatrix<f64>, f64)> {
    let d = map.dim();
    let mut jm = DMatrix::zeros(d, d);
    for k in 0..d {
        let p = map.shifted(k, h)?.lab_coords();
        let m = map.shifted(k, -h)?.lab_coords();
        for c in 0..d {
            jm[(c, k)] = (p[c] - m[c]) / (2.0 * h);
        }
    }
    let metric = jm.transpose() * &jm;
    let det = jm.determinant().abs();
    let inv = metric.try_inverse().ok_or(Error::Horizon(det))?;
    Ok((inv, det))
}

/// Pieces of `V_Q = V_{Q₀} + V_{Q₁} + V_{Q₂}` and the chart term `(1/8) 𝒩⁻¹ ∂Λ⁻¹ ∂Λ⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumPotentialSplit {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub chart_term: f64,
}

impl QuantumPotentialSplit {
    pub fn total(&self) -> f64 {
        self.v0 + self.v1 + self.v2
    }

    /// `V_Q` minus the chart term; should equal `𝒱₁ + 𝒱₂`.
    pub fn intrinsic(&self) -> f64 {
        self.total() - self.chart_term
    }
}

/// `V_Q = (1/8) Σ (∂_b ∂x_a/∂q_c)(∂_a ∂x_b/∂q_c)` from central differences of the closed-form `∂x/∂q`.
pub fn quantum_potential_oracle(map: &CoordinateMap) -> Result<QuantumPotentialSplit> {
    let d = map.dim();
    let h = FD_STEP;
    let mut dd: Vec<DMatrix<f64>> = Vec::with_capacity(d);
    let mut dlam: Vec<Mat3> = Vec::with_capacity(3);
    for k in 0..d {
        let p = map.shifted(k, h)?;
        let m = map.shifted(k, -h)?;
        dd.push((p.inverse_jacobian() - m.inverse_jacobian()) / (2.0 * h));
        if k < 3 {
            dlam.push((p.lam_inv - m.lam_inv) / (2.0 * h));
        }
    }
    let pair = |a: usize, b: usize| -> f64 { (0..d).map(|c| dd[b][(a, c)] * dd[a][(b, c)]).sum() };
    let (mut v0, mut v1, mut v2) = (0.0, 0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            match (a < 3, b < 3) {
                (true, true) => v2 += pair(a, b),
                (false, false) => v0 += pair(a, b),
                (true, false) => v1 += 2.0 * pair(a, b),
                (false, true) => {}
            }
        }
    }
    let mut chart_term = 0.0;
    for a in 0..3 {
        for ap in 0..3 {
            for l in 0..3 {
                for lp in 0..3 {
                    chart_term += map.ninv[(l, lp)] * dlam[a][(lp, ap)] * dlam[ap][(l, a)];
                }
            }
        }
    }
    Ok(QuantumPotentialSplit { v0: v0 / 8.0, v1: v1 / 8.0, v2: v2 / 8.0, chart_term: chart_term / 8.0 })
}

/// `(1/J) ∂_a (J M⁻¹_{ab} ∂_b F)` for `F = f∘q`, given `∇f` and the point.
/// Uses the closed-form `∂x/∂q` for the flux and a five-point stencil for the divergence.
pub fn curvilinear_laplacian<G>(map: &CoordinateMap, grad_f: G, h: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let d = map.dim();
    let flux = |m: &CoordinateMap, a: usize| -> f64 {
        let g = DVector::from_vec(grad_f(&m.lab_coords()));
        let jac = metric_blocks(m).jac;
        jac * (m.inverse_jacobian().row(a) * &g)[(0, 0)]
    };
    let jac0 = metric_blocks(map).jac;
    let mut div = 0.0;
    for a in 0..d {
        let f: Vec<f64> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|s| map.shifted(a, s * h).map(|m| flux(&m, a)))
            .collect::<Result<_>>()?;
        div += (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
    }
    Ok(div / jac0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{eckart_gauge, eval_quantum_potentials, extend_basis, tests::random_spec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, n: usize, ti: bool) -> CoordinateMap {
        loop {
            let spec = random_spec(rng, n, ti);
            let basis = extend_basis(&spec, &[], rng.gen_range(0.5..2.0)).unwrap();
            let theta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let coords: Vec<f64> = (0..3 * n - 3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            if let Ok(m) = CoordinateMap::new(&spec, &basis, RotationChart::exponential(theta), &coords) {
                if m.jac > 1e-2 {
                    return m;
                }
            }
        }
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn jacobians_are_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..5 {
            let m = random_map(&mut rng, n, n > 2);
            let prod = m.inverse_jacobian() * m.forward_jacobian();
            assert!(rel(&prod, &DMatrix::identity(3 * n, 3 * n)) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn blocks_match_fd_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..5 {
            let m = random_map(&mut rng, n, false);
            let mb = metric_blocks(&m);
            let (fd, det) = fd_inverse_metric(&m, FD_STEP).unwrap();
            assert!(rel(&mb.full(), &fd) < 1e-6);
            assert!((mb.jac - det).abs() < 1e-6 * det);
            assert!(mb.full().cholesky().is_some());
        }
    }

    #[test]
    fn oracle_reproduces_quantum_potentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..5 {
            let m = random_map(&mut rng, n, n == 4);
            let split = quantum_potential_oracle(&m).unwrap();
            let (v1, v2) = eval_quantum_potentials(&m.spec, &m.body()).unwrap();
            let scale = v1.abs() + v2.abs();
            assert!(scale > 1e-6);
            assert!((split.intrinsic() - (v1 + v2)).abs() < 1e-5 * scale.max(1.0), "{split:?} {v1} {v2}");
            assert!((split.v0 - v2).abs() < 1e-5 * scale.max(1.0));
        }
    }

    #[test]
    fn eckart_equilibrium_block() {
        let s3 = 3f64.sqrt();
        let z = Configuration::body(vec![[-0.5, -0.5 / s3, 0.0], [0.5, -0.5 / s3, 0.0], [0.0, 1.0 / s3, 0.0]]);
        let spec = eckart_gauge(&z, &[1.0; 3]).unwrap();
        let basis = extend_basis(&spec, &[], 1.0).unwrap();
        let coords = crate::gauge::project_all(&basis, &z).unwrap()[3..].to_vec();
        let m = CoordinateMap::new(&spec, &basis, RotationChart::exponential([0.0; 3]), &coords).unwrap();
        let aa = metric_blocks(&m).angle_angle;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / spec.norms[i] } else { 0.0 };
                assert!((aa[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_chain_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_map(&mut rng, 3, false);
        let d = m.dim();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // f = Σ w_c q_c² + q_0 q_1 has flat Laplacian 2Σw
        let grad = |q: &[f64]| {
            let mut g: Vec<f64> = q.iter().zip(&w).map(|(x, c)| 2.0 * c * x).collect();
            g[0] += q[1];
            g[1] += q[0];
            g
        };
        let lap = curvilinear_laplacian(&m, grad, 1e-3).unwrap();
        let want: f64 = 2.0 * w.iter().sum::<f64>();
        assert!((lap - want).abs() < 1e-5 * want.abs().max(1.0), "{lap} vs {want}");
    }

    #[test]
    fn potentials_scale_inverse_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_map(&mut rng, 3, false);
        let (a1, a2) = eval_quantum_potentials(&m.spec, &m.body()).unwrap();
        let (b1, b2) = eval_quantum_potentials(&m.spec, &m.body().scaled(2.5)).unwrap();
        assert!((b1 * 6.25 - a1).abs() < 1e-8 * a1.abs());
        assert!((b2 * 6.25 - a2).abs() < 1e-8 * a2.abs());
    }
}
