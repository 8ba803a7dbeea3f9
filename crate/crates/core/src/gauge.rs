//! Linear gauge conditions, the 𝔔/𝒩/𝒥 geometry, basis extension and quantum potentials.
//!
//! Coefficient rows are flat `3N` vectors indexed by `3α + i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation::{eps, Mat3, Vec3};

/// Tolerance for gauge satisfaction (mass-weighted length units).
pub const GAUGE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub masses: Vec<f64>,
    /// Three rows `Γ_{aαi}`, each of length `3N`.
    pub gamma: Vec<Vec<f64>>,
    #[serde(default)]
    pub norms: Vec<f64>,
    #[serde(default)]
    pub translation_invariant: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameTag {
    Lab,
    Body,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<[f64; 3]>,
    pub frame: FrameTag,
}

#[derive(Clone, Debug)]
pub struct GaugeGeometry {
    pub q: Mat3,
    pub n: Mat3,
    /// `None` on a horizon.
    pub ninv: Option<Mat3>,
    pub jac: f64,
    pub det_q: f64,
    pub singular: bool,
}

impl GaugeGeometry {
    pub fn det_sign(&self) -> i8 {
        if self.det_q > 0.0 {
            1
        } else if self.det_q < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// Mass-weighted inner product `Σ m_α u_α·v_α`.
pub fn mdot(masses: &[f64], u: &[f64], v: &[f64]) -> f64 {
    masses
        .iter()
        .enumerate()
        .map(|(a, m)| m * (0..3).map(|i| u[3 * a + i] * v[3 * a + i]).sum::<f64>())
        .sum()
}

impl Configuration {
    pub fn new(positions: Vec<[f64; 3]>, frame: FrameTag) -> Self {
        Configuration { positions, frame }
    }

    pub fn body(positions: Vec<[f64; 3]>) -> Self {
        Self::new(positions, FrameTag::Body)
    }

    pub fn from_flat(x: &[f64], frame: FrameTag) -> Self {
        Self::new(x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(), frame)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    pub fn pos(&self, a: usize) -> Vec3 {
        Vec3::from(self.positions[a])
    }

    /// `{U r_α}` with the given frame tag.
    pub fn rotated(&self, u: &Mat3, frame: FrameTag) -> Self {
        Self::new(self.positions.iter().map(|p| (u * Vec3::from(*p)).into()).collect(), frame)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.positions.iter().map(|p| [c * p[0], c * p[1], c * p[2]]).collect(), self.frame)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.positions.iter().flatten().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("non-finite coordinate".into()))
        }
    }
}

impl GaugeSpec {
    /// Validates rows, fills `ℜ_a²` and checks orthogonality.
    pub fn new(masses: Vec<f64>, gamma: Vec<Vec<f64>>, translation_invariant: bool) -> Result<Self> {
        let mut s = GaugeSpec { masses, gamma, norms: Vec::new(), translation_invariant };
        s.norms = (0..s.gamma.len().min(3)).map(|a| mdot(&s.masses, &s.gamma[a], &s.gamma[a])).collect();
        s.validate()?;
        Ok(s)
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.masses.len();
        if n == 0 {
            return Err(Error::InvalidParameter("no particles".into()));
        }
        if self.masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidParameter("masses must be positive".into()));
        }
        if self.gamma.len() != 3 || self.gamma.iter().any(|r| r.len() != 3 * n) {
            return Err(Error::DimensionMismatch(format!("need 3 rows of length {}", 3 * n)));
        }
        if self.norms.len() != 3 {
            return Err(Error::DimensionMismatch("need 3 norms".into()));
        }
        for a in 0..3 {
            if self.norms[a] <= 0.0 {
                return Err(Error::InvalidParameter(format!("ℜ_{}² must be positive", a + 1)));
            }
            for b in 0..3 {
                let g = mdot(&self.masses, &self.gamma[a], &self.gamma[b]);
                let want = if a == b { self.norms[a] } else { 0.0 };
                let scale = (self.norms[a] * self.norms[b]).sqrt();
                if (g - want).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParameter(format!("rows {} and {} not orthogonal: {g:e}", a + 1, b + 1)));
                }
            }
            if self.translation_invariant {
                for i in 0..3 {
                    let s: f64 = (0..n).map(|al| self.masses[al] * self.gamma[a][3 * al + i]).sum();
                    if s.abs() > 1e-10 * self.norms[a].sqrt() {
                        return Err(Error::InvalidParameter(format!("row {} not translation invariant", a + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_cfg(&self, cfg: &Configuration) -> Result<()> {
        if cfg.n_particles() != self.n_particles() {
            return Err(Error::DimensionMismatch(format!(
                "{} particles in spec, {} in configuration",
                self.n_particles(),
                cfg.n_particles()
            )));
        }
        cfg.check_finite()
    }

    pub fn row(&self, a: usize, alpha: usize) -> Vec3 {
        Vec3::new(self.gamma[a][3 * alpha], self.gamma[a][3 * alpha + 1], self.gamma[a][3 * alpha + 2])
    }

    /// Rotated coefficients `Γ_{aα} → V Γ_{aα}`.
    pub fn rotated(&self, v: &Mat3) -> Self {
        let mut s = self.clone();
        for a in 0..3 {
            for al in 0..self.n_particles() {
                let r = v * self.row(a, al);
                for i in 0..3 {
                    s.gamma[a][3 * al + i] = r[i];
                }
            }
        }
        s
    }
}

/// `𝔖_a = Σ m_α Γ_{aαj} R_{αj}`.
pub fn eval_gauge(spec: &GaugeSpec, cfg: &Configuration) -> Result<[f64; 3]> {
    spec.check_cfg(cfg)?;
    let x = cfg.flat();
    Ok([0, 1, 2].map(|a| mdot(&spec.masses, &spec.gamma[a], &x)))
}

/// `𝔔_{ai} = Σ m_β Γ_{aβj} ε_{jik} R_{βk}`.
pub fn q_matrix(spec: &GaugeSpec, positions: &[[f64; 3]]) -> Mat3 {
    let mut q = Mat3::zeros();
    for (b, r) in positions.iter().enumerate() {
        let m = spec.masses[b];
        for a in 0..3 {
            for i in 0..3 {
                let mut s = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        s += spec.gamma[a][3 * b + j] * eps(j, i, k) * r[k];
                    }
                }
                q[(a, i)] += m * s;
            }
        }
    }
    q
}

/// Relative threshold on `𝒥` below which the geometry is flagged singular.
pub const HORIZON_TOL: f64 = 1e-12;

pub fn eval_geometry(spec: &GaugeSpec, cfg: &Configuration) -> Result<GaugeGeometry> {
    spec.check_cfg(cfg)?;
    let q = q_matrix(spec, &cfg.positions);
    let mut n = Mat3::zeros();
    for h in 0..3 {
        for i in 0..3 {
            n[(h, i)] = (0..3).map(|c| q[(c, h)] * q[(c, i)] / spec.norms[c]).sum();
        }
    }
    let det_q = q.determinant();
    let prod: f64 = spec.norms.iter().map(|r| r.sqrt()).product();
    let jac = det_q.abs() / prod;
    // 𝒥 carries the dimension of (√m R)³
    let x = cfg.flat();
    let scale = mdot(&spec.masses, &x, &x).powf(1.5);
    let singular = det_q == 0.0 || jac <= HORIZON_TOL * scale;
    let ninv = if singular {
        None
    } else {
        q.try_inverse().map(|qi| {
            let mut ni = Mat3::zeros();
            for j in 0..3 {
                for k in 0..3 {
                    ni[(j, k)] = (0..3).map(|d| spec.norms[d] * qi[(j, d)] * qi[(k, d)]).sum();
                }
            }
            ni
        })
    };
    let singular = singular || ninv.is_none();
    Ok(GaugeGeometry { q, n, ninv, jac: if singular { 0.0 } else { jac }, det_q, singular })
}

/// Full set of `3N` coefficient rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtendedBasis {
    pub masses: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// `ℜ_a²` for every row.
    pub norm_sq: Vec<f64>,
    /// Common `ℜ²` for the rows beyond the gauge rows.
    pub common_norm_sq: f64,
    pub translation_invariant: bool,
}

impl ExtendedBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Index range of the internal coordinates `Q_a`, 0-based (rows 4..3N or 4..3N−3).
    pub fn internal_range(&self) -> std::ops::Range<usize> {
        let end = if self.translation_invariant { self.dim() - 3 } else { self.dim() };
        3..end
    }

    /// Largest deviation from `Σ_a (m_α m_β/ℜ_a²) Γ_{aαi} Γ_{aβj} = m_α δ δ`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                let (ax, ay) = (x / 3, y / 3);
                let s: f64 = (0..d)
                    .map(|a| self.masses[ax] * self.masses[ay] / self.norm_sq[a] * self.rows[a][x] * self.rows[a][y])
                    .sum();
                let want = if x == y { self.masses[ax] } else { 0.0 };
                worst = worst.max((s - want).abs());
            }
        }
        worst
    }

    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let g = mdot(&self.masses, &self.rows[a], &self.rows[b]);
                let want = if a == b { self.norm_sq[a] } else { 0.0 };
                worst = worst.max((g - want).abs() / (self.norm_sq[a] * self.norm_sq[b]).sqrt());
            }
        }
        worst
    }
}

/// Mass-weighted Gram–Schmidt completion of the gauge rows.
///
/// Seeds already orthogonal to the gauge rows keep their direction; canonical
/// axis vectors fill the rest.
pub fn extend_basis(spec: &GaugeSpec, seeds: &[Vec<f64>], norm_sq: f64) -> Result<ExtendedBasis> {
    spec.validate()?;
    if !(norm_sq > 0.0) {
        return Err(Error::InvalidParameter("ℜ² must be positive".into()));
    }
    let n = spec.n_particles();
    let dim = 3 * n;
    let m = &spec.masses;
    let mut rows: Vec<Vec<f64>> = spec.gamma.clone();
    let mut norms: Vec<f64> = spec.norms.clone();
    let mut tail: Vec<Vec<f64>> = Vec::new();
    if spec.translation_invariant {
        let big_m = spec.total_mass();
        for i in 0..3 {
            let mut r = vec![0.0; dim];
            for al in 0..n {
                r[3 * al + i] = (norm_sq / big_m).sqrt();
            }
            tail.push(r);
        }
    }
    let target = dim - tail.len();
    if seeds.len() > target - 3 {
        return Err(Error::RankDeficient(target - 3));
    }
    let project = |v: &mut Vec<f64>, basis: &[Vec<f64>], norms: &[f64]| {
        for _ in 0..2 {
            for (b, nb) in basis.iter().zip(norms) {
                let c = mdot(m, v, b) / nb;
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
    };
    let fixed: Vec<Vec<f64>> = rows.iter().chain(tail.iter()).cloned().collect();
    let fixed_norms: Vec<f64> = norms.iter().copied().chain(std::iter::repeat(norm_sq).take(tail.len())).collect();
    let mut extra: Vec<Vec<f64>> = Vec::new();
    for (si, s) in seeds.iter().enumerate() {
        if s.len() != dim {
            return Err(Error::DimensionMismatch(format!("seed {si} has length {}", s.len())));
        }
        let before = mdot(m, s, s).sqrt();
        let mut v = s.clone();
        let all: Vec<Vec<f64>> = fixed.iter().chain(extra.iter()).cloned().collect();
        let all_n: Vec<f64> = fixed_norms.iter().copied().chain(std::iter::repeat(norm_sq).take(extra.len())).collect();
        project(&mut v, &all, &all_n);
        let after = mdot(m, &v, &v).sqrt();
        if !(after > 1e-8 * before.max(1e-300)) {
            return Err(Error::RankDeficient(si));
        }
        let c = norm_sq.sqrt() / after;
        extra.push(v.iter().map(|x| x * c).collect());
    }
    let mut axis = 0;
    while extra.len() < target - 3 && axis < dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        axis += 1;
        let all: Vec<Vec<f64>> = fixed.iter().chain(extra.iter()).cloned().collect();
        let all_n: Vec<f64> = fixed_norms.iter().copied().chain(std::iter::repeat(norm_sq).take(extra.len())).collect();
        project(&mut v, &all, &all_n);
        let after = mdot(m, &v, &v).sqrt();
        if after > 1e-6 * m[(axis - 1) / 3].sqrt() {
            let c = norm_sq.sqrt() / after;
            extra.push(v.iter().map(|x| x * c).collect());
        }
    }
    if extra.len() != target - 3 {
        return Err(Error::RankDeficient(extra.len()));
    }
    rows.extend(extra);
    rows.extend(tail);
    norms.resize(dim, norm_sq);
    Ok(ExtendedBasis {
        masses: m.clone(),
        rows,
        norm_sq: norms,
        common_norm_sq: norm_sq,
        translation_invariant: spec.translation_invariant,
    })
}

/// `Q_a = Σ (m/ℜ_a²) Γ_a·R` for every row.
pub fn project_all(basis: &ExtendedBasis, cfg: &Configuration) -> Result<Vec<f64>> {
    if cfg.n_particles() != basis.masses.len() {
        return Err(Error::DimensionMismatch("particle count".into()));
    }
    cfg.check_finite()?;
    let x = cfg.flat();
    Ok(basis.rows.iter().zip(&basis.norm_sq).map(|(r, n)| mdot(&basis.masses, r, &x) / n).collect())
}

/// Internal coordinates of a gauge-satisfying configuration.
pub fn project_coords(basis: &ExtendedBasis, cfg: &Configuration) -> Result<Vec<f64>> {
    let q = project_all(basis, cfg)?;
    let range = basis.internal_range();
    for (a, v) in q.iter().enumerate() {
        if range.contains(&a) {
            continue;
        }
        // 𝔖_a = ℜ_a² Q_a for gauge rows; centre of mass for the tail rows
        let viol = (v * basis.norm_sq[a].sqrt()).abs();
        if viol > GAUGE_TOL {
            return Err(Error::InconsistentConfiguration(viol));
        }
    }
    Ok(q[range].to_vec())
}

/// Inverse of [`project_coords`]: `R = Σ_a Q_a Γ_a`.
pub fn embed_coords(basis: &ExtendedBasis, q: &[f64]) -> Result<Configuration> {
    let range = basis.internal_range();
    if q.len() != range.len() {
        return Err(Error::DimensionMismatch(format!("{} coordinates, need {}", q.len(), range.len())));
    }
    let mut x = vec![0.0; basis.rows[0].len()];
    for (qa, a) in q.iter().zip(range) {
        for (xi, g) in x.iter_mut().zip(&basis.rows[a]) {
            *xi += qa * g;
        }
    }
    Ok(Configuration::from_flat(&x, FrameTag::Body))
}

/// Eckart gauge `Γ_{aαi} = ε_{aji} Z_{αj}` for an equilibrium in principal axes.
pub fn eckart_gauge(equilibrium: &Configuration, masses: &[f64]) -> Result<GaugeSpec> {
    let n = masses.len();
    if equilibrium.n_particles() != n {
        return Err(Error::DimensionMismatch("masses vs positions".into()));
    }
    equilibrium.check_finite()?;
    let big_m: f64 = masses.iter().sum();
    let scale: f64 = equilibrium.positions.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..3 {
        let c: f64 = (0..n).map(|a| masses[a] * equilibrium.positions[a][i]).sum();
        if c.abs() > 1e-8 * big_m * scale {
            return Err(Error::InvalidParameter(format!("centre of mass off origin: {c:e}")));
        }
    }
    let mut second = Mat3::zeros();
    for (a, p) in equilibrium.positions.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                second[(i, j)] += masses[a] * p[i] * p[j];
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            if i != j && second[(i, j)].abs() > 1e-8 * big_m * scale * scale {
                return Err(Error::PrincipalAxes(second[(i, j)]));
            }
        }
    }
    let tr = second.trace();
    for i in 0..3 {
        if (tr - second[(i, i)]).abs() <= 1e-12 * tr.max(1e-300) {
            return Err(Error::UnsupportedConfiguration("singular inertia tensor".into()));
        }
    }
    let mut gamma = vec![vec![0.0; 3 * n]; 3];
    for (a, row) in gamma.iter_mut().enumerate() {
        for (al, p) in equilibrium.positions.iter().enumerate() {
            for i in 0..3 {
                row[3 * al + i] = (0..3).map(|j| eps(a, j, i) * p[j]).sum();
            }
        }
    }
    GaugeSpec::new(masses.to_vec(), gamma, true)
}

/// `(𝒱₁, 𝒱₂)` at a configuration off the horizon.
pub fn eval_quantum_potentials(spec: &GaugeSpec, cfg: &Configuration) -> Result<(f64, f64)> {
    let g = eval_geometry(spec, cfg)?;
    let ninv = match (g.singular, g.ninv) {
        (false, Some(ni)) => ni,
        _ => return Err(Error::Horizon(g.det_q)),
    };
    let qi = g.q.try_inverse().ok_or(Error::Horizon(g.det_q))?;
    let n = spec.n_particles();
    let m = &spec.masses;
    // A_α[l'][l] = Σ_c 𝔔⁻¹_{l'c} Γ_{cαl}
    let amat: Vec<Mat3> = (0..n)
        .map(|al| Mat3::from_fn(|lp, l| (0..3).map(|c| qi[(lp, c)] * spec.gamma[c][3 * al + l]).sum()))
        .collect();
    let mut v1 = 0.0;
    for al in 0..n {
        let a = &amat[al];
        for lp in 0..3 {
            for l in 0..3 {
                for mm in 0..3 {
                    for k in 0..3 {
                        let mut e = 0.0;
                        for p in 0..3 {
                            e += eps(k, lp, p) * eps(p, l, mm);
                        }
                        if e != 0.0 {
                            v1 += m[al] * a[(lp, l)] * a[(mm, k)] * e;
                        }
                    }
                }
            }
        }
    }
    v1 *= -0.125;

    // B_{βγ}[g][n] = Σ_a 𝔔⁻¹_{ga} m_β Γ_{aβn}; X[l'][n] = δδ − ε_{l'gs} R_{γs} B[g][n]
    let r = &cfg.positions;
    let mut v2 = 0.0;
    for be in 0..n {
        for ga in 0..n {
            let d = if be == ga { 1.0 } else { 0.0 };
            let x = Mat3::from_fn(|lp, nn| {
                let mut s = if lp == nn { d } else { 0.0 };
                for gg in 0..3 {
                    for ss in 0..3 {
                        let e = eps(lp, gg, ss);
                        if e != 0.0 {
                            s -= e * r[ga][ss] * m[be] * amat[be][(gg, nn)];
                        }
                    }
                }
                s
            });
            // Y[n'][l] = δδ − ε_{lmp} R_{βp} Σ_b 𝔔⁻¹_{mb} m_γ Γ_{bγn'}
            let y = Mat3::from_fn(|np, l| {
                let mut s = if np == l { d } else { 0.0 };
                for mm in 0..3 {
                    for p in 0..3 {
                        let e = eps(l, mm, p);
                        if e != 0.0 {
                            s -= e * r[be][p] * m[ga] * amat[ga][(mm, np)];
                        }
                    }
                }
                s
            });
            for nn in 0..3 {
                for l in 0..3 {
                    for k in 0..3 {
                        let e1 = eps(nn, l, k);
                        if e1 == 0.0 {
                            continue;
                        }
                        for h in 0..3 {
                            for lp in 0..3 {
                                for np in 0..3 {
                                    let e2 = eps(h, lp, np);
                                    if e2 != 0.0 {
                                        v2 += e1 * ninv[(k, h)] * e2 * x[(lp, nn)] * y[(np, l)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    v2 *= -0.125;
    Ok((v1, v2))
}

/// The axis gauge `Γ_{11Y} = Γ_{21Z} = Γ_{32Y} = 1` for `N ≥ 2` particles.
pub fn axis_gauge(masses: &[f64]) -> Result<GaugeSpec> {
    let n = masses.len();
    if n < 2 {
        return Err(Error::InvalidParameter("axis gauge needs two particles".into()));
    }
    let mut gamma = vec![vec![0.0; 3 * n]; 3];
    gamma[0][1] = 1.0;
    gamma[1][2] = 1.0;
    gamma[2][4] = 1.0;
    GaugeSpec::new(masses.to_vec(), gamma, false)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rotation::random_rotation;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spec<R: Rng>(rng: &mut R, n: usize, ti: bool) -> GaugeSpec {
        let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let big_m: f64 = masses.iter().sum();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        while rows.len() < 3 {
            let mut v: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if ti {
                for i in 0..3 {
                    let c: f64 = (0..n).map(|a| masses[a] * v[3 * a + i]).sum::<f64>() / big_m;
                    for a in 0..n {
                        v[3 * a + i] -= c;
                    }
                }
            }
            for r in &rows {
                let c = mdot(&masses, &v, r) / mdot(&masses, r, r);
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= c * y;
                }
            }
            if mdot(&masses, &v, &v) > 1e-3 {
                rows.push(v);
            }
        }
        GaugeSpec::new(masses, rows, ti).unwrap()
    }

    fn random_cfg<R: Rng>(rng: &mut R, n: usize) -> Configuration {
        Configuration::body((0..n).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect())
    }

    fn triangle(a: f64) -> Configuration {
        let s3 = 3f64.sqrt();
        Configuration::body(vec![[-a / 2.0, -a / (2.0 * s3), 0.0], [a / 2.0, -a / (2.0 * s3), 0.0], [0.0, a / s3, 0.0]])
    }

    #[test]
    fn axis_gauge_examples() {
        let spec = axis_gauge(&[1.0, 1.0]).unwrap();
        let c = Configuration::body(vec![[1.0, 0.0, 0.0], [1.0, 0.0, -1.0]]);
        assert_eq!(eval_gauge(&spec, &c).unwrap(), [0.0, 0.0, 0.0]);
        let c0 = Configuration::body(vec![[0.0; 3]; 2]);
        assert_eq!(eval_gauge(&spec, &c0).unwrap(), [0.0, 0.0, 0.0]);
        let c1 = Configuration::body(vec![[0.0, 1.0, 0.0], [0.0; 3]]);
        assert_eq!(eval_gauge(&spec, &c1).unwrap()[0], 1.0);
        let bad = Configuration::body(vec![[0.0; 3]; 3]);
        assert!(matches!(eval_gauge(&spec, &bad), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn axis_gauge_determinant() {
        let spec = axis_gauge(&[1.0, 1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut c = random_cfg(&mut rng, 3);
            // impose the gauge: R₁ on the X axis, R₂ in the X–Z plane
            c.positions[0][1] = 0.0;
            c.positions[0][2] = 0.0;
            c.positions[1][1] = 0.0;
            let g = eval_geometry(&spec, &c).unwrap();
            let want = -c.positions[0][0].powi(2) * c.positions[1][2];
            assert!((g.det_q - want).abs() < 1e-12 * (1.0 + want.abs()), "{} vs {want}", g.det_q);
        }
        let z = eval_geometry(&spec, &Configuration::body(vec![[0.0; 3]; 3])).unwrap();
        assert_eq!(z.q, Mat3::zeros());
        assert_eq!(z.jac, 0.0);
        // particle 1 at the origin: frame undefined
        let c = Configuration::body(vec![[0.0; 3], [0.3, 0.1, -0.7], [1.0, 2.0, 3.0]]);
        let g = eval_geometry(&spec, &c).unwrap();
        assert!(g.singular && g.jac == 0.0);
    }

    #[test]
    fn eckart_triangle() {
        let z = triangle(2.0);
        let spec = eckart_gauge(&z, &[1.0; 3]).unwrap();
        assert!((spec.norms[0] - 2.0).abs() < 1e-12);
        assert!((spec.norms[1] - 2.0).abs() < 1e-12);
        assert!((spec.norms[2] - 4.0).abs() < 1e-12);
        let g = eval_geometry(&spec, &z).unwrap();
        for a in 0..3 {
            for i in 0..3 {
                let want = if a == i { spec.norms[a] } else { 0.0 };
                assert!((g.q[(a, i)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eckart_tetrahedron_and_errors() {
        let a = 1.5;
        let c = a / (2.0 * 2f64.sqrt());
        let z = Configuration::body(vec![[c, c, c], [c, -c, -c], [-c, c, -c], [-c, -c, c]]);
        let spec = eckart_gauge(&z, &[1.0; 4]).unwrap();
        for r in &spec.norms {
            assert!((r - a * a).abs() < 1e-12);
        }
        let tilted = Configuration::body(vec![[1.0, 1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(eckart_gauge(&tilted, &[1.0; 3]), Err(Error::PrincipalAxes(_))));
        let line = Configuration::body(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert!(matches!(eckart_gauge(&line, &[1.0; 2]), Err(Error::UnsupportedConfiguration(_))));
    }

    #[test]
    fn triangle_modes_complete_the_basis() {
        let z = triangle(1.0);
        let spec = eckart_gauge(&z, &[1.0; 3]).unwrap();
        let (h, s3) = (0.5, 1.0 / (2.0 * 3f64.sqrt()));
        let seeds = vec![
            vec![h, -s3, 0.0, -h, -s3, 0.0, 0.0, 2.0 * s3, 0.0],
            vec![-s3, -h, 0.0, -s3, h, 0.0, 2.0 * s3, 0.0, 0.0],
            vec![-h, -s3, 0.0, h, -s3, 0.0, 0.0, 2.0 * s3, 0.0],
        ];
        let b = extend_basis(&spec, &seeds, 1.0).unwrap();
        assert!(b.completeness_residual() <= 1e-9);
        for (k, s) in seeds.iter().enumerate() {
            for (x, y) in b.rows[3 + k].iter().zip(s) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let m3 = 3f64.sqrt();
        for i in 0..3 {
            for al in 0..3 {
                assert!((b.rows[6 + i][3 * al + i] - 1.0 / m3).abs() < 1e-14);
            }
        }
        // pure mode 4 projects to δQ₄ = 1
        let q = project_coords(&b, &Configuration::from_flat(&seeds[0], FrameTag::Body)).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-12 && q[1].abs() < 1e-12 && q[2].abs() < 1e-12);
        let dup = vec![seeds[0].clone(), seeds[0].clone()];
        assert!(matches!(extend_basis(&spec, &dup, 1.0), Err(Error::RankDeficient(1))));
    }

    #[test]
    fn gauge_violation_rejected() {
        let spec = axis_gauge(&[1.0, 2.0, 1.0]).unwrap();
        let b = extend_basis(&spec, &[], 1.0).unwrap();
        let c = Configuration::body(vec![[1.0, 0.5, 0.0], [0.0; 3], [0.0; 3]]);
        assert!(matches!(project_coords(&b, &c), Err(Error::InconsistentConfiguration(_))));
        let q = project_coords(&b, &Configuration::body(vec![[0.0; 3]; 3])).unwrap();
        assert!(q.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn quantum_potentials_scale_inverse_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..5 {
            let spec = random_spec(&mut rng, n, n > 2);
            let c = random_cfg(&mut rng, n);
            let (a1, a2) = eval_quantum_potentials(&spec, &c).unwrap();
            let (b1, b2) = eval_quantum_potentials(&spec, &c.scaled(2.5)).unwrap();
            assert!((b1 * 6.25 - a1).abs() <= 1e-8 * a1.abs().max(1e-12));
            assert!((b2 * 6.25 - a2).abs() <= 1e-8 * a2.abs().max(1e-12));
        }
        let spec = axis_gauge(&[1.0; 3]).unwrap();
        let c = Configuration::body(vec![[0.0; 3], [1.0, 2.0, 3.0], [1.0, 1.0, 1.0]]);
        assert!(matches!(eval_quantum_potentials(&spec, &c), Err(Error::Horizon(_))));
    }

    #[test]
    fn rotational_covariance_of_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let spec = random_spec(&mut rng, 3, false);
            let c = random_cfg(&mut rng, 3);
            let v = random_rotation(&mut rng);
            let q = eval_geometry(&spec, &c).unwrap().q;
            let qr = eval_geometry(&spec.rotated(&v), &c.rotated(&v, FrameTag::Body)).unwrap().q;
            assert!((qr - q * v.transpose()).norm() < 1e-10 * (1.0 + q.norm()));
        }
    }

    proptest! {
        #[test]
        fn ninv_matches_direct_inverse(seed in 0u64..500, n in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random_spec(&mut rng, n, n > 2 && seed % 2 == 0);
            let c = random_cfg(&mut rng, n);
            let g = eval_geometry(&spec, &c).unwrap();
            let x = c.flat();
            prop_assume!(g.jac > 1e-4 * mdot(&spec.masses, &x, &x).powf(1.5));
            let direct = g.n.try_inverse().unwrap();
            let ni = g.ninv.unwrap();
            prop_assert!((direct - ni).norm() <= 1e-9 * ni.norm().max(1.0));
            let prod: f64 = spec.norms.iter().map(|r| r.sqrt()).product();
            prop_assert!((g.n.determinant().sqrt() - g.jac).abs() <= 1e-9 * g.jac.max(1e-12) * 1e3 + 1e-12 * prod);
        }

        #[test]
        fn project_embed_round_trip(seed in 0u64..500, n in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ti = n > 2;
            let spec = random_spec(&mut rng, n, ti);
            let b = extend_basis(&spec, &[], 1.7).unwrap();
            prop_assert!(b.completeness_residual() <= 1e-9);
            for a in 3..b.dim() - if ti { 3 } else { 0 } {
                for i in 0..3 {
                    if ti {
                        let s: f64 = (0..n).map(|al| b.masses[al] * b.rows[a][3 * al + i]).sum();
                        prop_assert!(s.abs() < 1e-10);
                    }
                }
            }
            let q: Vec<f64> = b.internal_range().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = embed_coords(&b, &q).unwrap();
            let s = eval_gauge(&spec, &c).unwrap();
            prop_assert!(s.iter().all(|v| v.abs() < 1e-10));
            let back = project_coords(&b, &c).unwrap();
            let c2 = embed_coords(&b, &back).unwrap();
            for (x, y) in c.flat().iter().zip(c2.flat()) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }
}
