//! Eckart-frame models at unit side `a = 1`, unit masses, in normal coordinates `δQ_a`.
//!
//! Mode rows are normalized to `ℜ² = 1` (units ħ = m = ω = 1), so that
//! `δR_{αi} = Σ_b Γ_{bαi} δQ_b` and `P_{αi} = Σ_b Γ_{bαi} (1/i)∂_b`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::gaugeops::ExactSpec;
use super::operator::DiffOperator;
use super::surd::{rat, Coef, Surd};
use crate::error::{Error, Result};
use crate::rotation::levi_civita;

#[derive(Clone, Debug)]
pub struct EckartModel {
    pub name: &'static str,
    /// Equilibrium positions at `a = 1`, flat `3N`.
    pub z: Vec<Surd>,
    /// Eckart rows `Γ_{aαi} = ε_{aji} Z_{αj}` with their norms (the principal moments).
    pub spec: ExactSpec,
    /// Vibrational rows `Γ_4 …`, each with `Σ Γ² = 1`.
    pub modes: Vec<Vec<Surd>>,
    pub sigma_sq: Vec<BigRational>,
}

fn n_particles(z: &[Surd]) -> usize {
    z.len() / 3
}

/// `Γ_{aαi} = ε_{aji} Z_{αj}`.
pub fn eckart_rows(z: &[Surd]) -> Vec<Vec<Surd>> {
    let n = n_particles(z);
    (0..3)
        .map(|a| {
            let mut row = vec![Surd::zero(); 3 * n];
            for al in 0..n {
                for i in 0..3 {
                    for j in 0..3 {
                        let e = levi_civita(a, j, i);
                        if e != 0 {
                            row[3 * al + i] = &row[3 * al + i] + &z[3 * al + j].scale(&rat(e, 1));
                        }
                    }
                }
            }
            row
        })
        .collect()
}

/// Hessian of the pairwise-harmonic potential `½ Σ_{α<β} (û_{αβ}·(δR_α − δR_β))²`, `û = Z_α − Z_β` at unit side.
pub fn pair_hessian(z: &[Surd]) -> Vec<Vec<Surd>> {
    let n = n_particles(z);
    let mut h = vec![vec![Surd::zero(); 3 * n]; 3 * n];
    for al in 0..n {
        for be in al + 1..n {
            let u: Vec<Surd> = (0..3).map(|i| &z[3 * al + i] - &z[3 * be + i]).collect();
            for i in 0..3 {
                for j in 0..3 {
                    let uu = &u[i] * &u[j];
                    if uu.is_zero() {
                        continue;
                    }
                    let (ai, aj, bi, bj) = (3 * al + i, 3 * al + j, 3 * be + i, 3 * be + j);
                    h[ai][aj] += &uu;
                    h[bi][bj] += &uu;
                    h[ai][bj] = &h[ai][bj] - &uu;
                    h[bi][aj] = &h[bi][aj] - &uu;
                }
            }
        }
    }
    h
}

fn dot(u: &[Surd], v: &[Surd]) -> Surd {
    let mut s = Surd::zero();
    for (a, b) in u.iter().zip(v) {
        if !a.is_zero() && !b.is_zero() {
            s += &(a * b);
        }
    }
    s
}

fn matvec(h: &[Vec<Surd>], v: &[Surd]) -> Vec<Surd> {
    h.iter().map(|r| dot(r, v)).collect()
}

/// Basis of the nullspace of a rational matrix, in reduced row-echelon order.
pub fn rational_nullspace(m: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][f].clone();
            }
            v
        })
        .collect()
}

/// Gram–Schmidt over the rationals followed by surd normalization.
fn orthonormalize(vs: Vec<Vec<BigRational>>) -> Result<Vec<Vec<Surd>>> {
    let rdot = |u: &[BigRational], v: &[BigRational]| u.iter().zip(v).fold(BigRational::zero(), |s, (a, b)| s + a * b);
    let mut done: Vec<Vec<BigRational>> = Vec::new();
    for mut v in vs {
        for u in &done {
            let c = rdot(&v, u) / rdot(u, u);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= &c * y;
            }
        }
        if rdot(&v, &v).is_zero() {
            return Err(Error::RankDeficient(done.len()));
        }
        done.push(v);
    }
    done.into_iter()
        .map(|v| {
            let inv = Surd::sqrt_rational(&rdot(&v, &v).recip()).ok_or(Error::RankDeficient(0))?;
            Ok(v.into_iter().map(|x| inv.scale(&x)).collect())
        })
        .collect()
}

impl EckartModel {
    /// Equilateral triangle with the normal modes given in closed form.
    pub fn triangle() -> Self {
        let s3 = |r: BigRational| Surd::sqrt_term(r, 3);
        let h = Surd::frac(1, 2);
        let mh = Surd::frac(-1, 2);
        let a = s3(rat(-1, 6)); // −1/(2√3)
        let b = s3(rat(1, 3)); // 1/√3
        let o = Surd::zero();
        let z = vec![mh.clone(), a.clone(), o.clone(), h.clone(), a.clone(), o.clone(), o.clone(), b.clone(), o.clone()];
        let modes = vec![
            vec![h.clone(), a.clone(), o.clone(), mh.clone(), a.clone(), o.clone(), o.clone(), b.clone(), o.clone()],
            vec![a.clone(), mh.clone(), o.clone(), a.clone(), h.clone(), o.clone(), b.clone(), o.clone(), o.clone()],
            vec![mh, a.clone(), o.clone(), h, a, o.clone(), o.clone(), b, o],
        ];
        let spec = ExactSpec::new(vec![BigRational::one(); 3], eckart_rows(&z), true).expect("triangle Eckart rows");
        EckartModel { name: "triangle", z, spec, modes, sigma_sq: vec![rat(3, 2), rat(3, 2), rat(3, 1)] }
    }

    /// Regular tetrahedron; modes from exact Hessian eigenspaces for `σ² ∈ {1, 2, 4}`.
    pub fn tetrahedron() -> Result<Self> {
        let c = Surd::sqrt_term(rat(1, 4), 2); // 1/(2√2)
        let signs = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];
        let z: Vec<Surd> = signs.iter().flat_map(|s| s.iter().map(|&k| c.scale(&rat(k, 1))).collect::<Vec<_>>()).collect();
        let h = pair_hessian(&z);
        let hr: Vec<Vec<BigRational>> = h
            .iter()
            .map(|r| r.iter().map(|x| x.as_rational().ok_or(Error::UnsupportedModel("irrational Hessian".into()))).collect())
            .collect::<Result<_>>()?;
        let mut modes = Vec::new();
        let mut sigma_sq = Vec::new();
        for (ev, mult) in [(1, 2), (2, 3), (4, 1)] {
            let shifted: Vec<Vec<BigRational>> = hr
                .iter()
                .enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(j, x)| if i == j { x - BigRational::from_integer(ev.into()) } else { x.clone() }).collect())
                .collect();
            let ns = rational_nullspace(&shifted);
            if ns.len() != mult {
                return Err(Error::RankDeficient(ns.len()));
            }
            modes.extend(orthonormalize(ns)?);
            sigma_sq.extend(std::iter::repeat(rat(ev, 1)).take(mult));
        }
        let spec = ExactSpec::new(vec![BigRational::one(); 4], eckart_rows(&z), true)?;
        Ok(EckartModel { name: "tetrahedron", z, spec, modes, sigma_sq })
    }

    pub fn n_particles(&self) -> usize {
        n_particles(&self.z)
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Inverse principal moments `1/ℜ̂_a²` at unit side.
    pub fn inverse_moments(&self) -> [BigRational; 3] {
        [0, 1, 2].map(|a| self.spec.norms[a].as_rational().expect("rational norm").recip())
    }

    pub fn sigmas(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.sigma_sq.iter().map(|s| s.to_f64().unwrap_or(f64::NAN).sqrt()).collect()
    }

    /// Exact checks: eigenvectors of the Hessian, orthonormal, orthogonal to gauge and translation rows.
    pub fn check_modes(&self) -> Result<()> {
        let h = pair_hessian(&self.z);
        let n = self.n_particles();
        for (k, v) in self.modes.iter().enumerate() {
            let hv = matvec(&h, v);
            let s = Surd::from_rational(self.sigma_sq[k].clone());
            if hv.iter().zip(v).any(|(x, y)| !(x - &(&s * y)).is_zero()) {
                return Err(Error::InvalidParameter(format!("mode {} is not a Hessian eigenvector", k + 4)));
            }
            for (l, w) in self.modes.iter().enumerate() {
                let want = if k == l { Surd::one() } else { Surd::zero() };
                if dot(v, w) != want {
                    return Err(Error::InvalidParameter(format!("modes {} and {} not orthonormal", k + 4, l + 4)));
                }
            }
            for g in &self.spec.gamma {
                if !dot(v, g).is_zero() {
                    return Err(Error::InvalidParameter(format!("mode {} not orthogonal to a gauge row", k + 4)));
                }
            }
            for i in 0..3 {
                let mut s = Surd::zero();
                for al in 0..n {
                    s += &v[3 * al + i];
                }
                if !s.is_zero() {
                    return Err(Error::InvalidParameter(format!("mode {} moves the centre of mass", k + 4)));
                }
            }
        }
        Ok(())
    }

    pub fn delta_r(&self) -> Vec<DiffOperator> {
        let k = self.n_modes();
        (0..3 * self.n_particles())
            .map(|c| {
                let mut op = DiffOperator::zero(k);
                for (b, m) in self.modes.iter().enumerate() {
                    if !m[c].is_zero() {
                        op = op.add(&DiffOperator::coord(k, b).scale_surd(&m[c]));
                    }
                }
                op
            })
            .collect()
    }

    pub fn momenta(&self) -> Vec<DiffOperator> {
        let k = self.n_modes();
        let minus_i = Coef::imag(Surd::int(-1));
        (0..3 * self.n_particles())
            .map(|c| {
                let mut op = DiffOperator::zero(k);
                for (b, m) in self.modes.iter().enumerate() {
                    if !m[c].is_zero() {
                        op = op.add(&DiffOperator::deriv(k, b).scale(&minus_i.mul_surd(&m[c])));
                    }
                }
                op
            })
            .collect()
    }

    /// `Λ_n = Σ_γ ε_{npq} (Z_{γp} + δR_{γp}) P_{γq}` at unit side.
    pub fn lambda(&self) -> [DiffOperator; 3] {
        let k = self.n_modes();
        let dr = self.delta_r();
        let r: Vec<DiffOperator> = dr
            .iter()
            .zip(&self.z)
            .map(|(d, z)| d.add(&DiffOperator::constant(k, Coef::real(z.clone()))))
            .collect();
        super::gaugeops::lambda_from(&r, &self.momenta(), true)
    }

    /// `Σ_β Γ_{cβj} ε_{jik} δR_{βk}` for each given row `c`, linear in `δQ`.
    pub fn q_of_rows(&self, rows: &[Vec<Surd>]) -> Vec<[DiffOperator; 3]> {
        let k = self.n_modes();
        let dr = self.delta_r();
        rows.iter()
            .map(|g| {
                [0, 1, 2].map(|i| {
                    let mut op = DiffOperator::zero(k);
                    for be in 0..self.n_particles() {
                        for j in 0..3 {
                            for kk in 0..3 {
                                let e = levi_civita(j, i, kk);
                                if e == 0 || g[3 * be + j].is_zero() {
                                    continue;
                                }
                                op = op.add(&dr[3 * be + kk].scale_surd(&g[3 * be + j].scale(&rat(e, 1))));
                            }
                        }
                    }
                    op
                })
            })
            .collect()
    }

    /// `δ𝔔_{ci}` for each vibrational row `c`.
    pub fn delta_q(&self) -> Vec<[DiffOperator; 3]> {
        self.q_of_rows(&self.modes)
    }

    /// `δ𝔔̂_{ai}` for the three gauge rows at unit side: `𝔔 = ℜ̂²/ε² + δ𝔔̂/ε`.
    pub fn gauge_delta_q(&self) -> Vec<[DiffOperator; 3]> {
        self.q_of_rows(&self.spec.gamma)
    }

    /// Equilibrium as a body-frame configuration at unit side.
    pub fn z_config(&self) -> crate::gauge::Configuration {
        let x: Vec<f64> = self.z.iter().map(Surd::to_f64).collect();
        crate::gauge::Configuration::from_flat(&x, crate::gauge::FrameTag::Body)
    }

    /// Mode rows as floats.
    pub fn modes_f64(&self) -> Vec<Vec<f64>> {
        self.modes.iter().map(|m| m.iter().map(Surd::to_f64).collect()).collect()
    }

    /// `Λ_i = Σ_c δ𝔔_{ci} (1/i)∂_c` with `ℜ² = 1`.
    pub fn lambda_from_delta_q(&self) -> [DiffOperator; 3] {
        let k = self.n_modes();
        let dq = self.delta_q();
        let minus_i = Coef::imag(Surd::int(-1));
        [0, 1, 2].map(|i| {
            let mut op = DiffOperator::zero(k);
            for (c, row) in dq.iter().enumerate() {
                op = op.add(&row[i].compose(&DiffOperator::deriv(k, c)).scale(&minus_i));
            }
            op
        })
    }

    /// `𝒱₍₂₎` from the pair potential, rewritten in `δQ`.
    pub fn quadratic_potential(&self) -> DiffOperator {
        let k = self.n_modes();
        let n = self.n_particles();
        let dr = self.delta_r();
        let mut v = DiffOperator::zero(k);
        for al in 0..n {
            for be in al + 1..n {
                let mut lin = DiffOperator::zero(k);
                for i in 0..3 {
                    let u = &self.z[3 * al + i] - &self.z[3 * be + i];
                    if !u.is_zero() {
                        lin = lin.add(&dr[3 * al + i].sub(&dr[3 * be + i]).scale_surd(&u));
                    }
                }
                v = v.add(&lin.compose(&lin));
            }
        }
        v.scale_rational(&rat(1, 2))
    }

    /// `½ Σ σ_a² δQ_a²`.
    pub fn diagonal_potential(&self) -> DiffOperator {
        let k = self.n_modes();
        let mut v = DiffOperator::zero(k);
        for (a, s) in self.sigma_sq.iter().enumerate() {
            let q = DiffOperator::coord(k, a);
            v = v.add(&q.compose(&q).scale_rational(&(s / rat(2, 1))));
        }
        v
    }
}

/// Exact operator identities of the tetrahedral model.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TetrahedronIdentities {
    /// `δ𝔔_{9i} = 0` for the breathing mode.
    pub breathing_delta_q_zero: bool,
    /// `[Λ_i, δQ₉] = 0`.
    pub lambda_breathing_commutes: bool,
    /// `[Λ_i, Σ_{a=4}^{8} δQ_a²] = 0`.
    pub lambda_radius_commutes: bool,
    /// `[2Λ_i, 2Λ_j] = iε_{ijk} 2Λ_k`.
    pub doubled_lambda_closes: bool,
    /// `[Λ_i, 𝒱₍₂₎] ≠ 0` for some `i`.
    pub lambda_potential_noncommuting: bool,
}

impl TetrahedronIdentities {
    pub fn all_hold(&self) -> bool {
        self.breathing_delta_q_zero
            && self.lambda_breathing_commutes
            && self.lambda_radius_commutes
            && self.doubled_lambda_closes
            && self.lambda_potential_noncommuting
    }
}

impl EckartModel {
    /// Index of the breathing mode `Γ₉ ∝ Z`.
    pub fn breathing_mode(&self) -> Option<usize> {
        let zz = dot(&self.z, &self.z);
        self.modes.iter().position(|g| {
            let gz = dot(g, &self.z);
            !gz.is_zero() && &gz * &gz == zz
        })
    }

    pub fn tetrahedron_identities(&self) -> Result<TetrahedronIdentities> {
        let b = self.breathing_mode().ok_or_else(|| Error::UnsupportedModel(format!("{} has no breathing mode", self.name)))?;
        let k = self.n_modes();
        let lam = self.lambda();
        let q9 = DiffOperator::coord(k, b);
        let mut radius = DiffOperator::zero(k);
        for a in (0..k).filter(|&a| a != b) {
            let q = DiffOperator::coord(k, a);
            radius = radius.add(&q.compose(&q));
        }
        let v2 = self.quadratic_potential();
        let two = Coef::int(2);
        let mut closes = true;
        for (i, j, l) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let c = lam[i].scale(&two).commutator(&lam[j].scale(&two))?;
            closes &= c == lam[l].scale(&two).scale(&Coef::i());
        }
        let mut breathing = true;
        let mut radial = true;
        let mut noncommuting = false;
        for l in &lam {
            breathing &= l.commutator(&q9)?.is_zero();
            radial &= l.commutator(&radius)?.is_zero();
            noncommuting |= !l.commutator(&v2)?.is_zero();
        }
        Ok(TetrahedronIdentities {
            breathing_delta_q_zero: self.delta_q()[b].iter().all(DiffOperator::is_zero),
            lambda_breathing_commutes: breathing,
            lambda_radius_commutes: radial,
            doubled_lambda_closes: closes,
            lambda_potential_noncommuting: noncommuting,
        })
    }
}

/// Largest absolute rational coefficient, for diagnostics.
pub fn max_abs(v: &[BigRational]) -> BigRational {
    v.iter().map(|x| x.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_modes_exact() {
        let m = EckartModel::triangle();
        m.check_modes().unwrap();
        assert_eq!(m.spec.norms[0], Surd::frac(1, 2));
        assert_eq!(m.spec.norms[2], Surd::one());
        assert_eq!(m.quadratic_potential(), m.diagonal_potential());
    }

    #[test]
    fn triangle_lambda() {
        let m = EckartModel::triangle();
        let lam = m.lambda();
        assert!(lam[0].is_zero());
        assert!(lam[1].is_zero());
        // (1/i)(δQ₅∂₄ − δQ₄∂₅)
        let mi = Coef::imag(Surd::int(-1));
        let want = DiffOperator::coord(3, 1)
            .compose(&DiffOperator::deriv(3, 0))
            .sub(&DiffOperator::coord(3, 0).compose(&DiffOperator::deriv(3, 1)))
            .scale(&mi);
        assert_eq!(lam[2], want);
        assert_eq!(m.lambda_from_delta_q(), lam);
    }

    #[test]
    fn tetrahedron_modes_and_identities() {
        let m = EckartModel::tetrahedron().unwrap();
        m.check_modes().unwrap();
        assert!(m.spec.norms.iter().all(|x| *x == Surd::one()));
        assert_eq!(m.quadratic_potential(), m.diagonal_potential());
        // dilatation mode ∝ Z
        let g9 = &m.modes[5];
        let zz = dot(&m.z, &m.z);
        let gz = dot(g9, &m.z);
        assert_eq!(&gz * &gz, zz);
        assert!(m.delta_q()[5].iter().all(DiffOperator::is_zero));
        assert_eq!(m.breathing_mode(), Some(5));
        assert!(m.tetrahedron_identities().unwrap().all_hold());
        let lam = m.lambda();
        assert_eq!(m.lambda_from_delta_q(), lam);
        let two = Coef::int(2);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let c = lam[i].scale(&two).commutator(&lam[j].scale(&two)).unwrap();
            assert_eq!(c, lam[k].scale(&two).scale(&Coef::i()));
        }
    }
}
