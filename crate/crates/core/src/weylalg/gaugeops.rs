//! Exact gauge specs and the operators `P_{αi}`, `Λ_i`, `𝔔_{ai}`, `𝔖_a` built from them.
//!
//! Coordinates are the `3N` components `R_{αi}`, index `3α + i`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use super::operator::DiffOperator;
use super::surd::{Coef, Surd};
use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;
use crate::rotation::levi_civita;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSpec {
    pub masses: Vec<BigRational>,
    /// Three rows of length `3N`.
    pub gamma: Vec<Vec<Surd>>,
    /// `ℜ_a²`, rational.
    pub norms: Vec<Surd>,
    pub translation_invariant: bool,
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn mdot_exact(m: &[BigRational], u: &[Surd], v: &[Surd]) -> Surd {
    let mut s = Surd::zero();
    for (k, (a, b)) in u.iter().zip(v).enumerate() {
        if a.is_zero() || b.is_zero() {
            continue;
        }
        s += &(a * b).scale(&m[k / 3]);
    }
    s
}

impl ExactSpec {
    pub fn new(masses: Vec<BigRational>, gamma: Vec<Vec<Surd>>, translation_invariant: bool) -> Result<Self> {
        let norms: Vec<Surd> = gamma.iter().map(|r| mdot_exact(&masses, r, r)).collect();
        let s = ExactSpec { masses, gamma, norms, translation_invariant };
        s.validate()?;
        Ok(s)
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn n_coords(&self) -> usize {
        3 * self.masses.len()
    }

    pub fn total_mass(&self) -> BigRational {
        self.masses.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    /// Exact orthogonality, rational norms and (optionally) translation invariance.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_particles();
        if self.gamma.len() != 3 || self.gamma.iter().any(|r| r.len() != 3 * n) {
            return Err(Error::DimensionMismatch("need 3 rows of length 3N".into()));
        }
        for a in 0..3 {
            if self.norms[a].as_rational().map_or(true, |r| r <= BigRational::zero()) {
                return Err(Error::InvalidParameter(format!("ℜ_{}² must be a positive rational", a + 1)));
            }
            for b in 0..a {
                if !mdot_exact(&self.masses, &self.gamma[a], &self.gamma[b]).is_zero() {
                    return Err(Error::InvalidParameter(format!("rows {} and {} not orthogonal", b + 1, a + 1)));
                }
            }
            if self.translation_invariant {
                for i in 0..3 {
                    let mut s = Surd::zero();
                    for al in 0..n {
                        s += &self.gamma[a][3 * al + i].scale(&self.masses[al]);
                    }
                    if !s.is_zero() {
                        return Err(Error::InvalidParameter(format!("row {} not translation invariant", a + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn inv_norm(&self, a: usize) -> Surd {
        self.norms[a].inv_rational().expect("validated rational norm")
    }

    pub fn to_gauge_spec(&self) -> Result<GaugeSpec> {
        use num_traits::ToPrimitive;
        let masses = self.masses.iter().map(|m| m.to_f64().unwrap_or(f64::NAN)).collect();
        let gamma = self.gamma.iter().map(|r| r.iter().map(Surd::to_f64).collect()).collect();
        GaugeSpec::new(masses, gamma, self.translation_invariant)
    }
}

/// Random integer rows made orthogonal by exact (unnormalized) Gram–Schmidt.
pub fn random_rational_spec<R: Rng + ?Sized>(rng: &mut R, n: usize, translation_invariant: bool) -> ExactSpec {
    let masses: Vec<BigRational> = (0..n).map(|_| int(rng.gen_range(1..5))).collect();
    let big_m = masses.iter().fold(BigRational::zero(), |a, b| a + b);
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let dot = |u: &[BigRational], v: &[BigRational]| -> BigRational {
        u.iter().zip(v).enumerate().fold(BigRational::zero(), |s, (k, (a, b))| s + &masses[k / 3] * a * b)
    };
    while rows.len() < 3 {
        let mut v: Vec<BigRational> = (0..3 * n).map(|_| int(rng.gen_range(-3..4))).collect();
        if translation_invariant {
            for i in 0..3 {
                let c = (0..n).fold(BigRational::zero(), |s, a| s + &masses[a] * &v[3 * a + i]) / &big_m;
                for a in 0..n {
                    v[3 * a + i] -= &c;
                }
            }
        }
        for r in &rows {
            let c = dot(&v, r) / dot(r, r);
            for (x, y) in v.iter_mut().zip(r) {
                *x -= &c * y;
            }
        }
        if !dot(&v, &v).is_zero() {
            rows.push(v);
        }
    }
    let gamma = rows.into_iter().map(|r| r.into_iter().map(Surd::from_rational).collect()).collect();
    ExactSpec::new(masses, gamma, translation_invariant).expect("constructed orthogonal")
}

/// The axis gauge with unit coefficients.
pub fn exact_axis_gauge(masses: Vec<BigRational>) -> Result<ExactSpec> {
    let n = masses.len();
    let mut gamma = vec![vec![Surd::zero(); 3 * n]; 3];
    gamma[0][1] = Surd::one();
    gamma[1][2] = Surd::one();
    gamma[2][4] = Surd::one();
    ExactSpec::new(masses, gamma, false)
}

/// `P_{αj}` for every `(α, j)`, in the `R` coordinates.
pub fn momentum_operators(spec: &ExactSpec) -> Vec<DiffOperator> {
    let d = spec.n_coords();
    let minus_i = Coef::imag(Surd::int(-1));
    let inv_m = spec.total_mass().recip();
    // G_a = Σ_β Γ_{aβk} (1/i) ∂_{βk}
    let g: Vec<DiffOperator> = (0..3)
        .map(|a| {
            let mut op = DiffOperator::zero(d);
            for k in 0..d {
                if !spec.gamma[a][k].is_zero() {
                    op = op.add(&DiffOperator::deriv(d, k).scale(&minus_i.mul_surd(&spec.gamma[a][k])));
                }
            }
            op
        })
        .collect();
    let cm: Vec<DiffOperator> = (0..3)
        .map(|i| {
            let mut op = DiffOperator::zero(d);
            for al in 0..spec.n_particles() {
                op = op.add(&DiffOperator::deriv(d, 3 * al + i).scale(&minus_i));
            }
            op
        })
        .collect();
    (0..d)
        .map(|k| {
            let al = k / 3;
            let mut p = DiffOperator::deriv(d, k).scale(&minus_i);
            for a in 0..3 {
                let c = &spec.gamma[a][k] * &spec.inv_norm(a);
                if !c.is_zero() {
                    p = p.sub(&g[a].scale_surd(&c.scale(&spec.masses[al])));
                }
            }
            if spec.translation_invariant {
                p = p.sub(&cm[k % 3].scale_rational(&(&spec.masses[al] * &inv_m)));
            }
            p
        })
        .collect()
}

/// `R_{αi}` as multiplication operators.
pub fn position_operators(spec: &ExactSpec) -> Vec<DiffOperator> {
    let d = spec.n_coords();
    (0..d).map(|k| DiffOperator::coord(d, k)).collect()
}

/// `Λ_n = Σ_γ ε_{npq} R_{γp} P_{γq}` from position and momentum operators.
pub fn lambda_from(r: &[DiffOperator], p: &[DiffOperator], right_momentum: bool) -> [DiffOperator; 3] {
    let d = r[0].n_coords();
    let n = r.len() / 3;
    [0, 1, 2].map(|nn| {
        let mut op = DiffOperator::zero(d);
        for ga in 0..n {
            for pp in 0..3 {
                for qq in 0..3 {
                    let e = levi_civita(nn, pp, qq);
                    if e == 0 {
                        continue;
                    }
                    let (a, b) = (&r[3 * ga + pp], &p[3 * ga + qq]);
                    let t = if right_momentum { a.compose(b) } else { b.compose(a) };
                    op.add_scaled(&t, &Coef::int(e));
                }
            }
        }
        op
    })
}

/// Residual angular momentum in the `R` coordinates.
pub fn residual_angular_momentum(spec: &ExactSpec) -> [DiffOperator; 3] {
    lambda_from(&position_operators(spec), &momentum_operators(spec), true)
}

/// `𝔔_{ai}` as multiplication operators (linear in `R`).
pub fn q_operators(spec: &ExactSpec) -> Vec<Vec<DiffOperator>> {
    let d = spec.n_coords();
    (0..3)
        .map(|a| {
            (0..3)
                .map(|i| {
                    let mut op = DiffOperator::zero(d);
                    for be in 0..spec.n_particles() {
                        for j in 0..3 {
                            for k in 0..3 {
                                let e = levi_civita(j, i, k);
                                let g = &spec.gamma[a][3 * be + j];
                                if e == 0 || g.is_zero() {
                                    continue;
                                }
                                let c = g.scale(&(&spec.masses[be] * int(e)));
                                op = op.add(&DiffOperator::coord(d, 3 * be + k).scale_surd(&c));
                            }
                        }
                    }
                    op
                })
                .collect()
        })
        .collect()
}

/// `𝔖_a(X) = Σ m_α Γ_{aαj} X_{αj}` for any list of operators `X`.
pub fn gauge_of(spec: &ExactSpec, x: &[DiffOperator], divide_by_mass: bool) -> [DiffOperator; 3] {
    let d = spec.n_coords();
    [0, 1, 2].map(|a| {
        let mut op = DiffOperator::zero(d);
        for k in 0..d {
            let g = &spec.gamma[a][k];
            if g.is_zero() {
                continue;
            }
            let w = if divide_by_mass { g.clone() } else { g.scale(&spec.masses[k / 3]) };
            op = op.add(&x[k].scale_surd(&w));
        }
        op
    })
}

/// Right side of `[R_{αi}, P_{βj}]`, as a constant.
pub fn expected_rp(spec: &ExactSpec, k: usize, l: usize) -> Coef {
    let i = k % 3;
    let (be, j) = (l / 3, l % 3);
    let mut s = if k == l { Surd::one() } else { Surd::zero() };
    if spec.translation_invariant && i == j {
        s = &s - &Surd::from_rational(&spec.masses[be] / spec.total_mass());
    }
    for a in 0..3 {
        let t = &(&spec.gamma[a][k] * &spec.gamma[a][l]) * &spec.inv_norm(a);
        s = &s - &t.scale(&spec.masses[be]);
    }
    Coef::imag(s)
}

/// Outcome of the exact commutator audit on one spec.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommutatorAudit {
    pub rp_checked: usize,
    pub rp_failures: usize,
    pub pp_failures: usize,
    pub gauge_momenta_zero: bool,
    pub total_momentum_zero: bool,
    pub lambda_gauge_commutes: bool,
    pub lambda_ordering_free: bool,
}

impl CommutatorAudit {
    pub fn passed(&self) -> bool {
        self.rp_failures == 0
            && self.pp_failures == 0
            && self.gauge_momenta_zero
            && self.total_momentum_zero
            && self.lambda_gauge_commutes
            && self.lambda_ordering_free
    }
}

pub fn audit_commutators(spec: &ExactSpec) -> Result<CommutatorAudit> {
    let r = position_operators(spec);
    let p = momentum_operators(spec);
    let d = spec.n_coords();
    let mut out = CommutatorAudit::default();
    for k in 0..d {
        for l in 0..d {
            let c = r[k].commutator(&p[l])?;
            out.rp_checked += 1;
            if c != DiffOperator::constant(d, expected_rp(spec, k, l)) {
                out.rp_failures += 1;
            }
            if l > k && !p[k].commutator(&p[l])?.is_zero() {
                out.pp_failures += 1;
            }
        }
    }
    out.gauge_momenta_zero = gauge_of(spec, &p, true).iter().all(DiffOperator::is_zero);
    out.total_momentum_zero = if spec.translation_invariant {
        (0..3).all(|i| {
            let mut s = DiffOperator::zero(d);
            for al in 0..spec.n_particles() {
                s = s.add(&p[3 * al + i]);
            }
            s.is_zero()
        })
    } else {
        true
    };
    let lam = lambda_from(&r, &p, true);
    let lam_rev = lambda_from(&r, &p, false);
    out.lambda_ordering_free = lam == lam_rev;
    let sg = gauge_of(spec, &r, false);
    let mut ok = true;
    for l in &lam {
        for s in &sg {
            ok &= l.commutator(s)?.is_zero();
        }
    }
    out.lambda_gauge_commutes = ok;
    Ok(out)
}

/// `[Λ_i, Λ_j] − i ε_{ijk} Λ_k − remainder` for each pair `(i, j)`; zero when the anomaly formula holds.
pub fn lambda_anomaly_residuals(spec: &ExactSpec) -> Result<Vec<DiffOperator>> {
    let p = momentum_operators(spec);
    let r = position_operators(spec);
    let lam = lambda_from(&r, &p, true);
    let q = q_operators(spec);
    let d = spec.n_coords();
    let mut out = Vec::new();
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let lhs = lam[i].commutator(&lam[j])?;
        let mut rhs = DiffOperator::zero(d);
        for k in 0..3 {
            let e = levi_civita(i, j, k);
            if e != 0 {
                rhs = rhs.add(&lam[k].scale(&Coef::imag(Surd::int(e))));
            }
        }
        // −i Σ_α Σ_a (1/ℜ_a²) Γ_{aαm} (ε_{imn} 𝔔_{aj} − ε_{jmn} 𝔔_{ai}) P_{αn}
        let mut rem = DiffOperator::zero(d);
        for al in 0..spec.n_particles() {
            for a in 0..3 {
                let w = spec.inv_norm(a);
                for m in 0..3 {
                    let g = &spec.gamma[a][3 * al + m];
                    if g.is_zero() {
                        continue;
                    }
                    for n in 0..3 {
                        let e1 = levi_civita(i, m, n);
                        let e2 = levi_civita(j, m, n);
                        if e1 == 0 && e2 == 0 {
                            continue;
                        }
                        let mut qq = q[a][j].scale(&Coef::int(e1));
                        qq.add_scaled(&q[a][i], &Coef::int(-e2));
                        rem.add_scaled(&qq.compose(&p[3 * al + n]), &Coef::real(g * &w));
                    }
                }
            }
        }
        rhs = rhs.add(&rem.scale(&Coef::imag(Surd::int(-1))));
        out.push(lhs.sub(&rhs));
    }
    Ok(out)
}

/// Rational multiple of the identity.
pub fn one_op(d: usize) -> DiffOperator {
    DiffOperator::constant(d, Coef::real(Surd::from_rational(BigRational::one())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn axis_gauge_commutators() {
        let spec = exact_axis_gauge(vec![int(1), int(1), int(1)]).unwrap();
        let r = position_operators(&spec);
        let p = momentum_operators(&spec);
        // [R_{1Y}, P_{1Y}] = 0 and [R_{1X}, P_{1X}] = i
        assert!(r[1].commutator(&p[1]).unwrap().is_zero());
        assert_eq!(r[0].commutator(&p[0]).unwrap(), DiffOperator::constant(9, Coef::i()));
        assert!(audit_commutators(&spec).unwrap().passed());
    }

    #[test]
    fn random_specs_pass_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 2..=4 {
            for ti in [false, true] {
                let spec = random_rational_spec(&mut rng, n, ti && n > 2);
                let a = audit_commutators(&spec).unwrap();
                assert!(a.passed(), "{a:?}");
            }
        }
    }

    #[test]
    fn anomaly_formula_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [2, 3] {
            let spec = random_rational_spec(&mut rng, n, n == 3);
            for res in lambda_anomaly_residuals(&spec).unwrap() {
                assert!(res.is_zero(), "{res}");
            }
        }
    }

    #[test]
    fn lambda_is_not_an_angular_momentum_in_general() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let spec = random_rational_spec(&mut rng, 3, false);
        let lam = residual_angular_momentum(&spec);
        let c = lam[0].commutator(&lam[1]).unwrap();
        assert_ne!(c, lam[2].scale(&Coef::i()));
    }

    #[test]
    fn float_spec_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let spec = random_rational_spec(&mut rng, 4, true);
        let f = spec.to_gauge_spec().unwrap();
        assert!(f.translation_invariant);
    }
}
