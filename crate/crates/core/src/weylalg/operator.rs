//! Polynomial-coefficient differential operators `Σ c x^μ ∂^ν` in normal order.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use super::surd::{Coef, Surd};
use crate::error::{Error, Result};

/// Exponents of one normal-ordered term: `x^mono ∂^deriv`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Key {
    pub deriv: Vec<u16>,
    pub mono: Vec<u16>,
}

fn deg(v: &[u16]) -> u32 {
    v.iter().map(|&e| e as u32).sum()
}

impl Ord for Key {
    // graded lexicographic on (derivative, monomial)
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        deg(&self.deriv)
            .cmp(&deg(&o.deriv))
            .then_with(|| self.deriv.cmp(&o.deriv))
            .then_with(|| deg(&self.mono).cmp(&deg(&o.mono)))
            .then_with(|| self.mono.cmp(&o.mono))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffOperator {
    n: usize,
    terms: BTreeMap<Key, Coef>,
}

#[derive(Serialize)]
struct JsonTerm {
    coef: String,
    x: Vec<u16>,
    d: Vec<u16>,
}

fn binom(n: u16, k: u16) -> u64 {
    let mut r = 1u64;
    for i in 0..k as u64 {
        r = r * (n as u64 - i) / (i + 1);
    }
    r
}

fn falling(n: u16, k: u16) -> u64 {
    (0..k as u64).map(|i| n as u64 - i).product()
}

impl DiffOperator {
    pub fn zero(n: usize) -> Self {
        DiffOperator { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Coef) -> Self {
        let mut op = Self::zero(n);
        op.push(Key { deriv: vec![0; n], mono: vec![0; n] }, c);
        op
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(n, Coef::one())
    }

    /// Multiplication by `x_k`.
    pub fn coord(n: usize, k: usize) -> Self {
        let mut mono = vec![0; n];
        mono[k] = 1;
        let mut op = Self::zero(n);
        op.push(Key { deriv: vec![0; n], mono }, Coef::one());
        op
    }

    /// `∂/∂x_k`.
    pub fn deriv(n: usize, k: usize) -> Self {
        let mut deriv = vec![0; n];
        deriv[k] = 1;
        let mut op = Self::zero(n);
        op.push(Key { deriv, mono: vec![0; n] }, Coef::one());
        op
    }

    /// `(1/i) ∂/∂x_k`.
    pub fn momentum(n: usize, k: usize) -> Self {
        Self::deriv(n, k).scale(&Coef::imag(Surd::int(-1)))
    }

    pub fn term(n: usize, c: Coef, mono: Vec<u16>, deriv: Vec<u16>) -> Self {
        assert_eq!(mono.len(), n);
        assert_eq!(deriv.len(), n);
        let mut op = Self::zero(n);
        op.push(Key { deriv, mono }, c);
        op
    }

    pub fn n_coords(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &Coef)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, k: Key, c: Coef) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                let s = &*v + &c;
                if s.is_zero() {
                    self.terms.remove(&k);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(k, c);
            }
        }
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.n == o.n {
            Ok(())
        } else {
            Err(Error::CoordinateMismatch(self.n, o.n))
        }
    }

    /// Highest total derivative order.
    pub fn order(&self) -> u32 {
        self.terms.keys().map(|k| deg(&k.deriv)).max().unwrap_or(0)
    }

    /// Highest total polynomial degree of the coefficients.
    pub fn poly_degree(&self) -> u32 {
        self.terms.keys().map(|k| deg(&k.mono)).max().unwrap_or(0)
    }

    /// The value if the operator is a constant multiple of the identity.
    pub fn as_constant(&self) -> Option<Coef> {
        match self.terms.len() {
            0 => Some(Coef::zero()),
            1 => {
                let (k, c) = self.terms.iter().next()?;
                (deg(&k.deriv) == 0 && deg(&k.mono) == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// Drop the constant term.
    pub fn without_constant(&self) -> Self {
        let mut out = self.clone();
        out.terms.retain(|k, _| deg(&k.deriv) + deg(&k.mono) > 0);
        out
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let (mut big, small) = if self.terms.len() >= o.terms.len() { (self.clone(), o) } else { (o.clone(), self) };
        for (k, c) in &small.terms {
            big.push(k.clone(), c.clone());
        }
        Ok(big)
    }

    /// `self += c·o` without cloning `self`.
    pub fn add_scaled(&mut self, o: &Self, c: &Coef) {
        assert_eq!(self.n, o.n, "coordinate lists differ");
        for (k, v) in &o.terms {
            self.push(k.clone(), v * c);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("coordinate lists differ")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&Coef::int(-1))
    }

    pub fn scale(&self, c: &Coef) -> Self {
        let mut out = Self::zero(self.n);
        if c.is_zero() {
            return out;
        }
        for (k, v) in &self.terms {
            let p = v * c;
            if !p.is_zero() {
                out.terms.insert(k.clone(), p);
            }
        }
        out
    }

    pub fn scale_surd(&self, s: &Surd) -> Self {
        self.scale(&Coef::real(s.clone()))
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        self.scale(&Coef::real(Surd::from_rational(r.clone())))
    }

    /// `self ∘ o`, normal ordered by the Leibniz rule.
    pub fn try_compose(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = Self::zero(self.n);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                out.contract(k1, k2, &(c1 * c2), false);
            }
        }
        Ok(out)
    }

    /// Add the Leibniz terms of `(x^μ₁ ∂^ν₁)(x^μ₂ ∂^ν₂)` times `c`; `contracted_only` drops the `κ = 0` term.
    fn contract(&mut self, k1: &Key, k2: &Key, c: &Coef, contracted_only: bool) {
        let n = self.n;
        // coordinates where ∂ from the left meets x from the right
        let hits: Vec<usize> = (0..n).filter(|&i| k1.deriv[i] > 0 && k2.mono[i] > 0).collect();
        let maxk: Vec<u16> = hits.iter().map(|&i| k1.deriv[i].min(k2.mono[i])).collect();
        let mut kap = vec![0u16; hits.len()];
        let mut first = true;
        loop {
            if !(first && contracted_only) {
                let mut mult = 1u64;
                let mut mono: Vec<u16> = k1.mono.iter().zip(&k2.mono).map(|(a, b)| a + b).collect();
                let mut deriv: Vec<u16> = k1.deriv.iter().zip(&k2.deriv).map(|(a, b)| a + b).collect();
                for (h, &i) in hits.iter().enumerate() {
                    let kk = kap[h];
                    mult *= binom(k1.deriv[i], kk) * falling(k2.mono[i], kk);
                    mono[i] -= kk;
                    deriv[i] -= kk;
                }
                let cc = if mult == 1 { c.clone() } else { c.scale(&BigRational::from_integer(mult.into())) };
                self.push(Key { deriv, mono }, cc);
            }
            first = false;
            let mut h = 0;
            loop {
                if h == kap.len() {
                    return;
                }
                if kap[h] < maxk[h] {
                    kap[h] += 1;
                    break;
                }
                kap[h] = 0;
                h += 1;
            }
        }
    }

    pub fn compose(&self, o: &Self) -> Self {
        self.try_compose(o).expect("coordinate lists differ")
    }

    /// `[A, B] = AB − BA`. The uncontracted Leibniz terms cancel pairwise and are never formed.
    pub fn commutator(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = Self::zero(self.n);
        let touches = |a: &Key, b: &Key| a.deriv.iter().zip(&b.mono).any(|(d, m)| *d > 0 && *m > 0);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                let (ab, ba) = (touches(k1, k2), touches(k2, k1));
                if !ab && !ba {
                    continue;
                }
                let c = c1 * c2;
                if ab {
                    out.contract(k1, k2, &c, true);
                }
                if ba {
                    out.contract(k2, k1, &(-&c), true);
                }
            }
        }
        Ok(out)
    }

    /// `(AB + BA)/2`.
    pub fn sym_product(&self, o: &Self) -> Self {
        self.compose(o).add(&o.compose(self)).scale_rational(&BigRational::new(1.into(), 2.into()))
    }

    /// Formal adjoint under the flat measure: `(c x^μ ∂^ν)† = (−∂)^ν c̄ x^μ`.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for (k, c) in &self.terms {
            let sign = if deg(&k.deriv) % 2 == 0 { 1 } else { -1 };
            let d = Self::term(n, Coef::int(sign), vec![0; n], k.deriv.clone());
            let x = Self::term(n, c.conj(), k.mono.clone(), vec![0; n]);
            out = out.add(&d.compose(&x));
        }
        out
    }

    /// Replace each derivative-free term's coefficients by their numeric value at `x`.
    pub fn eval_multiplier(&self, x: &[f64]) -> Option<num_complex::Complex64> {
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            if deg(&k.deriv) > 0 {
                return None;
            }
            let m: f64 = k.mono.iter().zip(x).map(|(&e, v)| v.powi(e as i32)).product();
            s += c.to_c64() * m;
        }
        Some(s)
    }

    /// Terms of derivative order exactly `d`.
    pub fn part_of_order(&self, d: u32) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            if deg(&k.deriv) == d {
                out.terms.insert(k.clone(), c.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v: Vec<JsonTerm> = self
            .terms
            .iter()
            .map(|(k, c)| JsonTerm { coef: c.to_string(), x: k.mono.clone(), d: k.deriv.clone() })
            .collect();
        serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (t, (k, c)) in self.terms.iter().enumerate() {
            if t > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}]")?;
            for (i, &e) in k.mono.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{e}")?,
                }
            }
            for (i, &e) in k.deriv.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*d{i}")?,
                    _ => write!(f, "*d{i}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

/// `¼(c∂ₐ∂_b + ∂ₐc∂_b + ∂_b c∂ₐ + ∂ₐ∂_b c)`.
pub fn weyl_symmetrize(c: &DiffOperator, a: usize, b: usize) -> DiffOperator {
    let n = c.n_coords();
    let da = DiffOperator::deriv(n, a);
    let db = DiffOperator::deriv(n, b);
    let t1 = c.compose(&da).compose(&db);
    let t2 = da.compose(c).compose(&db);
    let t3 = db.compose(c).compose(&da);
    let t4 = da.compose(&db).compose(c);
    t1.add(&t2).add(&t3).add(&t4).scale_rational(&BigRational::new(1.into(), 4.into()))
}

#[cfg(test)]
mod tests {
    use super::super::surd::rat;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op<R: Rng>(rng: &mut R, n: usize, terms: usize, max_e: u16) -> DiffOperator {
        let mut op = DiffOperator::zero(n);
        for _ in 0..terms {
            let mono: Vec<u16> = (0..n).map(|_| rng.gen_range(0..=max_e)).collect();
            let deriv: Vec<u16> = (0..n).map(|_| rng.gen_range(0..=max_e)).collect();
            let c = Coef {
                re: Surd::frac(rng.gen_range(-5..6), rng.gen_range(1..4)),
                im: Surd::frac(rng.gen_range(-5..6), rng.gen_range(1..4)),
            };
            op = op.add(&DiffOperator::term(n, c, mono, deriv));
        }
        op
    }

    fn random_first_order<R: Rng>(rng: &mut R, n: usize) -> DiffOperator {
        let mut op = DiffOperator::zero(n);
        for _ in 0..4 {
            let mut mono = vec![0u16; n];
            mono[rng.gen_range(0..n)] = rng.gen_range(0..3);
            let mut deriv = vec![0u16; n];
            deriv[rng.gen_range(0..n)] = 1;
            op = op.add(&DiffOperator::term(n, Coef::int(rng.gen_range(-3..4)), mono, deriv));
        }
        op
    }

    #[test]
    fn defining_relation() {
        for k in 0..3 {
            let c = DiffOperator::deriv(3, k).commutator(&DiffOperator::coord(3, k)).unwrap();
            assert_eq!(c, DiffOperator::identity(3));
            let c2 = DiffOperator::deriv(3, k).commutator(&DiffOperator::coord(3, (k + 1) % 3)).unwrap();
            assert!(c2.is_zero());
        }
    }

    #[test]
    fn second_derivative_of_square() {
        // ∂² x² = x²∂² + 4x∂ + 2
        let x = DiffOperator::coord(1, 0);
        let d = DiffOperator::deriv(1, 0);
        let lhs = d.compose(&d).compose(&x).compose(&x);
        let rhs = DiffOperator::term(1, Coef::one(), vec![2], vec![2])
            .add(&DiffOperator::term(1, Coef::int(4), vec![1], vec![1]))
            .add(&DiffOperator::constant(1, Coef::int(2)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn coordinate_mismatch() {
        let a = DiffOperator::coord(2, 0);
        let b = DiffOperator::coord(3, 0);
        assert_eq!(a.commutator(&b), Err(Error::CoordinateMismatch(2, 3)));
    }

    #[test]
    fn weyl_constant_is_plain_product() {
        let c = DiffOperator::constant(2, Coef::real(Surd::frac(3, 7)));
        let w = weyl_symmetrize(&c, 0, 1);
        let expect = DiffOperator::term(2, Coef::real(Surd::frac(3, 7)), vec![0, 0], vec![1, 1]);
        assert_eq!(w, expect);
    }

    #[test]
    fn weyl_of_coordinate_by_hand() {
        // ¼(x∂² + ∂x∂ + ∂x∂ + ∂²x) = x∂² + ∂
        let x = DiffOperator::coord(1, 0);
        let w = weyl_symmetrize(&x, 0, 0);
        let expect = DiffOperator::term(1, Coef::one(), vec![1], vec![2]).add(&DiffOperator::deriv(1, 0));
        assert_eq!(w, expect);
        let naive = x.compose(&DiffOperator::term(1, Coef::one(), vec![0], vec![2]));
        assert!(w.sub(&naive).order() <= 1);
    }

    #[test]
    fn weyl_is_self_adjoint_for_real_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = DiffOperator::term(2, Coef::int(rng.gen_range(1..5)), vec![rng.gen_range(0..3), rng.gen_range(0..3)], vec![0, 0]);
            let w = weyl_symmetrize(&c, 0, 1);
            assert_eq!(w.adjoint(), w);
        }
    }

    #[test]
    fn associativity_500_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let a = random_op(&mut rng, 2, 2, 2);
            let b = random_op(&mut rng, 2, 2, 2);
            let c = random_op(&mut rng, 2, 2, 2);
            assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        }
    }

    #[test]
    fn jacobi_identity_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = random_first_order(&mut rng, 3);
            let b = random_first_order(&mut rng, 3);
            let c = random_first_order(&mut rng, 3);
            let j1 = a.commutator(&b).unwrap().commutator(&c).unwrap();
            let j2 = b.commutator(&c).unwrap().commutator(&a).unwrap();
            let j3 = c.commutator(&a).unwrap().commutator(&b).unwrap();
            assert!(j1.add(&j2).add(&j3).is_zero());
        }
    }

    #[test]
    fn stable_text_and_json() {
        let op = DiffOperator::term(2, Coef::real(Surd::frac(1, 2)), vec![1, 0], vec![0, 2])
            .add(&DiffOperator::momentum(2, 1));
        assert_eq!(op.to_string(), "[i*(-1)]*d1 + [1/2]*x0*d1^2");
        let j = op.to_json();
        assert_eq!(j[1]["d"], serde_json::json!([0, 2]));
        let _ = rat(1, 2);
    }

    proptest! {
        #[test]
        fn self_commutator_vanishes(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_op(&mut rng, 3, 3, 2);
            prop_assert!(a.commutator(&a).unwrap().is_zero());
        }

        #[test]
        fn adjoint_is_involution(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_op(&mut rng, 2, 3, 2);
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }
    }
}
