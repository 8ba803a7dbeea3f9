//! Exact numbers `Σ r_k √k` over square-free radicands, and their complex pairs.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Element of the multi-quadratic field Q(√2, √3, √5, ...).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Surd {
    // sorted by radicand, no zero coefficients
    terms: Vec<(u64, BigRational)>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `n = s² · f` with `f` square-free.
fn square_free_split(mut n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut f = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            f *= p;
        }
        p += 1;
    }
    (s, f * n)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Surd {
    pub fn zero() -> Self {
        Surd { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        if r.is_zero() {
            Self::zero()
        } else {
            Surd { terms: vec![(1, r)] }
        }
    }

    pub fn int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::from_rational(rat(n, d))
    }

    /// `r √k`, reducing `k` to its square-free part.
    pub fn sqrt_term(r: BigRational, k: u64) -> Self {
        if k == 0 || r.is_zero() {
            return Self::zero();
        }
        let (s, f) = square_free_split(k);
        let r = r * BigRational::from_integer(s.into());
        Surd { terms: vec![(f, r)] }
    }

    /// `√q` for a non-negative rational.
    pub fn sqrt_rational(q: &BigRational) -> Option<Self> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Self::zero());
        }
        let n = q.numer().to_u64()?;
        let d = q.denom().to_u64()?;
        // √(n/d) = √(n d) / d
        let nd = n.checked_mul(d)?;
        Some(Self::sqrt_term(BigRational::new(1.into(), d.into()), nd))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|t| t.0 == 1)
    }

    pub fn rational_part(&self) -> BigRational {
        match self.terms.first() {
            Some((1, r)) => r.clone(),
            _ => BigRational::zero(),
        }
    }

    /// The value if rational, `None` otherwise.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(self.rational_part())
        } else {
            None
        }
    }

    pub fn terms(&self) -> &[(u64, BigRational)] {
        &self.terms
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, r)| r.to_f64().unwrap_or(f64::NAN) * (*k as f64).sqrt())
            .sum()
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Surd { terms: self.terms.iter().map(|(k, c)| (*k, c * r)).collect() }
    }

    /// Inverse of a rational element.
    pub fn inv_rational(&self) -> Option<Self> {
        let r = self.as_rational()?;
        if r.is_zero() {
            None
        } else {
            Some(Self::from_rational(r.recip()))
        }
    }

    fn merge(a: &[(u64, BigRational)], b: &[(u64, BigRational)], sign: bool) -> Vec<(u64, BigRational)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    let c = if sign { -b[j].1.clone() } else { b[j].1.clone() };
                    out.push((b[j].0, c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if sign { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, o: &Surd) -> Surd {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        Surd { terms: Surd::merge(&self.terms, &o.terms, false) }
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, o: &Surd) -> Surd {
        Surd { terms: Surd::merge(&self.terms, &o.terms, true) }
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect() }
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, o: &Surd) -> Surd {
        if self.is_zero() || o.is_zero() {
            return Surd::zero();
        }
        if self.terms.len() == 1 && o.terms.len() == 1 && self.terms[0].0 == 1 && o.terms[0].0 == 1 {
            return Surd { terms: vec![(1, &self.terms[0].1 * &o.terms[0].1)] };
        }
        let mut acc: Vec<(u64, BigRational)> = Vec::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                // √a √b = g √(a b / g²) with g = gcd(a, b)
                let g = gcd(*ka, *kb);
                let k = (ka / g) * (kb / g);
                let c = ca * cb * BigRational::from_integer(g.into());
                acc.push((k, c));
            }
        }
        acc.sort_by_key(|t| t.0);
        let mut terms: Vec<(u64, BigRational)> = Vec::with_capacity(acc.len());
        for (k, c) in acc {
            match terms.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => terms.push((k, c)),
            }
        }
        terms.retain(|t| !t.1.is_zero());
        Surd { terms }
    }
}

impl AddAssign<&Surd> for Surd {
    fn add_assign(&mut self, o: &Surd) {
        *self = &*self + o;
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, "+")?;
            }
            if *k == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*sqrt({k})")?;
            }
        }
        Ok(())
    }
}

/// `re + i·im` with exact parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Coef {
    pub re: Surd,
    pub im: Surd,
}

impl Coef {
    pub fn zero() -> Self {
        Coef::default()
    }

    pub fn one() -> Self {
        Coef { re: Surd::one(), im: Surd::zero() }
    }

    pub fn i() -> Self {
        Coef { re: Surd::zero(), im: Surd::one() }
    }

    pub fn real(re: Surd) -> Self {
        Coef { re, im: Surd::zero() }
    }

    pub fn imag(im: Surd) -> Self {
        Coef { re: Surd::zero(), im }
    }

    pub fn int(n: i64) -> Self {
        Coef::real(Surd::int(n))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Coef { re: self.re.clone(), im: -&self.im }
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Coef { re: self.re.scale(r), im: self.im.scale(r) }
    }

    pub fn mul_surd(&self, s: &Surd) -> Self {
        Coef { re: &self.re * s, im: &self.im * s }
    }

    /// Multiply by `i`.
    pub fn times_i(&self) -> Self {
        Coef { re: -&self.im, im: self.re.clone() }
    }
}

impl Add for &Coef {
    type Output = Coef;
    fn add(self, o: &Coef) -> Coef {
        Coef { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &Coef {
    type Output = Coef;
    fn sub(self, o: &Coef) -> Coef {
        Coef { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Neg for &Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        Coef { re: -&self.re, im: -&self.im }
    }
}

impl Mul for &Coef {
    type Output = Coef;
    fn mul(self, o: &Coef) -> Coef {
        if self.im.is_zero() && o.im.is_zero() {
            return Coef::real(&self.re * &o.re);
        }
        Coef {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "i*({})", self.im),
            _ => write!(f, "({})+i*({})", self.re, self.im),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sqrt_products() {
        let s2 = Surd::sqrt_term(rat(1, 1), 2);
        let s3 = Surd::sqrt_term(rat(1, 1), 3);
        let s6 = &s2 * &s3;
        assert_eq!(s6, Surd::sqrt_term(rat(1, 1), 6));
        assert_eq!(&s2 * &s2, Surd::int(2));
        assert_eq!(&s6 * &s3, Surd::sqrt_term(rat(3, 1), 2));
        assert_eq!(Surd::sqrt_term(rat(1, 1), 12), Surd::sqrt_term(rat(2, 1), 3));
    }

    #[test]
    fn sqrt_of_rational() {
        let r = Surd::sqrt_rational(&rat(3, 2)).unwrap();
        assert_eq!(&r * &r, Surd::frac(3, 2));
        assert!((r.to_f64() - 1.5f64.sqrt()).abs() < 1e-15);
        assert!(Surd::sqrt_rational(&rat(-1, 2)).is_none());
    }

    #[test]
    fn complex_unit() {
        let i = Coef::i();
        assert_eq!(&i * &i, Coef::int(-1));
        assert_eq!(Coef::one().times_i(), i);
    }

    fn arb_surd() -> impl Strategy<Value = Surd> {
        prop::collection::vec((-9i64..9, 1i64..5, prop::sample::select(vec![1u64, 2, 3, 5, 6])), 0..4).prop_map(|v| {
            v.into_iter()
                .fold(Surd::zero(), |acc, (n, d, k)| &acc + &Surd::sqrt_term(rat(n, d), k))
        })
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_surd(), b in arb_surd(), c in arb_surd()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
            let v = (&a * &b).to_f64();
            prop_assert!((v - a.to_f64() * b.to_f64()).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }
}
