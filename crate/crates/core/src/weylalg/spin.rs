//! Exact spin-ℓ matrices for the angular sector.

use num_rational::BigRational;

use super::surd::{Coef, Surd};
use crate::error::{Error, Result};

pub type ExactMatrix = Vec<Vec<Coef>>;

/// Spin-ℓ representation; basis ordered `m = ℓ, ℓ−1, …, −ℓ`.
#[derive(Clone, Debug)]
pub struct AngularSector {
    pub l: u32,
    /// `s_x, s_y, s_z`
    pub s: [ExactMatrix; 3],
}

pub fn mat_zero(d: usize) -> ExactMatrix {
    vec![vec![Coef::zero(); d]; d]
}

pub fn mat_mul(a: &ExactMatrix, b: &ExactMatrix) -> ExactMatrix {
    let d = a.len();
    let mut c = mat_zero(d);
    for i in 0..d {
        for k in 0..d {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..d {
                if !b[k][j].is_zero() {
                    c[i][j] = &c[i][j] + &(&a[i][k] * &b[k][j]);
                }
            }
        }
    }
    c
}

pub fn mat_sub(a: &ExactMatrix, b: &ExactMatrix) -> ExactMatrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub fn mat_scale(a: &ExactMatrix, c: &Coef) -> ExactMatrix {
    a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

impl AngularSector {
    pub fn new(l: u32) -> Self {
        let d = (2 * l + 1) as usize;
        let m = |i: usize| l as i64 - i as i64;
        let mut sx = mat_zero(d);
        let mut sy = mat_zero(d);
        let mut sz = mat_zero(d);
        let half = BigRational::new(1.into(), 2.into());
        for i in 0..d {
            sz[i][i] = Coef::int(m(i));
            if i + 1 < d {
                // ⟨m+1| s₊ |m⟩ = √((ℓ−m)(ℓ+m+1)), with |m⟩ = column i+1
                let mm = m(i + 1);
                let v = ((l as i64 - mm) * (l as i64 + mm + 1)) as u64;
                let r = Surd::sqrt_term(half.clone(), v);
                sx[i][i + 1] = Coef::real(r.clone());
                sx[i + 1][i] = Coef::real(r.clone());
                // s_y = (s₊ − s₋)/(2i)
                sy[i][i + 1] = Coef::imag(-&r);
                sy[i + 1][i] = Coef::imag(r);
            }
        }
        AngularSector { l, s: [sx, sy, sz] }
    }

    pub fn dim(&self) -> usize {
        (2 * self.l + 1) as usize
    }

    /// Eigenvalue `m` of `s_z` on basis index `i`.
    pub fn m_of(&self, i: usize) -> i64 {
        self.l as i64 - i as i64
    }

    pub fn casimir(&self) -> ExactMatrix {
        let mut c = mat_zero(self.dim());
        for k in 0..3 {
            let sq = mat_mul(&self.s[k], &self.s[k]);
            c = c.iter().zip(&sq).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect();
        }
        c
    }

    /// Checks `[s_i, s_j] = i ε_{ijk} s_k` and `s² = ℓ(ℓ+1)` exactly.
    pub fn verify(&self) -> Result<()> {
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let c = mat_sub(&mat_mul(&self.s[i], &self.s[j]), &mat_mul(&self.s[j], &self.s[i]));
            if c != mat_scale(&self.s[k], &Coef::i()) {
                return Err(Error::InvalidParameter(format!("spin-{} algebra fails", self.l)));
            }
        }
        let ll = (self.l * (self.l + 1)) as i64;
        let c = self.casimir();
        for (a, row) in c.iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                let want = if a == b { Coef::int(ll) } else { Coef::zero() };
                if *x != want {
                    return Err(Error::InvalidParameter(format!("spin-{} algebra fails", self.l)));
                }
            }
        }
        Ok(())
    }

    /// Numeric `s_k` as a dense complex matrix.
    pub fn numeric(&self, k: usize) -> nalgebra::DMatrix<num_complex::Complex64> {
        let d = self.dim();
        nalgebra::DMatrix::from_fn(d, d, |i, j| self.s[k][i][j].to_c64())
    }
}
