//! Truncated product oscillator basis and exact matrix rendering of [`DiffOperator`]s.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::weylalg::{AngularSector, DiffOperator};

/// Occupation-number basis with total quanta `≤ n_max`, ordered by shell then lexicographically.
#[derive(Clone, Debug)]
pub struct OscillatorBasis {
    sigmas: Vec<f64>,
    n_max: usize,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

fn push_states(k: usize, total: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if prefix.len() == k {
        if prefix.iter().map(|&n| n as usize).sum::<usize>() == total {
            out.push(prefix.clone());
        }
        return;
    }
    let used: usize = prefix.iter().map(|&n| n as usize).sum();
    for n in (0..=total - used).rev() {
        prefix.push(n as u16);
        push_states(k, total, prefix, out);
        prefix.pop();
    }
}

impl OscillatorBasis {
    pub fn new(sigmas: Vec<f64>, n_max: usize) -> Result<Self> {
        if sigmas.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidParameter("oscillator frequencies must be positive".into()));
        }
        let mut states = Vec::new();
        for t in 0..=n_max {
            push_states(sigmas.len(), t, &mut Vec::new(), &mut states);
            if sigmas.is_empty() {
                break;
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(OscillatorBasis { sigmas, n_max, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn mode_count(&self) -> usize {
        self.sigmas.len()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// `Σ σ_a (n_a + ½)`.
    pub fn energy(&self, i: usize) -> f64 {
        self.states[i].iter().zip(&self.sigmas).map(|(&n, s)| s * (n as f64 + 0.5)).sum()
    }

    /// Index set of the safe shell, total quanta `≤ n_max − 2`.
    pub fn safe_shell(&self) -> Vec<usize> {
        let cap = self.n_max.saturating_sub(2);
        (0..self.dim()).filter(|&i| self.total(i) <= cap).collect()
    }
}

/// `a` and `a†` on the first `size` levels.
pub fn ladder(size: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a = DMatrix::zeros(size, size);
    for n in 1..size {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    let ad = a.transpose();
    (a, ad)
}

/// `x = (a + a†)/√(2σ)` and `∂ = √(σ/2)(a − a†)` on `size` levels.
pub fn position_and_derivative(sigma: f64, size: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a, ad) = ladder(size);
    ((&a + &ad) / (2.0 * sigma).sqrt(), (&a - &ad) * (sigma / 2.0).sqrt())
}

/// Renders operators with one-mode factors computed on an enlarged space, so that
/// every matrix element between kept states is exact.
pub struct Renderer<'a> {
    basis: &'a OscillatorBasis,
    cache: HashMap<(usize, u16, u16), DMatrix<f64>>,
}

impl<'a> Renderer<'a> {
    pub fn new(basis: &'a OscillatorBasis) -> Self {
        Renderer { basis, cache: HashMap::new() }
    }

    fn factor(&mut self, mode: usize, mu: u16, nu: u16) -> &DMatrix<f64> {
        let nmax = self.basis.n_max;
        let sigma = self.basis.sigmas[mode];
        self.cache.entry((mode, mu, nu)).or_insert_with(|| {
            let cap = nmax + 1 + (mu + nu) as usize;
            let (x, d) = position_and_derivative(sigma, cap);
            let mut m = DMatrix::identity(cap, cap);
            for _ in 0..mu {
                m = &m * &x;
            }
            for _ in 0..nu {
                m = &m * &d;
            }
            m.view((0, 0), (nmax + 1, nmax + 1)).into_owned()
        })
    }

    pub fn render(&mut self, op: &DiffOperator) -> Result<DMatrix<Complex64>> {
        let b = self.basis;
        if op.n_coords() != b.mode_count() {
            return Err(Error::CoordinateMismatch(op.n_coords(), b.mode_count()));
        }
        let dim = b.dim();
        let mut out = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (key, c) in op.terms() {
            let c = c.to_c64();
            let factors: Vec<DMatrix<f64>> =
                (0..b.mode_count()).map(|m| self.factor(m, key.mono[m], key.deriv[m]).clone()).collect();
            for col in 0..dim {
                let occ = &b.states[col];
                let mut partial: Vec<(Vec<u16>, usize, f64)> = vec![(Vec::new(), 0, 1.0)];
                for (m, f) in factors.iter().enumerate() {
                    let n = occ[m] as usize;
                    let mut next = Vec::new();
                    for (p, used, v) in &partial {
                        for r in 0..=(b.n_max - used) {
                            let e = f[(r, n)];
                            if e != 0.0 {
                                let mut q = p.clone();
                                q.push(r as u16);
                                next.push((q, used + r, v * e));
                            }
                        }
                    }
                    partial = next;
                }
                for (occ_row, _, v) in partial {
                    let row = b.index[&occ_row];
                    out[(row, col)] += c * v;
                }
            }
        }
        Ok(out)
    }
}

/// `A ⊗ B` with the first factor as the slow index.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

pub fn identity_c(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

/// `Σ_k X ⊗ s_k`-style helper: numeric spin matrices for a sector.
pub fn spin_matrices(sector: &AngularSector) -> [DMatrix<Complex64>; 3] {
    [sector.numeric(0), sector.numeric(1), sector.numeric(2)]
}
