//! Inner products of reduced wave functions on the gauge surface, parametrized by
//! normal coordinates, by tensor Gauss–Hermite quadrature. The angular sector is
//! contracted as a plain component sum.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauge::{eval_geometry, Configuration, FrameTag, GaugeSpec};
use crate::gribov::Predicate;
use crate::quad::gauss_hermite;
use crate::spectra::basis::spin_matrices;
use crate::spectra::AngOp;
use crate::weylalg::eckart::EckartModel;
use crate::weylalg::{AngularSector, DiffOperator};

/// Default Gauss–Hermite points per mode.
pub const DEFAULT_ORDER: usize = 20;

/// A wave function of `k` normal coordinates with `2ℓ+1` angular components.
pub trait WaveFunction: Sync {
    fn n_coords(&self) -> usize;
    fn n_components(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<Complex64>;
    /// Polynomial degree of `ψ · exp(Σ σ_b x_b²/2)`, when that is a polynomial.
    fn degree(&self) -> Option<usize> {
        None
    }
}

/// `Σ_μ c_μ x^μ exp(−Σ σ_b x_b²/2)` per angular component.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussPoly {
    pub sigmas: Vec<f64>,
    pub comps: Vec<BTreeMap<Vec<u16>, Complex64>>,
}

fn hermite_coeffs(n: usize) -> Vec<f64> {
    // physicists' H_n as ascending coefficients
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= 2.0 * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn add_term(map: &mut BTreeMap<Vec<u16>, Complex64>, mono: Vec<u16>, c: Complex64) {
    if c == Complex64::new(0.0, 0.0) {
        return;
    }
    let e = map.entry(mono).or_insert(Complex64::new(0.0, 0.0));
    *e += c;
}

impl GaussPoly {
    pub fn zero(sigmas: &[f64], n_comp: usize) -> Self {
        GaussPoly { sigmas: sigmas.to_vec(), comps: vec![BTreeMap::new(); n_comp] }
    }

    /// Normalized oscillator product state `Π_b φ_{n_b}(√σ_b x_b)` in component `comp`.
    pub fn oscillator(sigmas: &[f64], occ: &[u16], comp: usize, n_comp: usize) -> Result<Self> {
        if occ.len() != sigmas.len() || comp >= n_comp {
            return Err(Error::DimensionMismatch("occupation or component out of range".into()));
        }
        let mut poly: BTreeMap<Vec<u16>, Complex64> = BTreeMap::new();
        poly.insert(vec![0; sigmas.len()], Complex64::new(1.0, 0.0));
        for (b, (&n, &s)) in occ.iter().zip(sigmas).enumerate() {
            let h = hermite_coeffs(n as usize);
            let fact: f64 = (1..=n as u64).map(|k| k as f64).product();
            let norm = s.powf(0.25) / (2f64.powi(n as i32) * fact * std::f64::consts::PI.sqrt()).sqrt();
            let mut next = BTreeMap::new();
            for (mono, c) in &poly {
                for (k, hk) in h.iter().enumerate() {
                    let mut m = mono.clone();
                    m[b] += k as u16;
                    add_term(&mut next, m, c * hk * s.sqrt().powi(k as i32) * norm);
                }
            }
            poly = next;
        }
        let mut g = Self::zero(sigmas, n_comp);
        g.comps[comp] = poly;
        Ok(g)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (c, m) in out.comps.iter_mut().zip(&o.comps) {
            for (k, v) in m {
                add_term(c, k.clone(), *v);
            }
        }
        out
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        for c in &mut out.comps {
            for v in c.values_mut() {
                *v *= z;
            }
        }
        out
    }

    fn deriv_poly(&self, p: &BTreeMap<Vec<u16>, Complex64>, b: usize) -> BTreeMap<Vec<u16>, Complex64> {
        // ∂_b (p G) = (∂_b p − σ_b x_b p) G
        let mut out = BTreeMap::new();
        for (mono, c) in p {
            if mono[b] > 0 {
                let mut m = mono.clone();
                m[b] -= 1;
                add_term(&mut out, m, c * mono[b] as f64);
            }
            let mut m = mono.clone();
            m[b] += 1;
            add_term(&mut out, m, -c * self.sigmas[b]);
        }
        out
    }

    fn apply_poly(&self, op: &DiffOperator, p: &BTreeMap<Vec<u16>, Complex64>) -> BTreeMap<Vec<u16>, Complex64> {
        let mut out = BTreeMap::new();
        for (key, coef) in op.terms() {
            let mut q = p.clone();
            for (b, &k) in key.deriv.iter().enumerate() {
                for _ in 0..k {
                    q = self.deriv_poly(&q, b);
                }
            }
            let c = coef.to_c64();
            for (mono, v) in q {
                let m: Vec<u16> = mono.iter().zip(&key.mono).map(|(a, b)| a + b).collect();
                add_term(&mut out, m, v * c);
            }
        }
        out
    }

    /// `op ⊗ 1` applied componentwise.
    pub fn apply(&self, op: &DiffOperator) -> Result<Self> {
        if op.n_coords() != self.sigmas.len() {
            return Err(Error::CoordinateMismatch(op.n_coords(), self.sigmas.len()));
        }
        Ok(GaussPoly { sigmas: self.sigmas.clone(), comps: self.comps.iter().map(|p| self.apply_poly(op, p)).collect() })
    }

    fn mix(&self, op: &DiffOperator, s: &DMatrix<Complex64>) -> Result<Self> {
        let a = self.apply(op)?;
        let mut out = Self::zero(&self.sigmas, self.comps.len());
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                if s[(i, j)] != Complex64::new(0.0, 0.0) {
                    for (k, v) in &a.comps[j] {
                        add_term(&mut out.comps[i], k.clone(), v * s[(i, j)]);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies `scalar ⊗ 1 + Σ lin_k ⊗ s_k + Σ quad_{jk} ⊗ s_j s_k`.
    pub fn apply_ang(&self, op: &AngOp, sector: &AngularSector) -> Result<Self> {
        if sector.dim() != self.comps.len() {
            return Err(Error::DimensionMismatch("angular sector size".into()));
        }
        let s = spin_matrices(sector);
        let mut out = self.apply(&op.scalar)?;
        for k in 0..3 {
            if !op.lin[k].is_zero() {
                out = out.add(&self.mix(&op.lin[k], &s[k])?);
            }
            for j in 0..3 {
                if !op.quad[j][k].is_zero() {
                    out = out.add(&self.mix(&op.quad[j][k], &(&s[j] * &s[k]))?);
                }
            }
        }
        Ok(out)
    }
}

impl WaveFunction for GaussPoly {
    fn n_coords(&self) -> usize {
        self.sigmas.len()
    }

    fn n_components(&self) -> usize {
        self.comps.len()
    }

    fn eval(&self, x: &[f64]) -> Vec<Complex64> {
        let g = (-0.5 * x.iter().zip(&self.sigmas).map(|(x, s)| s * x * x).sum::<f64>()).exp();
        self.comps
            .iter()
            .map(|p| {
                p.iter()
                    .map(|(m, c)| c * m.iter().zip(x).map(|(&e, xi)| xi.powi(e as i32)).product::<f64>())
                    .sum::<Complex64>()
                    * g
            })
            .collect()
    }

    fn degree(&self) -> Option<usize> {
        self.comps.iter().flat_map(|p| p.keys()).map(|m| m.iter().map(|&e| e as usize).sum()).max().or(Some(0))
    }
}

/// The Faddeev–Popov weight `𝒥 Θ(𝒥) Θ(ℱ)` at `R = Ẑ/ε + Σ x_b Γ_b`.
#[derive(Clone, Debug)]
pub struct JacobianWeight {
    pub spec: GaugeSpec,
    pub z: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub eps: f64,
    pub predicates: Vec<Predicate>,
}

impl JacobianWeight {
    pub fn eckart(model: &EckartModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("ε must be positive".into()));
        }
        Ok(JacobianWeight {
            spec: model.spec.to_gauge_spec()?,
            z: model.z_config().flat(),
            modes: model.modes_f64(),
            eps,
            predicates: Vec::new(),
        })
    }

    pub fn configuration(&self, x: &[f64]) -> Configuration {
        let mut r: Vec<f64> = self.z.iter().map(|z| z / self.eps).collect();
        for (xb, m) in x.iter().zip(&self.modes) {
            for (ri, mi) in r.iter_mut().zip(m) {
                *ri += xb * mi;
            }
        }
        Configuration::from_flat(&r, FrameTag::Body)
    }

    /// `𝒥` where `det 𝔔 > 0` and every predicate holds, otherwise zero.
    pub fn weight(&self, x: &[f64]) -> f64 {
        let cfg = self.configuration(x);
        match eval_geometry(&self.spec, &cfg) {
            Ok(g) if g.det_q > 0.0 && self.predicates.iter().all(|p| p.eval(&cfg)) => g.jac,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum InnerWeight {
    Reduced,
    WithJacobian(JacobianWeight),
}

/// Gauss–Hermite rule adapted to `exp(−Σ σ_b x_b²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteGrid {
    pub sigmas: Vec<f64>,
    pub order: usize,
}

/// `⟨f|g⟩ = ∫ d^k x w(x) Σ_m f_m* g_m`.
///
/// Both functions must carry the Gaussian `exp(−Σ σ_b x_b²/2)` of the grid for the rule to be exact.
pub fn inner_product(f: &dyn WaveFunction, g: &dyn WaveFunction, weight: &InnerWeight, grid: &HermiteGrid) -> Result<Complex64> {
    let k = grid.sigmas.len();
    if f.n_coords() != k || g.n_coords() != k {
        return Err(Error::CoordinateMismatch(f.n_coords().max(g.n_coords()), k));
    }
    if f.n_components() != g.n_components() {
        return Err(Error::DimensionMismatch("angular components differ".into()));
    }
    if let (Some(df), Some(dg)) = (f.degree(), g.degree()) {
        let extra = if matches!(weight, InnerWeight::WithJacobian(_)) { 3 } else { 0 };
        let degree = df + dg + extra;
        if 2 * grid.order < degree + 1 {
            return Err(Error::Accuracy { order: grid.order, degree });
        }
    }
    let rule = gauss_hermite(grid.order);
    let n = grid.order;
    let total = n.pow(k as u32);
    let scale: Vec<f64> = grid.sigmas.iter().map(|s| 1.0 / s.sqrt()).collect();
    let parts: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; k];
            let mut w = 1.0;
            let mut y2 = 0.0;
            for b in 0..k {
                let i = idx % n;
                idx /= n;
                let y = rule.nodes[i];
                x[b] = y * scale[b];
                w *= rule.weights[i] * scale[b];
                y2 += y * y;
            }
            let wt = match weight {
                InnerWeight::Reduced => 1.0,
                InnerWeight::WithJacobian(j) => j.weight(&x),
            };
            if wt == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (fv, gv) = (f.eval(&x), g.eval(&x));
            let s: Complex64 = fv.iter().zip(&gv).map(|(a, b)| a.conj() * b).sum();
            s * (w * wt * y2.exp())
        })
        .collect();
    // fixed-order pairwise reduction for reproducibility
    Ok(pairwise_sum(&parts))
}

/// Matrix `⟨f_i|g_j⟩` under one quadrature rule, evaluating every function once per node.
pub fn inner_matrix(
    fs: &[&dyn WaveFunction],
    gs: &[&dyn WaveFunction],
    weight: &InnerWeight,
    grid: &HermiteGrid,
) -> Result<DMatrix<Complex64>> {
    let k = grid.sigmas.len();
    let extra = if matches!(weight, InnerWeight::WithJacobian(_)) { 3 } else { 0 };
    let deg = |v: &[&dyn WaveFunction]| -> Result<Option<usize>> {
        let mut m = Some(0);
        for f in v {
            if f.n_coords() != k {
                return Err(Error::CoordinateMismatch(f.n_coords(), k));
            }
            m = match (m, f.degree()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        Ok(m)
    };
    if let (Some(df), Some(dg)) = (deg(fs)?, deg(gs)?) {
        let degree = df + dg + extra;
        if 2 * grid.order < degree + 1 {
            return Err(Error::Accuracy { order: grid.order, degree });
        }
    }
    let rule = gauss_hermite(grid.order);
    let n = grid.order;
    let total = n.pow(k as u32);
    let scale: Vec<f64> = grid.sigmas.iter().map(|s| 1.0 / s.sqrt()).collect();
    // per node: quadrature weight times w(x), and the function values
    let nodes: Vec<(f64, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; k];
            let mut w = 1.0;
            let mut y2 = 0.0;
            for b in 0..k {
                let i = idx % n;
                idx /= n;
                let y = rule.nodes[i];
                x[b] = y * scale[b];
                w *= rule.weights[i] * scale[b];
                y2 += y * y;
            }
            let wt = match weight {
                InnerWeight::Reduced => 1.0,
                InnerWeight::WithJacobian(j) => j.weight(&x),
            } * w
                * y2.exp();
            if wt == 0.0 {
                return (0.0, Vec::new(), Vec::new());
            }
            (wt, fs.iter().map(|f| f.eval(&x)).collect(), gs.iter().map(|g| g.eval(&x)).collect())
        })
        .collect();
    let mut out = DMatrix::zeros(fs.len(), gs.len());
    for i in 0..fs.len() {
        for j in 0..gs.len() {
            let parts: Vec<Complex64> = nodes
                .iter()
                .map(|(wt, fv, gv)| {
                    if *wt == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    fv[i].iter().zip(&gv[j]).map(|(a, b)| a.conj() * b).sum::<Complex64>() * *wt
                })
                .collect();
            out[(i, j)] = pairwise_sum(&parts);
        }
    }
    Ok(out)
}

fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Wraps `ψ` as `𝒥^{-1/2} ψ` (or `𝒥^{1/2} ψ`) for moving between reduced and physical wave functions.
pub struct JacobianScaled<'a> {
    pub inner: &'a dyn WaveFunction,
    pub weight: &'a JacobianWeight,
    pub power: f64,
}

impl WaveFunction for JacobianScaled<'_> {
    fn n_coords(&self) -> usize {
        self.inner.n_coords()
    }

    fn n_components(&self) -> usize {
        self.inner.n_components()
    }

    fn eval(&self, x: &[f64]) -> Vec<Complex64> {
        let w = self.weight.weight(x);
        let f = if w > 0.0 { w.powf(self.power) } else { 0.0 };
        self.inner.eval(x).into_iter().map(|z| z * f).collect()
    }
}

/// `Σ_k ε^k (orders[k] + constants[k]) ψ`.
pub fn apply_expansion(f: &GaussPoly, orders: &[AngOp], constants: &[f64], sector: &AngularSector, eps: f64) -> Result<GaussPoly> {
    let mut out = GaussPoly::zero(&f.sigmas, f.comps.len());
    for (k, (op, c)) in orders.iter().zip(constants).enumerate() {
        let e = eps.powi(k as i32);
        let term = f.apply_ang(op, sector)?.add(&f.scale(Complex64::new(*c, 0.0)));
        out = out.add(&term.scale(Complex64::new(e, 0.0)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{expand_hamiltonian, HamiltonianForm};
    use crate::weylalg::eckart::EckartModel;

    fn grid(m: &EckartModel) -> HermiteGrid {
        HermiteGrid { sigmas: m.sigmas(), order: 12 }
    }

    #[test]
    fn oscillators_orthonormal() {
        let m = EckartModel::triangle();
        let s = m.sigmas();
        let a = GaussPoly::oscillator(&s, &[0, 0, 0], 0, 1).unwrap();
        let b = GaussPoly::oscillator(&s, &[2, 1, 0], 0, 1).unwrap();
        let g = grid(&m);
        assert!((inner_product(&a, &a, &InnerWeight::Reduced, &g).unwrap() - 1.0).norm() < 1e-12);
        assert!((inner_product(&b, &b, &InnerWeight::Reduced, &g).unwrap() - 1.0).norm() < 1e-12);
        assert!(inner_product(&a, &b, &InnerWeight::Reduced, &g).unwrap().norm() < 1e-12);
    }

    #[test]
    fn low_order_is_rejected() {
        let m = EckartModel::triangle();
        let b = GaussPoly::oscillator(&m.sigmas(), &[6, 0, 0], 0, 1).unwrap();
        let g = HermiteGrid { sigmas: m.sigmas(), order: 4 };
        assert!(matches!(inner_product(&b, &b, &InnerWeight::Reduced, &g), Err(Error::Accuracy { .. })));
    }

    #[test]
    fn lambda_sectors_orthogonal() {
        // δQ₄ ± i δQ₅ carry Λ₃ = ±1 on the degenerate pair
        let m = EckartModel::triangle();
        let s = m.sigmas();
        let p = GaussPoly::oscillator(&s, &[1, 0, 0], 0, 1).unwrap();
        let q = GaussPoly::oscillator(&s, &[0, 1, 0], 0, 1).unwrap();
        let plus = p.add(&q.scale(Complex64::new(0.0, 1.0)));
        let minus = p.add(&q.scale(Complex64::new(0.0, -1.0)));
        let g = grid(&m);
        assert!(inner_product(&plus, &minus, &InnerWeight::Reduced, &g).unwrap().norm() < 1e-12);
    }

    #[test]
    fn jacobian_weight_matches_reduced() {
        let m = EckartModel::triangle();
        let s = m.sigmas();
        let jw = JacobianWeight::eckart(&m, 0.05).unwrap();
        let f = GaussPoly::oscillator(&s, &[1, 0, 2], 0, 1).unwrap();
        let h = GaussPoly::oscillator(&s, &[1, 2, 0], 0, 1).unwrap();
        let g = grid(&m);
        let red = inner_product(&f, &h, &InnerWeight::Reduced, &g).unwrap();
        let ff = JacobianScaled { inner: &f, weight: &jw, power: -0.5 };
        let hh = JacobianScaled { inner: &h, weight: &jw, power: -0.5 };
        let phys = inner_product(&ff, &hh, &InnerWeight::WithJacobian(jw.clone()), &g).unwrap();
        assert!((red - phys).norm() < 1e-6 * red.norm().max(1.0));
    }

    #[test]
    fn order_two_hamiltonian_hermitian_small() {
        let m = EckartModel::triangle();
        let s = m.sigmas();
        let sector = AngularSector::new(1);
        let exp = expand_hamiltonian(&m, HamiltonianForm::HamW4, 2).unwrap();
        let eps = 0.05;
        let fs: Vec<GaussPoly> = [[0u16, 0, 0], [1, 0, 0], [0, 1, 1], [2, 0, 0]]
            .iter()
            .enumerate()
            .map(|(i, o)| GaussPoly::oscillator(&s, o, i % 3, 3).unwrap())
            .collect();
        let hf: Vec<GaussPoly> = fs.iter().map(|f| apply_expansion(f, &exp.orders, &exp.constants, &sector, eps).unwrap()).collect();
        let g = grid(&m);
        for i in 0..fs.len() {
            for j in 0..fs.len() {
                let a = inner_product(&hf[i], &fs[j], &InnerWeight::Reduced, &g).unwrap();
                let b = inner_product(&hf[j], &fs[i], &InnerWeight::Reduced, &g).unwrap();
                assert!((a - b.conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn matrix_agrees_with_pairwise_products() {
        let m = EckartModel::triangle();
        let s = m.sigmas();
        let fs: Vec<GaussPoly> = [[0u16, 0, 0], [1, 1, 0], [0, 0, 2]]
            .iter()
            .map(|o| GaussPoly::oscillator(&s, o, 0, 1).unwrap())
            .collect();
        let refs: Vec<&dyn WaveFunction> = fs.iter().map(|f| f as &dyn WaveFunction).collect();
        let g = grid(&m);
        let mat = inner_matrix(&refs, &refs, &InnerWeight::Reduced, &g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v = inner_product(&fs[i], &fs[j], &InnerWeight::Reduced, &g).unwrap();
                assert!((mat[(i, j)] - v).norm() < 1e-14);
            }
        }
    }
}
