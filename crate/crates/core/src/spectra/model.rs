//! Eckart Hamiltonians in normal coordinates, expanded in `ε = √(ħ/(mωa²))`.
//!
//! Units ħ = m = ω = 1, so the side is `a = 1/ε`, `Z = Ẑ/ε` and `𝒩⁻¹ = ε² N̂₀ + O(ε³)` with
//! `N̂₀ = diag(1/ℜ̂_a²)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::basis::{spin_matrices, OscillatorBasis, Renderer};
use crate::error::{Error, Result};
use crate::gauge::eval_quantum_potentials;
use crate::rotation::levi_civita;
use crate::weylalg::eckart::EckartModel;
use crate::weylalg::surd::rat;
use crate::weylalg::{AngularSector, DiffOperator};

/// `scalar ⊗ 1 + Σ_k lin_k ⊗ s_k + Σ_{jk} quad_{jk} ⊗ s_j s_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngOp {
    pub scalar: DiffOperator,
    pub lin: [DiffOperator; 3],
    pub quad: [[DiffOperator; 3]; 3],
}

impl AngOp {
    pub fn zero(k: usize) -> Self {
        let z = DiffOperator::zero(k);
        AngOp { scalar: z.clone(), lin: [z.clone(), z.clone(), z.clone()], quad: [0, 1, 2].map(|_| [z.clone(), z.clone(), z.clone()]) }
    }

    pub fn from_scalar(op: DiffOperator) -> Self {
        let mut a = Self::zero(op.n_coords());
        a.scalar = op;
        a
    }

    pub fn add(&self, o: &Self) -> Self {
        AngOp {
            scalar: self.scalar.add(&o.scalar),
            lin: [0, 1, 2].map(|k| self.lin[k].add(&o.lin[k])),
            quad: [0, 1, 2].map(|j| [0, 1, 2].map(|k| self.quad[j][k].add(&o.quad[j][k]))),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale_rational(&rat(-1, 1)))
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        AngOp {
            scalar: self.scalar.scale_rational(r),
            lin: [0, 1, 2].map(|k| self.lin[k].scale_rational(r)),
            quad: [0, 1, 2].map(|j| [0, 1, 2].map(|k| self.quad[j][k].scale_rational(r))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero() && self.spin_free()
    }

    /// No dependence on `s`.
    pub fn spin_free(&self) -> bool {
        self.lin.iter().all(DiffOperator::is_zero) && self.quad.iter().flatten().all(DiffOperator::is_zero)
    }

    pub fn render(&self, r: &mut Renderer<'_>, sector: &AngularSector) -> Result<DMatrix<Complex64>> {
        let s = spin_matrices(sector);
        let d = sector.dim();
        let id = DMatrix::<Complex64>::identity(d, d);
        let mut out = r.render(&self.scalar)?.kronecker(&id);
        for k in 0..3 {
            if !self.lin[k].is_zero() {
                out += r.render(&self.lin[k])?.kronecker(&s[k]);
            }
            for j in 0..3 {
                if !self.quad[j][k].is_zero() {
                    out += r.render(&self.quad[j][k])?.kronecker(&(&s[j] * &s[k]));
                }
            }
        }
        Ok(out)
    }
}

/// `−½ Σ ∂_b²` in normal coordinates.
pub fn kinetic(k: usize) -> DiffOperator {
    let mut t = DiffOperator::zero(k);
    for b in 0..k {
        let d = DiffOperator::deriv(k, b);
        t = t.add(&d.compose(&d));
    }
    t.scale_rational(&rat(-1, 2))
}

/// `½ Σ_j w_j (s_j + Λ_j)²` with `w = N̂₀`.
pub fn angular_kinetic(model: &EckartModel) -> AngOp {
    let k = model.n_modes();
    let lam = model.lambda();
    let w = model.inverse_moments();
    let mut a = AngOp::zero(k);
    let half = rat(1, 2);
    for j in 0..3 {
        a.scalar = a.scalar.add(&lam[j].compose(&lam[j]).scale_rational(&(&w[j] * &half)));
        a.lin[j] = lam[j].scale_rational(&w[j]);
        a.quad[j][j] = crate::weylalg::gaugeops::one_op(k).scale_rational(&(&w[j] * &half));
    }
    a
}

/// Order-`ε²` coefficient of the Weyl-ordered Coriolis term with `𝒟^β_{ij} = ε_{ijk} δR_{βk}`.
pub fn weyl_coriolis(model: &EckartModel) -> AngOp {
    let k = model.n_modes();
    let n = model.n_particles();
    let dr = model.delta_r();
    let p = model.momenta();
    let w = model.inverse_moments();
    // d[j][3β + r] = 𝒟^β_{rj}
    let d: Vec<Vec<DiffOperator>> = (0..3)
        .map(|j| {
            (0..3 * n)
                .map(|c| {
                    let (be, r) = (c / 3, c % 3);
                    let mut op = DiffOperator::zero(k);
                    for kk in 0..3 {
                        let e = levi_civita(r, j, kk);
                        if e != 0 {
                            op = op.add(&dr[3 * be + kk].scale_rational(&rat(e, 1)));
                        }
                    }
                    op
                })
                .collect()
        })
        .collect();
    let mut a = AngOp::zero(k);
    for j in 0..3 {
        let mut acc = DiffOperator::zero(k);
        for x in 0..3 * n {
            if d[j][x].is_zero() || p[x].is_zero() {
                continue;
            }
            for y in 0..3 * n {
                if d[j][y].is_zero() || p[y].is_zero() {
                    continue;
                }
                let dd = d[j][x].compose(&d[j][y]);
                let pp = p[x].compose(&p[y]);
                acc = acc
                    .add(&dd.compose(&pp))
                    .add(&p[x].compose(&dd).compose(&p[y]).scale_rational(&rat(2, 1)))
                    .add(&pp.compose(&dd));
            }
        }
        a.scalar = a.scalar.add(&acc.scale_rational(&(&w[j] * rat(1, 8))));
        let mut l = DiffOperator::zero(k);
        for x in 0..3 * n {
            l = l.add(&d[j][x].compose(&p[x])).add(&p[x].compose(&d[j][x]));
        }
        a.lin[j] = l.scale_rational(&(&w[j] * rat(1, 2)));
        a.quad[j][j] = crate::weylalg::gaugeops::one_op(k).scale_rational(&(&w[j] * rat(1, 2)));
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianForm {
    HamS3,
    Redham,
    HamW4,
}

/// `H = Σ_k ε^k (orders[k] + constants[k])`.
#[derive(Clone, Debug)]
pub struct HamiltonianExpansion {
    pub orders: Vec<AngOp>,
    pub constants: Vec<f64>,
}

impl HamiltonianExpansion {
    pub fn order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn render_orders(&self, basis: &OscillatorBasis, sector: &AngularSector) -> Result<Vec<DMatrix<Complex64>>> {
        let mut r = Renderer::new(basis);
        let dim = basis.dim() * sector.dim();
        self.orders
            .iter()
            .zip(&self.constants)
            .map(|(o, c)| Ok(o.render(&mut r, sector)? + DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(*c, 0.0)))
            .collect()
    }

    pub fn render(&self, basis: &OscillatorBasis, sector: &AngularSector, eps: f64) -> Result<DMatrix<Complex64>> {
        let mats = self.render_orders(basis, sector)?;
        let mut out = mats[0].clone();
        for (k, m) in mats.iter().enumerate().skip(1) {
            out += m * Complex64::new(eps.powi(k as i32), 0.0);
        }
        Ok(out)
    }
}

/// `𝒱₁ + 𝒱₂` at the unit-side equilibrium; the physical value is this times `ε²`.
pub fn quantum_potential_constant(model: &EckartModel) -> Result<f64> {
    let spec = model.spec.to_gauge_spec()?;
    let (v1, v2) = eval_quantum_potentials(&spec, &model.z_config())?;
    Ok(v1 + v2)
}

/// `ln 𝒥` through second order: `ε tr A − ε²/2 tr A²`, `A = N̂₀ δ𝔔̂`. Returns `(tr A, tr A²)`.
pub fn log_jacobian_terms(model: &EckartModel) -> (DiffOperator, DiffOperator) {
    let k = model.n_modes();
    let q = model.gauge_delta_q();
    let w = model.inverse_moments();
    let a: Vec<Vec<DiffOperator>> = (0..3).map(|r| (0..3).map(|c| q[r][c].scale_rational(&w[r])).collect()).collect();
    let mut tr = DiffOperator::zero(k);
    let mut tr2 = DiffOperator::zero(k);
    for i in 0..3 {
        tr = tr.add(&a[i][i]);
        for j in 0..3 {
            tr2 = tr2.add(&a[i][j].compose(&a[j][i]));
        }
    }
    (tr, tr2)
}

/// `−½ Σ_b (∂_b f) ∂_b`.
fn gradient_term(f: &DiffOperator) -> DiffOperator {
    let k = f.n_coords();
    let mut out = DiffOperator::zero(k);
    for b in 0..k {
        let d = DiffOperator::deriv(k, b);
        let df = d.compose(f).sub(&f.compose(&d));
        out = out.add(&df.compose(&d));
    }
    out.scale_rational(&rat(-1, 2))
}

/// Expansion of the chosen form through `order ≤ 2`.
///
/// `hamS3` acts on physical states with `L → −s`, which makes it coincide with `redham`.
pub fn expand_hamiltonian(model: &EckartModel, form: HamiltonianForm, order: usize) -> Result<HamiltonianExpansion> {
    if order > 2 {
        return Err(Error::InvalidParameter(format!("unsupported expansion order {order}")));
    }
    let k = model.n_modes();
    let h0 = AngOp::from_scalar(kinetic(k).add(&model.quadratic_potential()));
    let mut orders = vec![h0, AngOp::zero(k), AngOp::zero(k)];
    let mut constants = vec![0.0; 3];
    match form {
        HamiltonianForm::HamW4 => {
            orders[2] = weyl_coriolis(model);
            constants[2] = quantum_potential_constant(model)?;
        }
        HamiltonianForm::Redham | HamiltonianForm::HamS3 => {
            let (tr, tr2) = log_jacobian_terms(model);
            orders[1] = AngOp::from_scalar(gradient_term(&tr));
            let a = angular_kinetic(model);
            let a = if form == HamiltonianForm::HamS3 { hams3_angular(model) } else { a };
            orders[2] = a.add(&AngOp::from_scalar(gradient_term(&tr2.scale_rational(&rat(-1, 2)))));
        }
    }
    orders.truncate(order + 1);
    constants.truncate(order + 1);
    Ok(HamiltonianExpansion { orders, constants })
}

/// `½ (L − Λ) N̂₀ (L − Λ)` with `L` represented by `−s`.
fn hams3_angular(model: &EckartModel) -> AngOp {
    let k = model.n_modes();
    let lam = model.lambda();
    let w = model.inverse_moments();
    let mut a = AngOp::zero(k);
    let half = rat(1, 2);
    for j in 0..3 {
        // (−s − Λ)² = s² + sΛ + Λs + Λ²
        let ml = lam[j].scale_rational(&rat(-1, 1));
        a.scalar = a.scalar.add(&ml.compose(&ml).scale_rational(&(&w[j] * &half)));
        a.lin[j] = ml.scale_rational(&(&w[j] * rat(-1, 1)));
        a.quad[j][j] = crate::weylalg::gaugeops::one_op(k).scale_rational(&(&w[j] * &half));
    }
    a
}

/// Matrix of the chosen form at the given `ε`.
pub fn assemble_full_hamiltonian(
    model: &EckartModel,
    basis: &OscillatorBasis,
    sector: &AngularSector,
    form: HamiltonianForm,
    order: usize,
    eps: f64,
) -> Result<DMatrix<Complex64>> {
    check_basis(model, basis)?;
    expand_hamiltonian(model, form, order)?.render(basis, sector, eps)
}

fn check_basis(model: &EckartModel, basis: &OscillatorBasis) -> Result<()> {
    if basis.mode_count() != model.n_modes() {
        return Err(Error::DimensionMismatch(format!("basis has {} modes, model {}", basis.mode_count(), model.n_modes())));
    }
    Ok(())
}

/// Diagonal `Σ σ_a (n_a + ½)`.
pub fn build_h0(basis: &OscillatorBasis) -> DMatrix<Complex64> {
    let d = nalgebra::DVector::from_fn(basis.dim(), |i, _| Complex64::new(basis.energy(i), 0.0));
    DMatrix::from_diagonal(&d)
}

/// `h0` on oscillator ⊗ angular space.
pub fn build_h0_full(basis: &OscillatorBasis, sector: &AngularSector) -> DMatrix<Complex64> {
    build_h0(basis).kronecker(&DMatrix::<Complex64>::identity(sector.dim(), sector.dim()))
}

/// `ε² · ½ Σ_j (s_j + Λ_j) N̂₀_{jj} (s_j + Λ_j)`.
pub fn build_h1(model: &EckartModel, sector: &AngularSector, basis: &OscillatorBasis, eps: f64) -> Result<DMatrix<Complex64>> {
    check_basis(model, basis)?;
    let mut r = Renderer::new(basis);
    Ok(angular_kinetic(model).render(&mut r, sector)? * Complex64::new(eps * eps, 0.0))
}

#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    pub h0: DMatrix<Complex64>,
    pub h1: DMatrix<Complex64>,
    pub epsilon: f64,
    pub order: usize,
    pub l: u32,
}

impl HamiltonianModel {
    pub fn new(model: &EckartModel, basis: &OscillatorBasis, l: u32, eps: f64) -> Result<Self> {
        let sector = AngularSector::new(l);
        Ok(HamiltonianModel {
            h0: build_h0_full(basis, &sector),
            h1: build_h1(model, &sector, basis, eps)?,
            epsilon: eps,
            order: 2,
            l,
        })
    }

    pub fn total(&self) -> DMatrix<Complex64> {
        &self.h0 + &self.h1
    }
}

/// Levels of `H₀ + εH₁ + ε²H₂` from second-order Rayleigh–Schrödinger effective Hamiltonians
/// on the degenerate spaces of the (diagonal) zeroth order. Returns `(E₀, eigenvalues)` per level.
pub fn effective_levels(
    exp: &HamiltonianExpansion,
    basis: &OscillatorBasis,
    sector: &AngularSector,
    eps: f64,
    n_levels: usize,
) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let mats = exp.render_orders(basis, sector)?;
    let dim = mats[0].nrows();
    let m0 = &mats[0];
    for i in 0..dim {
        for j in 0..dim {
            if i != j && m0[(i, j)].norm() > 1e-10 {
                return Err(Error::InvalidParameter("zeroth order is not diagonal".into()));
            }
        }
    }
    let e0: Vec<f64> = (0..dim).map(|i| m0[(i, i)].re).collect();
    let levels = super::table::group_levels(&e0, 1e-9)?;
    let zero = DMatrix::<Complex64>::zeros(dim, dim);
    let m1 = mats.get(1).unwrap_or(&zero);
    let m2 = mats.get(2).unwrap_or(&zero);
    let mut out = Vec::new();
    for (e, idx) in levels.into_iter().take(n_levels) {
        let p = idx.len();
        let mut heff = DMatrix::<Complex64>::zeros(p, p);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                let mut v = m1[(i, j)] * eps + m2[(i, j)] * (eps * eps);
                for kk in 0..dim {
                    if (e0[kk] - e).abs() > 1e-9 {
                        v += m1[(i, kk)] * m1[(kk, j)] / (e - e0[kk]) * (eps * eps);
                    }
                }
                heff[(a, b)] = v;
            }
            heff[(a, a)] += e;
        }
        let t = nalgebra::linalg::Schur::new(heff).unpack().1;
        let mut ev: Vec<Complex64> = (0..p).map(|i| t[(i, i)]).collect();
        ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        out.push((e, ev));
    }
    Ok(out)
}
