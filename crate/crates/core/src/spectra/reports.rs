//! Labeled spectra for the triangle and tetrahedron models.

use serde::Serialize;

use super::basis::OscillatorBasis;
use super::jacobi::{diagonalize, eigenvalues};
use super::model::{build_h0_full, build_h1, HamiltonianModel};
use super::table::{closed_form_spectrum_n3, group_levels, SpectrumRow, SpectrumTable, LEVEL_TOL};
use crate::error::{Error, Result};
use crate::weylalg::eckart::EckartModel;
use crate::weylalg::AngularSector;

#[derive(Clone, Debug, Serialize)]
pub struct Spectrum3Report {
    pub table: SpectrumTable,
    /// Largest `|E_num − E_closed| / |E_closed|` over the safe shell.
    pub max_rel_error: f64,
    pub ground: f64,
    pub states: usize,
}

/// Safe-shell eigenvalues of `h0 + h1` for the triangle, labeled by sorted matching against the closed form.
pub fn spectrum3(eps: f64, n_max: usize, l_max: u32) -> Result<Spectrum3Report> {
    if !(eps > 0.0) || n_max < 2 {
        return Err(Error::InvalidParameter("need ε > 0 and n_max ≥ 2".into()));
    }
    let model = EckartModel::triangle();
    let basis = OscillatorBasis::new(model.sigmas(), n_max)?;
    let safe = basis.safe_shell();
    let cap = n_max - 2;
    let closed = closed_form_spectrum_n3(cap as u32, l_max, eps);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for l in 0..=l_max {
        let d = 2 * l as usize + 1;
        let h = HamiltonianModel::new(&model, &basis, l, eps)?.total();
        let eig = diagonalize(&h)?;
        let mut numeric = Vec::new();
        for (k, &e) in eig.values.iter().enumerate() {
            let w: f64 = safe
                .iter()
                .flat_map(|&v| (0..d).map(move |m| v * d + m))
                .map(|i| eig.vectors[(i, k)].norm_sqr())
                .sum();
            if w > 0.5 {
                numeric.push(e);
            }
        }
        numeric.sort_by(f64::total_cmp);
        let want: Vec<&SpectrumRow> = closed.rows.iter().filter(|r| r.l == Some(l)).collect();
        if want.len() != numeric.len() {
            return Err(Error::DimensionMismatch(format!("ℓ = {l}: {} numeric vs {} closed-form states", numeric.len(), want.len())));
        }
        for (e, r) in numeric.iter().zip(want) {
            worst = worst.max((e - r.energy).abs() / r.energy.abs());
            rows.push(SpectrumRow { energy: *e, ..r.clone() });
        }
    }
    let mut table = SpectrumTable { rows };
    table.sort();
    let ground = table.rows.first().map(|r| r.energy).unwrap_or(f64::NAN);
    let states = table.rows.len();
    Ok(Spectrum3Report { table, max_rel_error: worst, ground, states })
}

/// First-order corrections `ε²⟨h1⟩` on the lowest `n_levels` degenerate `h0` levels of the tetrahedron,
/// for each `ℓ ≤ l_max`. Rows carry `E₀ + ΔE`, the level index and `ℓ`.
pub fn spectrum4(eps: f64, n_max: usize, l_max: u32, n_levels: usize) -> Result<SpectrumTable> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("need ε > 0".into()));
    }
    let model = EckartModel::tetrahedron()?;
    let basis = OscillatorBasis::new(model.sigmas(), n_max)?;
    let mut rows = Vec::new();
    for l in 0..=l_max {
        let sector = AngularSector::new(l);
        let h0 = build_h0_full(&basis, &sector);
        let h1 = build_h1(&model, &sector, &basis, eps)?;
        let diag: Vec<f64> = (0..h0.nrows()).map(|i| h0[(i, i)].re).collect();
        let levels = group_levels(&diag, LEVEL_TOL)?;
        if levels.len() < n_levels {
            return Err(Error::InvalidParameter(format!("basis holds only {} levels", levels.len())));
        }
        for (lvl, (e0, idx)) in levels.into_iter().take(n_levels).enumerate() {
            let sub = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |a, b| h1[(idx[a], idx[b])]);
            for r in SpectrumTable::from_eigenvalues(&eigenvalues(&sub)?, LEVEL_TOL).rows {
                rows.push(SpectrumRow { energy: e0 + r.energy, l: Some(l), level: Some(lvl), ..r });
            }
        }
    }
    let mut t = SpectrumTable { rows };
    t.sort();
    Ok(t)
}
