//! Spectrum tables, the closed-form triangle spectrum, and degenerate perturbation theory.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jacobi::eigenvalues;
use crate::error::{Error, Result};

/// Grouping tolerance for zeroth-order levels (ħω units).
pub const LEVEL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub energy: f64,
    pub n: Option<u32>,
    pub lambda: Option<i32>,
    pub n_zeta: Option<u32>,
    pub l: Option<u32>,
    pub m: Option<i32>,
    pub degeneracy: usize,
    /// Index of the zeroth-order level, when the row is a perturbative correction.
    pub level: Option<usize>,
}

impl SpectrumRow {
    pub fn unlabeled(energy: f64, degeneracy: usize) -> Self {
        SpectrumRow { energy, n: None, lambda: None, n_zeta: None, l: None, m: None, degeneracy, level: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl SpectrumTable {
    /// Stable ascending order: energy, then labels.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then(a.level.cmp(&b.level))
                .then(a.l.cmp(&b.l))
                .then(a.m.cmp(&b.m))
                .then(a.n.cmp(&b.n))
                .then(a.lambda.cmp(&b.lambda))
                .then(a.n_zeta.cmp(&b.n_zeta))
        });
    }

    pub fn total_degeneracy(&self) -> usize {
        self.rows.iter().map(|r| r.degeneracy).sum()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| std::iter::repeat(r.energy).take(r.degeneracy)).collect()
    }

    /// Groups a list of eigenvalues into rows with degeneracy counts.
    pub fn from_eigenvalues(values: &[f64], tol: f64) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mut rows: Vec<SpectrumRow> = Vec::new();
        let mut start = 0;
        for i in 1..=v.len() {
            if i == v.len() || (v[i] - v[i - 1]).abs() > tol {
                let e = v[start..i].iter().sum::<f64>() / (i - start) as f64;
                rows.push(SpectrumRow::unlabeled(e, i - start));
                start = i;
            }
        }
        SpectrumTable { rows }
    }

    /// CSV with columns `E,n,lambda,n_zeta,l,m,degeneracy`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidParameter(e.to_string());
        w.write_record(["E", "n", "lambda", "n_zeta", "l", "m", "degeneracy"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.15e}", r.energy),
                opt(&r.n),
                opt(&r.lambda),
                opt(&r.n_zeta),
                opt(&r.l),
                opt(&r.m),
                r.degeneracy.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// `E = √3(n_ζ + ½) + √(3/2)(2n + |λ| + 1) + ε²(ℓ(ℓ+1) − m² + ½(m+λ)²)`.
pub fn closed_form_energy_n3(n: u32, lambda: i32, n_zeta: u32, l: u32, m: i32, eps: f64) -> f64 {
    let e0 = 3f64.sqrt() * (n_zeta as f64 + 0.5) + 1.5f64.sqrt() * ((2 * n) as f64 + lambda.unsigned_abs() as f64 + 1.0);
    let ll = (l * (l + 1)) as f64;
    let e1 = ll - (m * m) as f64 + 0.5 * ((m + lambda) * (m + lambda)) as f64;
    e0 + eps * eps * e1
}

/// All states with `2n + |λ| + n_ζ ≤ n_max` and `ℓ ≤ ℓ_max`.
pub fn closed_form_spectrum_n3(n_max: u32, l_max: u32, eps: f64) -> SpectrumTable {
    let mut rows = Vec::new();
    for l in 0..=l_max {
        for m in -(l as i32)..=(l as i32) {
            for shell in 0..=n_max {
                for n_zeta in 0..=(n_max - shell) {
                    for lambda in -(shell as i32)..=(shell as i32) {
                        if (shell as i32 - lambda.abs()) % 2 != 0 {
                            continue;
                        }
                        let n = (shell - lambda.unsigned_abs()) / 2;
                        rows.push(SpectrumRow {
                            energy: closed_form_energy_n3(n, lambda, n_zeta, l, m, eps),
                            n: Some(n),
                            lambda: Some(lambda),
                            n_zeta: Some(n_zeta),
                            l: Some(l),
                            m: Some(m),
                            degeneracy: 1,
                            level: None,
                        });
                    }
                }
            }
        }
    }
    let mut t = SpectrumTable { rows };
    t.sort();
    t
}

/// Groups diagonal values into levels `(energy, indices)` ascending.
/// Values closer than `tol` merge; a gap within `10⁴·tol` of the threshold is ambiguous.
pub fn group_levels(diag: &[f64], tol: f64) -> Result<Vec<(f64, Vec<usize>)>> {
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for &i in &order {
        match out.last_mut() {
            Some((e, idx)) if (diag[i] - *e).abs() <= tol => idx.push(i),
            Some((e, _)) if (diag[i] - *e).abs() <= 1e4 * tol => return Err(Error::AmbiguousDegeneracy(diag[i])),
            _ => out.push((diag[i], vec![i])),
        }
    }
    for (_, idx) in out.iter_mut() {
        idx.sort_unstable();
    }
    Ok(out)
}

/// Eigenvalues of `h1` projected onto each eigenspace of the diagonal `h0`.
pub fn degenerate_perturbation(h0: &DMatrix<Complex64>, h1: &DMatrix<Complex64>) -> Result<SpectrumTable> {
    let n = h0.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && h0[(i, j)].norm() > 1e-12 {
                return Err(Error::InvalidParameter("h0 must be diagonal".into()));
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| h0[(i, i)].re).collect();
    let mut rows = Vec::new();
    for (lvl, (_, idx)) in group_levels(&diag, LEVEL_TOL)?.into_iter().enumerate() {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| h1[(idx[a], idx[b])]);
        for r in SpectrumTable::from_eigenvalues(&eigenvalues(&sub)?, LEVEL_TOL).rows {
            rows.push(SpectrumRow { level: Some(lvl), ..r });
        }
    }
    Ok(SpectrumTable { rows })
}

/// Attaches closed-form labels to numeric eigenvalues by sorted matching; fails if any pair differs by more than `rel_tol`.
pub fn label_by_matching(numeric: &[f64], closed: &SpectrumTable, rel_tol: f64) -> Result<SpectrumTable> {
    let mut v = numeric.to_vec();
    v.sort_by(f64::total_cmp);
    if v.len() != closed.rows.len() {
        return Err(Error::DimensionMismatch(format!("{} numeric vs {} closed-form states", v.len(), closed.rows.len())));
    }
    let mut rows = Vec::with_capacity(v.len());
    for (e, r) in v.iter().zip(&closed.rows) {
        if (e - r.energy).abs() > rel_tol * r.energy.abs().max(1.0) {
            return Err(Error::AmbiguousDegeneracy(*e));
        }
        rows.push(SpectrumRow { energy: *e, ..r.clone() });
    }
    Ok(SpectrumTable { rows })
}
