//! Gauge copies: rotations `U` with `𝔖_a(U r) = 0` for a lab configuration `r`.
//!
//! Body positions are `R_α = U r_α`, so rotating the lab configuration by `V` maps roots `U` to `U V⁻¹`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{eval_geometry, mdot, q_matrix, Configuration, FrameTag, GaugeSpec};
use crate::rotation::{exp_so3, geodesic_distance, Mat3, RotationChart, Vec3};

/// A supplementary sign condition `F_j > 0` on the body-frame configuration.
#[derive(Clone)]
pub struct Predicate {
    pub name: String,
    f: Arc<dyn Fn(&Configuration) -> bool + Send + Sync>,
}

impl Predicate {
    pub fn new(name: impl Into<String>, f: impl Fn(&Configuration) -> bool + Send + Sync + 'static) -> Self {
        Predicate { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, cfg: &Configuration) -> bool {
        (self.f)(cfg)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.name)
    }
}

/// `F₁ ≡ R₁ₓ > 0` for the axis gauge.
pub fn axis_gauge_predicates() -> Vec<Predicate> {
    vec![Predicate::new("R1X>0", |c: &Configuration| c.positions[0][0] > 0.0)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Cells per Euler angle.
    pub grid: usize,
    pub max_iter: usize,
    pub merge_radius: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { grid: 24, max_iter: 50, merge_radius: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    /// Row-major `U`.
    pub rotation: [[f64; 3]; 3],
    pub det_sign: i8,
    pub jac: f64,
    pub predicates: Vec<bool>,
    pub residual: f64,
}

impl Root {
    pub fn matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.rotation[i][j])
    }

    pub fn fully_fixed(&self) -> bool {
        self.det_sign > 0 && self.predicates.iter().all(|&p| p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopyReport {
    pub roots: Vec<Root>,
    pub total_count: usize,
    pub count_jac_positive: usize,
    pub count_fully_fixed: usize,
    pub seeds: usize,
    pub nonconverged: usize,
    pub warnings: Vec<String>,
}

impl CopyReport {
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in i + 1..self.roots.len() {
                d = d.min(geodesic_distance(&self.roots[i].matrix(), &self.roots[j].matrix()));
            }
        }
        d
    }
}

fn body(r: &[[f64; 3]], u: &Mat3) -> Vec<[f64; 3]> {
    r.iter()
        .map(|p| {
            let v = u * Vec3::from(*p);
            [v[0], v[1], v[2]]
        })
        .collect()
}

fn residual(spec: &GaugeSpec, pos: &[[f64; 3]]) -> Vec3 {
    let x: Vec<f64> = pos.iter().flatten().copied().collect();
    Vec3::from_fn(|a, _| mdot(&spec.masses, &spec.gamma[a], &x))
}

/// Newton with left-multiplicative updates `U ← exp(δ·T) U`; the Jacobian of `𝔖` in `δ` is `𝔔`.
fn newton(spec: &GaugeSpec, r: &[[f64; 3]], mut u: Mat3, max_iter: usize, tol: f64) -> Option<(Mat3, f64)> {
    let mut pos = body(r, &u);
    let mut f = residual(spec, &pos);
    for _ in 0..max_iter {
        if f.norm() < tol {
            return Some((u, f.norm()));
        }
        let q = q_matrix(spec, &pos);
        let delta = q.try_inverse()? * (-f);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = exp_so3(&(delta * step)) * u;
            let cpos = body(r, &cand);
            let cf = residual(spec, &cpos);
            if cf.norm() < f.norm() {
                u = cand;
                pos = cpos;
                f = cf;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return if f.norm() < tol { Some((u, f.norm())) } else { None };
        }
    }
    (f.norm() < tol).then_some((u, f.norm()))
}

fn lex_key(u: &Mat3) -> [f64; 9] {
    let mut k = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            k[3 * i + j] = u[(i, j)];
        }
    }
    k
}

pub fn find_copies(spec: &GaugeSpec, cfg_lab: &Configuration, predicates: &[Predicate], search: &SearchOptions) -> Result<CopyReport> {
    cfg_lab.check_finite()?;
    if cfg_lab.n_particles() != spec.n_particles() {
        return Err(Error::DimensionMismatch("configuration and spec particle counts differ".into()));
    }
    if search.grid < 2 {
        return Err(Error::InvalidParameter("grid must have at least 2 cells per angle".into()));
    }
    let r = &cfg_lab.positions;
    let x = cfg_lab.flat();
    let size = mdot(&spec.masses, &x, &x).sqrt();
    let scale = spec.norms.iter().sum::<f64>().sqrt() * size;
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let g = search.grid;
    let h = 2.0 * PI / g as f64;
    let seeds: Vec<[f64; 3]> = (0..g * g * g)
        .map(|c| {
            let (i, j, k) = (c / (g * g), (c / g) % g, c % g);
            [-PI + (i as f64 + 0.5) * h, (j as f64 + 0.5) * PI / g as f64, -PI + (k as f64 + 0.5) * h]
        })
        .collect();
    let results: Vec<Option<(Mat3, f64)>> = seeds
        .par_iter()
        .map(|t| {
            let u0 = RotationChart::euler(*t).rotation_matrix().ok()?;
            newton(spec, r, u0, search.max_iter, tol)
        })
        .collect();
    let nonconverged = results.iter().filter(|x| x.is_none()).count();
    let mut found: Vec<(Mat3, f64)> = results.into_iter().flatten().collect();
    found.sort_by(|a, b| {
        let (ka, kb) = (lex_key(&a.0), lex_key(&b.0));
        ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<(Mat3, f64)> = Vec::new();
    for (u, res) in found {
        if kept.iter().all(|(v, _)| geodesic_distance(&u, v) > search.merge_radius) {
            kept.push((u, res));
        }
    }
    let mut roots = Vec::with_capacity(kept.len());
    let mut min_jac = f64::INFINITY;
    for (u, res) in kept {
        let cfg = Configuration::new(body(r, &u), FrameTag::Body);
        let geo = eval_geometry(spec, &cfg)?;
        let jac = geo.det_q.abs() / spec.norms.iter().map(|n| n.sqrt()).product::<f64>();
        min_jac = min_jac.min(jac);
        roots.push(Root {
            rotation: [0, 1, 2].map(|i| [0, 1, 2].map(|j| u[(i, j)])),
            det_sign: geo.det_sign(),
            jac,
            predicates: predicates.iter().map(|p| p.eval(&cfg)).collect(),
            residual: res,
        });
    }
    if !roots.is_empty() && min_jac <= 1e-6 * size.powi(3) {
        return Err(Error::Horizon(min_jac));
    }
    let mut warnings = Vec::new();
    if nonconverged as f64 > 0.05 * seeds.len() as f64 {
        warnings.push(format!("Newton failed on {nonconverged} of {} seeds", seeds.len()));
    }
    Ok(CopyReport {
        total_count: roots.len(),
        count_jac_positive: roots.iter().filter(|r| r.det_sign > 0).count(),
        count_fully_fixed: roots.iter().filter(|r| r.fully_fixed()).count(),
        roots,
        seeds: seeds.len(),
        nonconverged,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Per sample: (total, with det 𝔔 > 0, fully fixed).
    pub counts: Vec<(usize, usize, usize)>,
    /// Copy multiplicity per sample: fully fixed count with predicates, `det 𝔔 > 0` count without.
    pub multiplicities: Vec<usize>,
    pub constant_multiplicity: Option<usize>,
    pub all_fixed: bool,
    pub ambiguity: Option<String>,
}

pub fn verify_identity_resolution(
    spec: &GaugeSpec,
    samples: &[Configuration],
    predicates: &[Predicate],
    search: &SearchOptions,
) -> Result<IdentityReport> {
    let mut counts = Vec::with_capacity(samples.len());
    for s in samples {
        let rep = find_copies(spec, s, predicates, search)?;
        counts.push((rep.total_count, rep.count_jac_positive, rep.count_fully_fixed));
    }
    let multiplicities: Vec<usize> =
        counts.iter().map(|c| if predicates.is_empty() { c.1 } else { c.2 }).collect();
    let constant = multiplicities.first().filter(|&&m| multiplicities.iter().all(|&x| x == m)).copied();
    let ambiguity = match constant {
        Some(_) => None,
        None if multiplicities.is_empty() => None,
        None => Some(format!(
            "copy multiplicity varies between {} and {}",
            multiplicities.iter().min().unwrap_or(&0),
            multiplicities.iter().max().unwrap_or(&0)
        )),
    };
    Ok(IdentityReport {
        all_fixed: !predicates.is_empty() && constant == Some(1),
        counts,
        multiplicities,
        constant_multiplicity: constant,
        ambiguity,
    })
}

/// Random lab configuration of `n` particles with coordinates uniform in `[-1, 1]`.
pub fn random_configuration<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Configuration {
    Configuration::new((0..n).map(|_| [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0))).collect(), FrameTag::Lab)
}
