//! The experiments behind `rotframe run`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::gauge::{eval_geometry, eval_quantum_potentials, extend_basis, FrameTag, GaugeSpec};
use crate::geometry::{fd_inverse_metric, metric_blocks, quantum_potential_oracle, CoordinateMap, FD_STEP};
use crate::gribov::{axis_gauge_predicates, find_copies, random_configuration, SearchOptions};
use crate::rotation::{random_rotation, Mat3, RotationChart};
use crate::spectra::{spectrum3, spectrum4, SpectrumTable};
use crate::weylalg::eckart::EckartModel;
use crate::weylalg::gaugeops::{audit_commutators, lambda_anomaly_residuals, random_rational_spec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed, detail: detail.into() }
    }
}

/// Flat table with named columns, rendered as CSV or as a JSON array of records.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidParameter(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| match v {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            }))
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                .collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub enum Data {
    Table(Table),
    Spectrum(SpectrumTable),
}

impl Data {
    pub fn to_csv(&self) -> Result<String> {
        match self {
            Data::Table(t) => t.to_csv(),
            Data::Spectrum(s) => s.to_csv(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Data::Table(t) => t.to_json(),
            Data::Spectrum(s) => s.to_json(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub data: Data,
    pub assertions: Vec<Assertion>,
    /// Extra summary values recorded in the manifest.
    pub summary: Value,
}

pub fn run_experiment(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    match cfg.experiment()? {
        ExperimentKind::GaugeValidate => gauge_validate(cfg, rng),
        ExperimentKind::CommutatorAudit => commutator_audit(cfg, rng),
        ExperimentKind::Spectrum3 => run_spectrum3(cfg),
        ExperimentKind::Spectrum4 => run_spectrum4(cfg),
        ExperimentKind::GribovCount => gribov_count(cfg, rng),
        ExperimentKind::AppendixOracle => appendix_oracle(cfg, rng),
    }
}

fn gauge_validate(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = cfg.numeric.tolerances.basis;
    let spec = cfg.gauge_spec()?;
    spec.validate()?;
    let n = spec.n_particles();
    let basis = extend_basis(&spec, &[], 1.0)?;
    let (orth, comp) = (basis.orthogonality_residual(), basis.completeness_residual());
    let mut t = Table::new(&["sample", "det_q", "jac", "ninv_residual", "equivariance_residual", "v1", "v2"]);
    let (mut worst_inv, mut worst_eq, mut horizons) = (0.0f64, 0.0f64, 0usize);
    for s in 0..cfg.numeric.seeds.unwrap_or(20) {
        let c = random_configuration(rng, n);
        let geo = eval_geometry(&spec, &c)?;
        let Some(ninv) = geo.ninv else {
            horizons += 1;
            t.push(vec![json!(s), json!(geo.det_q), json!(0.0), Value::Null, Value::Null, Value::Null, Value::Null]);
            continue;
        };
        let inv = (geo.n * ninv - Mat3::identity()).norm();
        // rotating the configuration and the gauge rows together leaves 𝔖 and 𝒥 unchanged
        let v = random_rotation(rng);
        let rotated = eval_geometry(&spec.rotated(&v), &c.rotated(&v, FrameTag::Lab))?;
        let eq = (rotated.jac - geo.jac).abs() / geo.jac.max(1e-300);
        let (v1, v2) = eval_quantum_potentials(&spec, &c)?;
        worst_inv = worst_inv.max(inv);
        worst_eq = worst_eq.max(eq);
        t.push(vec![json!(s), json!(geo.det_q), json!(geo.jac), json!(inv), json!(eq), json!(v1), json!(v2)]);
    }
    let assertions = vec![
        Assertion::new("basis-orthogonal", orth <= tol, format!("{orth:e}")),
        Assertion::new("basis-complete", comp <= tol, format!("{comp:e}")),
        Assertion::new("ninv-inverse", worst_inv <= tol, format!("{worst_inv:e}")),
        Assertion::new("rotation-covariant", worst_eq <= tol, format!("{worst_eq:e}")),
    ];
    Ok(Outcome {
        data: Data::Table(t),
        assertions,
        summary: json!({"n_particles": n, "horizon_samples": horizons}),
    })
}

/// Particle number and translation flag of the `i`-th audited spec: `N` cycles through 2..5.
pub fn audit_shape(i: usize) -> (usize, bool) {
    let n = 2 + i % 4;
    (n, n > 2 && (i / 4) % 2 == 1)
}

fn commutator_audit(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut t = Table::new(&[
        "spec",
        "n_particles",
        "translation_invariant",
        "rp_checked",
        "rp_failures",
        "pp_failures",
        "gauge_momenta_zero",
        "total_momentum_zero",
        "lambda_gauge_commutes",
        "anomaly_zero",
    ]);
    let (mut audits_ok, mut anomaly_ok) = (0usize, 0usize);
    let samples = cfg.numeric.seeds.unwrap_or(50);
    for i in 0..samples {
        let (n, ti) = audit_shape(i);
        let spec = random_rational_spec(rng, n, ti);
        let a = audit_commutators(&spec)?;
        let anomaly = lambda_anomaly_residuals(&spec)?.iter().all(|r| r.is_zero());
        audits_ok += a.passed() as usize;
        anomaly_ok += anomaly as usize;
        t.push(vec![
            json!(i),
            json!(n),
            json!(ti),
            json!(a.rp_checked),
            json!(a.rp_failures),
            json!(a.pp_failures),
            json!(a.gauge_momenta_zero),
            json!(a.total_momentum_zero),
            json!(a.lambda_gauge_commutes),
            json!(anomaly),
        ]);
    }
    let assertions = vec![
        Assertion::new("commutators-exact", audits_ok == samples, format!("{audits_ok}/{samples}")),
        Assertion::new("anomaly-formula", anomaly_ok == samples, format!("{anomaly_ok}/{samples}")),
    ];
    Ok(Outcome { data: Data::Table(t), assertions, summary: json!({"specs": samples}) })
}

fn run_spectrum3(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = &cfg.numeric;
    let r = spectrum3(n.epsilon, n.n_max, n.l_max)?;
    let tol = n.tolerances.spectrum_rel;
    let want = 3f64.sqrt() / 2.0 + 1.5f64.sqrt();
    let ground_err = (r.ground - want).abs() / want;
    let assertions = vec![
        Assertion::new("closed-form-match", r.max_rel_error <= tol, format!("{:e}", r.max_rel_error)),
        Assertion::new("ground-energy", ground_err <= tol, format!("{} vs {want}", r.ground)),
    ];
    Ok(Outcome {
        data: Data::Spectrum(r.table),
        assertions,
        summary: json!({"states": r.states, "ground": r.ground, "max_rel_error": r.max_rel_error}),
    })
}

fn run_spectrum4(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = &cfg.numeric;
    let ids = EckartModel::tetrahedron()?.tetrahedron_identities()?;
    let table = spectrum4(n.epsilon, n.n_max, n.l_max, n.levels)?;
    let assertions = vec![Assertion::new("tetrahedron-identities", ids.all_hold(), serde_json::to_string(&ids).unwrap_or_default())];
    Ok(Outcome { data: Data::Spectrum(table), assertions, summary: json!({"identities": ids}) })
}

fn gribov_count(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let spec = cfg.gauge_spec()?;
    let axis = cfg.is_axis_gauge();
    let preds = if axis { axis_gauge_predicates() } else { Vec::new() };
    let search = SearchOptions { grid: cfg.numeric.grid, ..SearchOptions::default() };
    let samples = cfg.numeric.seeds.unwrap_or(100);
    let mut t = Table::new(&["sample", "total", "jac_positive", "fully_fixed", "nonconverged", "min_root_distance"]);
    let mut counts = Vec::with_capacity(samples);
    let mut warnings = Vec::new();
    for s in 0..samples {
        let c = random_configuration(rng, spec.n_particles());
        let r = find_copies(&spec, &c, &preds, &search)?;
        warnings.extend(r.warnings.iter().map(|w| format!("sample {s}: {w}")));
        counts.push((r.total_count, r.count_jac_positive, r.count_fully_fixed));
        t.push(vec![
            json!(s),
            json!(r.total_count),
            json!(r.count_jac_positive),
            json!(r.count_fully_fixed),
            json!(r.nonconverged),
            json!(r.min_pairwise_distance()),
        ]);
    }
    let constant = counts.windows(2).all(|w| w[0] == w[1]);
    let mut assertions = vec![Assertion::new("constant-counts", constant, format!("{:?}", counts.first()))];
    if axis {
        let ok = counts.iter().all(|&c| c == (4, 2, 1));
        let bad = counts.iter().filter(|&&c| c != (4, 2, 1)).count();
        assertions.push(Assertion::new("axis-gauge-4-2-1", ok, format!("{bad} samples differ")));
    }
    Ok(Outcome { data: Data::Table(t), assertions, summary: json!({"samples": samples, "warnings": warnings}) })
}

/// Random point of the exponential chart away from the horizon.
pub fn random_map(rng: &mut ChaCha8Rng, spec: &GaugeSpec) -> Result<CoordinateMap> {
    let basis = extend_basis(spec, &[], 1.0)?;
    let k = basis.dim() - 3;
    for _ in 0..1000 {
        let theta = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
        let coords: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.5..1.5)).collect();
        match CoordinateMap::new(spec, &basis, RotationChart::exponential(theta), &coords) {
            Ok(m) if m.jac > 1e-2 => return Ok(m),
            Ok(_) | Err(Error::Horizon(_)) | Err(Error::ChartSingular(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::NonConvergence("no sample point away from the horizon".into()))
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn appendix_oracle(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = cfg.numeric.tolerances;
    let spec = cfg.gauge_spec()?;
    let mut t = Table::new(&["sample", "metric_rel", "jac_rel", "vq_closed", "vq_oracle", "vq_abs_err", "scaling_rel"]);
    let (mut wm, mut wj, mut wv, mut ws) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..cfg.numeric.seeds.unwrap_or(20) {
        let m = random_map(rng, &spec)?;
        let mb = metric_blocks(&m);
        let (fd, det) = fd_inverse_metric(&m, FD_STEP)?;
        let mr = rel(&mb.full(), &fd);
        let jr = (mb.jac - det).abs() / det;
        let split = quantum_potential_oracle(&m)?;
        let body = m.body();
        let (v1, v2) = eval_quantum_potentials(&spec, &body)?;
        let err = (split.intrinsic() - (v1 + v2)).abs() / (v1.abs() + v2.abs()).max(1.0);
        let (b1, b2) = eval_quantum_potentials(&spec, &body.scaled(2.5))?;
        let sr = ((b1 + b2) * 6.25 - (v1 + v2)).abs() / (v1.abs() + v2.abs()).max(1e-300);
        wm = wm.max(mr);
        wj = wj.max(jr);
        wv = wv.max(err);
        ws = ws.max(sr);
        t.push(vec![json!(s), json!(mr), json!(jr), json!(v1 + v2), json!(split.intrinsic()), json!(err), json!(sr)]);
    }
    let assertions = vec![
        Assertion::new("metric-blocks", wm <= tol.metric_rel, format!("{wm:e}")),
        Assertion::new("volume-element", wj <= tol.metric_rel, format!("{wj:e}")),
        Assertion::new("quantum-potential", wv <= tol.potential_abs, format!("{wv:e}")),
        Assertion::new("inverse-square-scaling", ws <= 1e-8, format!("{ws:e}")),
    ];
    Ok(Outcome { data: Data::Table(t), assertions, summary: json!({"n_particles": spec.n_particles()}) })
}

