//! JSON experiment configuration, schema version 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{axis_gauge, eckart_gauge, Configuration, GaugeSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GaugeValidate,
    CommutatorAudit,
    Spectrum3,
    Spectrum4,
    GribovCount,
    AppendixOracle,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GaugeValidate => "gauge-validate",
            ExperimentKind::CommutatorAudit => "commutator-audit",
            ExperimentKind::Spectrum3 => "spectrum3",
            ExperimentKind::Spectrum4 => "spectrum4",
            ExperimentKind::GribovCount => "gribov-count",
            ExperimentKind::AppendixOracle => "appendix-oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentList {
    One(ExperimentKind),
    Many(Vec<ExperimentKind>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub omega: f64,
    pub a: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub masses: Option<Vec<f64>>,
    /// Equilibrium positions; selects the Eckart gauge when `gamma` is absent.
    #[serde(default)]
    pub equilibrium: Option<Vec<[f64; 3]>>,
    /// Explicit gauge rows `Γ_{aαi}`, three rows of length `3N`.
    #[serde(default)]
    pub gamma: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub translation_invariant: Option<bool>,
    #[serde(default)]
    pub potential: Option<PotentialConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "d_spectrum")]
    pub spectrum_rel: f64,
    #[serde(default = "d_metric")]
    pub metric_rel: f64,
    #[serde(default = "d_potential")]
    pub potential_abs: f64,
    #[serde(default = "d_basis")]
    pub basis: f64,
}

fn d_spectrum() -> f64 {
    1e-10
}
fn d_metric() -> f64 {
    1e-6
}
fn d_potential() -> f64 {
    1e-5
}
fn d_basis() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { spectrum_rel: d_spectrum(), metric_rel: d_metric(), potential_abs: d_potential(), basis: d_basis() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    #[serde(default = "d_eps")]
    pub epsilon: f64,
    #[serde(default = "d_nmax")]
    pub n_max: usize,
    #[serde(default = "d_lmax")]
    pub l_max: u32,
    /// Cells per Euler angle for the Gribov seed grid.
    #[serde(default = "d_grid")]
    pub grid: usize,
    /// Number of random samples (specs, configurations or points); each experiment has its own default.
    #[serde(default)]
    pub seeds: Option<usize>,
    /// Degenerate levels reported by `spectrum4`.
    #[serde(default = "d_levels")]
    pub levels: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn d_eps() -> f64 {
    0.05
}
fn d_nmax() -> usize {
    8
}
fn d_lmax() -> u32 {
    2
}
fn d_grid() -> usize {
    24
}
fn d_levels() -> usize {
    3
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            epsilon: d_eps(),
            n_max: d_nmax(),
            l_max: d_lmax(),
            grid: d_grid(),
            seeds: None,
            levels: d_levels(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    /// Output directory; `--out` overrides it.
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub system: SystemConfig,
    /// A single name or a list; a run executes exactly one experiment.
    #[serde(alias = "experiments")]
    pub experiment: ExperimentList,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The single experiment of this invocation.
    pub fn experiment(&self) -> Result<ExperimentKind> {
        let list = match &self.experiment {
            ExperimentList::One(k) => std::slice::from_ref(k),
            ExperimentList::Many(v) => v.as_slice(),
        };
        match list {
            [k] => Ok(*k),
            [] => Err(bad("experiment list is empty")),
            _ => Err(bad("one experiment per invocation")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(bad(format!("schema {} unsupported, expected {SCHEMA_VERSION}", self.schema)));
        }
        self.experiment()?;
        let n = &self.numeric;
        positive("numeric.epsilon", n.epsilon)?;
        if n.n_max < 2 {
            return Err(bad("numeric.n_max must be at least 2"));
        }
        if n.grid < 2 {
            return Err(bad("numeric.grid must be at least 2"));
        }
        if n.levels == 0 || n.seeds == Some(0) {
            return Err(bad("numeric.levels and numeric.seeds must be positive"));
        }
        let t = &n.tolerances;
        for (name, v) in [("spectrum_rel", t.spectrum_rel), ("metric_rel", t.metric_rel), ("potential_abs", t.potential_abs), ("basis", t.basis)] {
            positive(&format!("tolerances.{name}"), v)?;
        }
        let s = &self.system;
        if let Some(m) = &s.masses {
            if m.is_empty() {
                return Err(bad("system.masses is empty"));
            }
            for &x in m {
                positive("system.masses", x)?;
            }
        }
        if let Some(p) = &s.potential {
            if p.kind != "pairwise-harmonic" {
                return Err(bad(format!("potential type {:?} unsupported", p.kind)));
            }
            positive("potential.omega", p.omega)?;
            positive("potential.a", p.a)?;
        }
        if let Some(eq) = &s.equilibrium {
            if eq.iter().flatten().any(|x| !x.is_finite()) {
                return Err(bad("system.equilibrium has non-finite entries"));
            }
        }
        if s.gamma.is_some() || s.equilibrium.is_some() || s.masses.is_some() {
            self.gauge_spec()?;
        }
        Ok(())
    }

    /// Explicit rows, else the Eckart gauge of the equilibrium, else the axis gauge.
    pub fn gauge_spec(&self) -> Result<GaugeSpec> {
        let s = &self.system;
        let wrap = |e: Error| bad(format!("system: {e}"));
        if let Some(g) = &s.gamma {
            let masses = s.masses.clone().ok_or_else(|| bad("system.gamma needs system.masses"))?;
            return GaugeSpec::new(masses, g.clone(), s.translation_invariant.unwrap_or(false)).map_err(wrap);
        }
        if let Some(eq) = &s.equilibrium {
            let n = eq.len();
            let masses = s.masses.clone().unwrap_or_else(|| vec![1.0; n]);
            if masses.len() != n {
                return Err(bad("system.masses and system.equilibrium differ in length"));
            }
            return eckart_gauge(&Configuration::body(eq.clone()), &masses).map_err(wrap);
        }
        axis_gauge(&s.masses.clone().unwrap_or_else(|| vec![1.0; 3])).map_err(wrap)
    }

    /// Whether the gauge is the default axis gauge, for which `F₁` and the 4/2/1 counts apply.
    pub fn is_axis_gauge(&self) -> bool {
        self.system.gamma.is_none() && self.system.equilibrium.is_none()
    }
}
