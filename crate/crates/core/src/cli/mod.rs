//! Command-line driver: config loading, experiment dispatch, atomic artifact writes and the run manifest.

pub mod config;
pub mod experiments;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use experiments::{run_experiment, Assertion, Outcome};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "run-manifest.json";
pub const UNITS: &str = "hbar = m = omega = 1; energies in units of hbar*omega, lengths in sqrt(hbar/(m*omega))";

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 2,
        Error::NonConvergence(_) | Error::Horizon(_) | Error::AmbiguousDegeneracy(_) | Error::NonHermitian(_) => 3,
        _ => 1,
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

/// Write `bytes` to `path` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidParameter(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub manifest: Value,
    pub artifacts: Vec<PathBuf>,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.outcome.assertions.iter().all(|a| a.passed)
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s.into_bytes()
}

/// Run the configured experiment and write its table and the manifest into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    let kind = cfg.experiment()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = run_experiment(cfg, &mut rng)?;
    let (ext, body) = match cfg.output.format {
        OutputFormat::Csv => ("csv", outcome.data.to_csv()?.into_bytes()),
        OutputFormat::Json => ("json", pretty(&outcome.data.to_json())),
    };
    let name = format!("{}.{ext}", kind.name());
    let table_path = out.join(&name);
    write_atomic(&table_path, &body)?;
    let passed = outcome.assertions.iter().all(|a| a.passed);
    let manifest = json!({
        "tool": "rotframe",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": kind.name(),
        "seed": seed,
        "config": cfg,
        "units": UNITS,
        "tolerances": cfg.numeric.tolerances,
        "artifacts": [name],
        "assertions": outcome.assertions,
        "summary": outcome.summary,
        "status": if passed { "pass" } else { "fail" },
    });
    let manifest_path = out.join(MANIFEST_NAME);
    write_atomic(&manifest_path, &pretty(&manifest))?;
    Ok(RunResult { outcome, manifest, artifacts: vec![table_path, manifest_path] })
}
