use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::MatrixConfig;
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::metrics::CvrpTrace;
use crate::uncertainty::CvrpCI;
use crate::units::{mw_to_dbm, mw_to_dbm_floored, DEFAULT_DBM_FLOOR};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One output line: a scenario at one θ_FoV. dB columns are floored at
/// -100 dBm when the underlying mW value is not positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub theta_fov_deg: f64,
    pub cvrp_mean_dbm: f64,
    pub ci_lower_dbm: f64,
    pub ci_upper_dbm: f64,
    pub cvrp_mean_mw: f64,
    pub sigma_hat_mw: f64,
    /// Golden-device CVRP at the same θ_FoV.
    pub reference_dbm: f64,
    pub reference_diff_db: f64,
}

/// Everything computed for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub ci: CvrpCI,
    pub reference: CvrpTrace,
}

impl ScenarioOutcome {
    pub fn rows(&self) -> Vec<ResultRow> {
        let id = self.scenario.id();
        self.ci
            .points
            .iter()
            .zip(&self.reference.cvrp_mw)
            .map(|(p, &r)| {
                let mean_dbm = mw_to_dbm_floored(p.mean_mw, DEFAULT_DBM_FLOOR);
                let reference_dbm = mw_to_dbm(r).unwrap_or(DEFAULT_DBM_FLOOR);
                ResultRow {
                    scenario_id: id.clone(),
                    theta_fov_deg: p.theta_fov_deg,
                    cvrp_mean_dbm: mean_dbm,
                    ci_lower_dbm: mw_to_dbm_floored(p.lower_mw, DEFAULT_DBM_FLOOR),
                    ci_upper_dbm: mw_to_dbm_floored(p.upper_mw, DEFAULT_DBM_FLOOR),
                    cvrp_mean_mw: p.mean_mw,
                    sigma_hat_mw: p.sigma_hat_mw,
                    reference_dbm,
                    reference_diff_db: mean_dbm - reference_dbm,
                }
            })
            .collect()
    }
}

/// Runs the full pipeline for one scenario plus its golden reference.
pub fn evaluate_scenario(s: &Scenario) -> Result<ScenarioOutcome> {
    s.validate()?;
    let ci = s.confidence_intervals()?;
    let reference = s.reference().trace()?;
    Ok(ScenarioOutcome {
        scenario: s.clone(),
        ci,
        reference,
    })
}

pub fn run_scenario(s: &Scenario) -> Result<Vec<ResultRow>> {
    Ok(evaluate_scenario(s)?.rows())
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn rows_to_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "scenario_id",
            "theta_fov_deg",
            "cvrp_mean_dbm",
            "ci_lower_dbm",
            "ci_upper_dbm",
            "cvrp_mean_mw",
            "sigma_hat_mw",
            "reference_dbm",
            "reference_diff_db",
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Validation(format!("csv buffer: {e}")))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes rows atomically and returns the file's SHA-256.
pub fn write_rows_csv(rows: &[ResultRow], path: &Path) -> Result<String> {
    let bytes = rows_to_csv(rows)?;
    write_atomic(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scenario: Scenario,
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub draws: usize,
    pub config: MatrixConfig,
    pub overwrite_policy: String,
    pub wall_time_s: f64,
    pub files: Vec<ManifestEntry>,
}

const OVERWRITE_POLICY: &str =
    "result files named after a scenario id are replaced atomically on re-run; other files are left untouched";

/// Expands `config` and runs every scenario into `out_dir`.
pub fn run_matrix(config: &MatrixConfig, out_dir: &Path) -> Result<Manifest> {
    let scenarios = config.scenarios()?;
    run_scenarios(config, &scenarios, out_dir)
}

/// Runs `scenarios` in parallel, writing one CSV each plus `manifest.json`.
pub fn run_scenarios(config: &MatrixConfig, scenarios: &[Scenario], out_dir: &Path) -> Result<Manifest> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = scenarios
        .par_iter()
        .map(|s| {
            let rows = run_scenario(s)?;
            let file = format!("{}.csv", s.id());
            let sha256 = write_rows_csv(&rows, &out_dir.join(&file))?;
            Ok(ManifestEntry {
                scenario: s.clone(),
                file,
                sha256,
                rows: rows.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        draws: config.draws,
        config: config.clone(),
        overwrite_policy: OVERWRITE_POLICY.into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&out_dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

/// Scenario results loaded from a results directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultSet {
    pub entries: Vec<(Scenario, Vec<ResultRow>)>,
}

impl ResultSet {
    pub fn from_outcomes(outcomes: &[ScenarioOutcome]) -> Self {
        Self {
            entries: outcomes.iter().map(|o| (o.scenario.clone(), o.rows())).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&[ResultRow]> {
        self.entries
            .iter()
            .find(|(s, _)| s.id() == id)
            .map(|(_, r)| r.as_slice())
    }
}

/// Reads a manifest and its result files, checking each file's checksum.
pub fn load_results(dir: &Path) -> Result<ResultSet> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_slice(&text)?;
    let entries = manifest
        .files
        .into_iter()
        .map(|e| {
            let file: PathBuf = dir.join(&e.file);
            let bytes = std::fs::read(&file).map_err(|err| Error::io(&file, err))?;
            if sha256_hex(&bytes) != e.sha256 {
                return Err(Error::Validation(format!("{} does not match its manifest checksum", file.display())));
            }
            Ok((e.scenario, read_rows_csv(&file)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultSet { entries })
}
