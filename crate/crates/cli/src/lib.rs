//! Batch experiment harness: configs in, CSV tables and a manifest out.

pub mod config;
pub mod error;
pub mod expr;
pub mod plot;
pub mod studies;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, StudyKind};
pub use error::CliError;
pub use studies::{run_study, StudyOutput, Table};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BERNSIM_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "bernsim-out";

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub config: String,
    pub outputs: Vec<OutputFile>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn validate_file(path: &Path) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::parse(&read(path)?)
}

/// Where a run writes: the explicit override, then `experiment.output`, then
/// `$BERNSIM_OUTPUT_DIR/<name>`, then `./bernsim-out/<name>`.
pub fn output_dir(cfg: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.experiment.output {
        return PathBuf::from(p);
    }
    let name = cfg
        .experiment
        .name
        .clone()
        .unwrap_or_else(|| cfg.experiment.kind.as_str().to_string());
    let base = std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR));
    base.join(name)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// Runs the study described by the config text and writes its artifacts.
pub fn run_text(text: &str, explicit: Option<&Path>) -> Result<RunReport, CliError> {
    let cfg = ExperimentConfig::parse(text)?;
    let output = run_study(&cfg)?;
    let dir = output_dir(&cfg, explicit);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut outputs = Vec::new();
    for table in &output.tables {
        let path = dir.join(&table.file);
        fs::write(&path, &table.text).map_err(|e| CliError::io(&path, e))?;
        outputs.push(OutputFile {
            file: table.file.clone(),
            sha256: sha256_hex(table.text.as_bytes()),
            rows: table.text.lines().count().saturating_sub(1),
        });
    }
    let manifest = Manifest {
        tool: "bernsim",
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.experiment.kind.as_str(),
        seed: cfg.experiment.seed,
        config_sha256: sha256_hex(text.as_bytes()),
        config: text.to_string(),
        outputs,
        summary: output.summary,
    };
    let path = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(RunReport { dir, manifest })
}

pub fn run_file(path: &Path, explicit: Option<&Path>) -> Result<RunReport, CliError> {
    run_text(&read(path)?, explicit)
}

/// Renders `csv` to SVG; the default target swaps the extension for `.svg`.
pub fn plot_file(csv: &Path, kind: &str, target: Option<&Path>) -> Result<PathBuf, CliError> {
    let kind = plot::PlotKind::parse(kind)?;
    let svg = plot::render(&read(csv)?, kind)?;
    let out = target
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv.with_extension("svg"));
    fs::write(&out, svg).map_err(|e| CliError::io(&out, e))?;
    Ok(out)
}
