//! Command-line runs of feedback master equation experiments: parameter
//! sweeps written as CSV tables plus a JSON manifest per run.

pub mod config;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use config::{Experiment, Overrides, RunConfig};

/// Exit status for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for solver failures under `--strict`, or a run that could not
/// produce any result.
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver(_) => EXIT_SOLVER,
        }
    }
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

#[derive(Debug)]
pub struct Summary {
    pub rows: usize,
    pub flagged: usize,
    pub output: PathBuf,
    pub manifest: PathBuf,
}

/// Resolves the configuration, runs the experiment on a pool of
/// `workers` threads and writes the table and manifest.
pub fn execute(
    experiment: Experiment,
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<Summary, Failure> {
    let file = match config_path {
        Some(p) => config::parse_file(p)?,
        None => config::FileConfig::default(),
    };
    let run = config::resolve(experiment, file, overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| Failure::Config(format!("--workers: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| experiments::run(&run))?;
    let wall = start.elapsed().as_secs_f64();

    outcome.table.write(&run.output)?;
    let manifest = manifest_path(&run.output);
    write_manifest(&manifest, &run, &outcome, wall, config_path)?;
    Ok(Summary {
        rows: outcome.table.rows.len(),
        flagged: outcome.flagged,
        output: run.output,
        manifest,
    })
}

fn write_manifest(
    path: &Path,
    run: &RunConfig,
    outcome: &experiments::Outcome,
    wall: f64,
    config_path: Option<&Path>,
) -> Result<(), Failure> {
    let value = json!({
        "tool": "fme",
        "version": env!("CARGO_PKG_VERSION"),
        "config_file": config_path.map(|p| p.display().to_string()),
        "config": run,
        "columns": outcome.table.columns,
        "rows": outcome.table.rows.len(),
        "flagged_rows": outcome.flagged,
        "summary": outcome.summary,
        "wall_time_s": wall,
        "row_wall_time_s": outcome.row_seconds,
    });
    let text = serde_json::to_string_pretty(&value).expect("manifest serializes");
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::Config(format!("output: {}: {e}", path.display())))
}
