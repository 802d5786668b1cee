//! Scenario runner: reads one TOML config, runs the named scenario on the
//! multitime engine and writes CSV/JSON artifacts plus a manifest.

pub mod config;
pub mod error;
pub mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::{Scenario, ScenarioConfig};
pub use error::{CliError, Result};
use output::Artifacts;

pub const MANIFEST: &str = "manifest.json";

/// Per-run context handed to every scenario.
pub struct Ctx {
    pub seed: u64,
    pub verbose: bool,
    pub out: Artifacts,
}

impl Ctx {
    pub fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'static str,
    seed: u64,
    config_path: Option<String>,
    config: &'a toml::Table,
    /// Parameters after defaults were filled in.
    parameters: serde_json::Value,
    outputs: &'a [String],
    status: &'static str,
    error: Option<String>,
    summary: serde_json::Value,
    wall_time_seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config_path: Option<PathBuf>,
    pub output_override: Option<PathBuf>,
    pub verbose: bool,
}

/// Outcome of a completed run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let config = ScenarioConfig::load(path)?;
    let opts = RunOptions { config_path: Some(path.to_path_buf()), ..opts.clone() };
    run(&config, &opts)
}

/// Validates the parameters, runs the scenario and writes the manifest.
///
/// Parameter errors surface before the output directory is touched. A
/// scenario that fails after starting still leaves a manifest recording the
/// error.
pub fn run(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let plan = scenarios::Plan::parse(config.scenario, &config.parameters)?;
    let dir = opts
        .output_override
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::config("missing required key `output_dir` (or pass --output)"))?;
    let start = Instant::now();
    let mut ctx = Ctx { seed: config.seed, verbose: opts.verbose, out: Artifacts::create(&dir)? };
    ctx.note(format!("running {} into {}", config.scenario.name(), dir.display()));
    let result = plan.execute(&mut ctx);
    let (status, error, summary) = match &result {
        Ok(s) => ("ok", None, s.clone()),
        Err(e) => ("failed", Some(e.to_string()), serde_json::Value::Null),
    };
    let outputs = ctx.out.files().to_vec();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: config.scenario.name(),
        seed: config.seed,
        config_path: opts.config_path.as_ref().map(|p| p.display().to_string()),
        config: &config.raw,
        parameters: plan.effective(),
        outputs: &outputs,
        status,
        error,
        summary,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    ctx.out.json(MANIFEST, &manifest)?;
    let summary = result?;
    Ok(RunReport { output_dir: dir, outputs, summary })
}
