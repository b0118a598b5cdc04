//! Configured experiments, statistics and output files.
//!
//! [`execute`] is the whole pipeline: check the output directory, run the
//! experiment, then write tables, plots and `manifest.json`. A failed run
//! still writes whatever it produced, with the manifest status saying so.

mod config;
mod experiments;
mod output;
mod stats;

use std::path::Path;
use std::time::Instant;

pub use config::*;
pub use experiments::*;
pub use output::*;
pub use stats::*;

use crate::error::Result;

pub struct Report {
    pub manifest: RunManifest,
    pub outcome: Result<Outcome>,
}

/// Run `cfg` and write its outputs under `out_dir`. `Err` means the outputs
/// could not be written; an experiment failure comes back in
/// [`Report::outcome`].
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    preflight(out_dir)?;
    let start = Instant::now();
    let exec = run_experiment(cfg);
    let status = match &exec.outcome {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        config_digest: cfg.digest(),
        master_seed: cfg.seeds.master,
        run_seeds: Vec::new(),
        versions: vec![("evenshape".to_string(), env!("CARGO_PKG_VERSION").to_string())],
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        status,
        notes: Vec::new(),
        files: Vec::new(),
    };
    let manifest = emit_outputs(&exec.results, out_dir, manifest)?;
    Ok(Report {
        manifest,
        outcome: exec.outcome,
    })
}
