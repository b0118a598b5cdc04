use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evenshape::harness::{execute, Experiment, ExperimentConfig};
use evenshape::Error;

#[derive(Parser)]
#[command(version, about = "Run wavefront-shaping experiments on simulated photon pairs")]
struct Cli {
    #[command(subcommand)]
    experiment: Command,

    /// TOML configuration; defaults to the experiment's preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Runs per optimizer mode and condition.
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Print nothing but errors and failed checks.
    #[arg(long, global = true)]
    quiet: bool,

    /// Exit with status 5 if the experiment's checks fail.
    #[arg(long, global = true)]
    assert: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// GA against sGA, with EMCCD maps.
    Fig3,
    /// Final enhancement against integration time.
    Fig4,
    /// Displaced optimization center.
    AppendixA,
    /// Displaced detectors, finite pump width.
    AppendixB,
    /// Beam-center location with coma scans.
    CenterScan,
    /// Whatever the config's custom section describes.
    Custom,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Fig3 => Experiment::Fig3,
            Command::Fig4 => Experiment::Fig4,
            Command::AppendixA => Experiment::AppendixA,
            Command::AppendixB => Experiment::AppendixB,
            Command::CenterScan => Experiment::CenterScan,
            Command::Custom => Experiment::Custom,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::PhysicsCap(_) => 3,
        Error::Io { .. } => 4,
        _ => 1,
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let experiment = cli.experiment.experiment();
    let mut cfg = match &cli.config {
        None => ExperimentConfig::preset(experiment),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            if let Some(v) = table.get("experiment") {
                if v.as_str() != Some(experiment_key(experiment)) {
                    return Err(Error::Config(format!(
                        "config is for experiment {v}, but {} was requested",
                        experiment.name()
                    )));
                }
            }
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            cfg.experiment = experiment;
            if !table.contains_key("output_dir") {
                cfg.output_dir = ExperimentConfig::preset(experiment).output_dir;
            }
            cfg
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seeds.master = seed;
    }
    if let Some(runs) = cli.runs {
        cfg = cfg.with_runs(runs);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment_key(e: Experiment) -> &'static str {
    match e {
        Experiment::Fig3 => "fig3",
        Experiment::Fig4 => "fig4",
        Experiment::AppendixA => "appendix_a",
        Experiment::AppendixB => "appendix_b",
        Experiment::CenterScan => "center_scan",
        Experiment::Custom => "custom",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let report = match execute(&cfg, &cfg.output_dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if !cli.quiet {
        eprintln!(
            "{}: {} files in {} ({:.1} s)",
            report.manifest.experiment,
            report.manifest.files.len() + 1,
            cfg.output_dir.display(),
            report.manifest.wall_clock_seconds
        );
    }
    let outcome = match report.outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let mut failed = false;
    for check in outcome.checks() {
        failed |= !check.passed;
        if !cli.quiet || !check.passed {
            println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
        }
    }
    if cli.assert && failed {
        ExitCode::from(5)
    } else {
        ExitCode::SUCCESS
    }
}
