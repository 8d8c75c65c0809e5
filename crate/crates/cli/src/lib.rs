//! Scenario runner behind the `ridgeline` binary.
//!
//! A scenario is a flat `key = value` file; each subcommand reads one, runs
//! the corresponding pipeline and writes CSV/JSON artifacts to the output
//! directory. Outputs depend only on the file and the seed.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod scenario;

pub use artifacts::Artifacts;
pub use commands::RunOptions;
pub use config::ScenarioConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "ridgeline",
    version,
    about = "Optimal walking paths over terrain"
)]
pub struct Cli {
    /// Scenario file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory; overrides the `output` key (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Overrides the `seed` key.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Record wall-clock seconds in the summary files.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the value function and dump it with metadata.
    Solve,
    /// Deterministic optimal path from x0.
    Path,
    /// Monte-Carlo ensemble of noisy paths.
    Ensemble,
    /// Bisect for the shortest horizon that reaches the target.
    CriticalTime,
    /// Paths for a list of σ compared with the σ = 0 path.
    Converge,
    /// Optimal headings on a strided grid at given times.
    ControlSnapshot,
    /// Write the synthetic terrain as an ESRI ASCII grid.
    GenTerrain,
}

impl Command {
    pub fn run(self, cfg: &ScenarioConfig, opts: RunOptions) -> Result<Artifacts> {
        match self {
            Command::Solve => commands::solve(cfg, opts),
            Command::Path => commands::path(cfg, opts),
            Command::Ensemble => commands::ensemble(cfg, opts),
            Command::CriticalTime => commands::critical_time(cfg, opts),
            Command::Converge => commands::converge(cfg, opts),
            Command::ControlSnapshot => commands::control_snapshot(cfg, opts),
            Command::GenTerrain => commands::gen_terrain(cfg, opts),
        }
    }
}

/// Runs the parsed command line and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation("no scenario given (use --config PATH)".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed.to_string())?;
    }
    let out_dir = match (&cli.out, cfg.raw("output")) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => PathBuf::from("out"),
    };
    let opts = RunOptions { timing: cli.timing };
    let artifacts = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| cli.command.run(&cfg, opts))?,
        None => cli.command.run(&cfg, opts)?,
    };
    artifacts.write_to(&out_dir)
}

/// Convenience for tests and scripts: run `command` on the file at `config`
/// and write into `out`.
pub fn run_file(command: Command, config: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    run(&Cli {
        config: Some(config.to_path_buf()),
        out: Some(out.to_path_buf()),
        seed: None,
        threads: None,
        timing: false,
        command,
    })
}
