use clap::{Parser, Subcommand};
use pat_cli::{commands, ExperimentConfig};
use pat_core::media::Rect;
use pat_core::Result;
use std::path::PathBuf;
use std::process::ExitCode;

/// Photoacoustic tomography in damped media.
#[derive(Parser)]
#[command(name = "pat", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for script compatibility; every run is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate boundary data for the configured source.
    Simulate(Common),
    /// Back-projection and Neumann series from a record.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Visibility times and trapped rays.
    Rays(Common),
    /// Relative L² and L∞ errors between two field files.
    Metrics {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Restrict the errors to the configured support box.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn out_dir(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn dispatch(cmd: Cmd) -> Result<Vec<String>> {
    match cmd {
        Cmd::Simulate(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            commands::simulate(&cfg, &out_dir(&c, &cfg))
        }
        Cmd::Reconstruct { common, data, truth, terms } => {
            let cfg = ExperimentConfig::load(&common.config)?;
            commands::reconstruct(&cfg, &data, truth.as_deref(), &out_dir(&common, &cfg), terms)
        }
        Cmd::Rays(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            commands::rays(&cfg, &out_dir(&c, &cfg))
        }
        Cmd::Metrics { data, truth, config, .. } => {
            let region = match config {
                Some(p) => Some(Rect::centered_square(ExperimentConfig::load(&p)?.source.omega0)),
                None => None,
            };
            commands::metrics_cmd(&data, &truth, region)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
