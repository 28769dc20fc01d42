use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use frachh_core::experiment::{run_experiment, Campaign, ExperimentConfig, RunOptions};

/// Simulation and verification campaigns for the fractional heat equation
/// with Hardy nonlinearity and fractional noise.
#[derive(Debug, Parser)]
#[command(name = "frachh", version)]
struct Cli {
    /// check-params, sample-fbm, simulate, verify-kernel, verify-smoothing,
    /// verify-hardy, mc-covariance or sweep
    #[arg(value_parser = parse_campaign)]
    campaign: Campaign,

    /// JSON configuration (keys: params, grid, time, noise, solver, campaign)
    #[arg(long)]
    config: PathBuf,

    /// Output bundle directory
    #[arg(long)]
    out: PathBuf,

    /// Overrides noise.seed from the configuration
    #[arg(long)]
    seed: Option<u64>,

    /// Run outside the theorem's hypotheses or past the admitted horizon;
    /// recorded in the manifest
    #[arg(long)]
    override_admissibility: bool,
}

fn parse_campaign(s: &str) -> std::result::Result<Campaign, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Campaign::ALL.iter().map(|c| c.name()).collect();
        format!("unknown campaign '{s}' (expected one of: {})", names.join(", "))
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = ExperimentConfig::load(&cli.config)
        .with_context(|| format!("reading configuration {}", cli.config.display()))?;
    let opts = RunOptions { seed: cli.seed, override_admissibility: cli.override_admissibility };
    let manifest = run_experiment(cli.campaign, &config, &cli.out, &opts)
        .with_context(|| format!("campaign {} failed", cli.campaign))?;
    println!("{} finished: {} files in {}", manifest.campaign, manifest.files.len() + 1, cli.out.display());
    Ok(())
}
