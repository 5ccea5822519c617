use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfdbp::commands;
use sfdbp::config::load_config;
use sfdbp::error::Result;

/// Shape-from-defocus toolkit: synthesize defocused observations, estimate
/// depth with belief propagation, evaluate against ground truth, and check
/// tiny instances against an exhaustive oracle.
#[derive(Parser)]
#[command(name = "sfdbp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render defocused observations and ground-truth depth for a scene.
    Synth(CommonArgs),
    /// Estimate a depth map from observation images.
    Estimate(CommonArgs),
    /// Score an estimate directory against ground-truth depth.
    Eval(CommonArgs),
    /// Compare belief propagation to the exhaustive oracle on a tiny instance.
    Oracle(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path config overrides, e.g. `--override prior.lambda=0.5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let cfg = load_config(&a.config, &a.overrides)?;
            commands::cmd_synth(&cfg)
        }
        Command::Estimate(a) => {
            let cfg = load_config(&a.config, &a.overrides)?;
            commands::cmd_estimate(&cfg)
        }
        Command::Eval(a) => {
            let cfg = load_config(&a.config, &a.overrides)?;
            let report = commands::cmd_eval(&cfg)?;
            println!(
                "rmse_depth_m={:.6} mae_depth_m={:.6} label_accuracy={:.4} bad_{}_fraction={:.4} pixels={}",
                report.rmse_depth_m,
                report.mae_depth_m,
                report.label_accuracy,
                report.bad_k,
                report.bad_k_fraction,
                report.evaluated_pixels
            );
            Ok(())
        }
        Command::Oracle(a) => {
            let cfg = load_config(&a.config, &a.overrides)?;
            let report = commands::cmd_oracle(&cfg)?;
            println!(
                "exhaustive_energy={:.9} bp_energy={:.9} gap={:.3e} match={}",
                report.exhaustive_energy,
                report.bp_energy,
                report.energy_gap,
                report.energies_match
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sfdbp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
