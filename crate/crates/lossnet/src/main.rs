use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lossnet::{execute, Command, RunSpec};

#[derive(Parser)]
#[command(
    name = "lossnet",
    version,
    about = "Loss networks with advanced reservation"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Virtual blocking along a grid of arrival rates (critical or padded capacity).
    Sweep(CommonArgs),
    /// Compare admission policies over replications.
    Bench(CommonArgs),
    /// Virtual blocking P_d^s for every type, optionally next to a coupled simulation.
    Blocking(CommonArgs),
    /// Static prices by Lagrangian bisection.
    Pricing(CommonArgs),
    /// Solve a small discrete instance exactly and print its decision table.
    Dp(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override a config value, e.g. `--set epsilon=0.1` or `--set lambda_grid.0=25`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    replications: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Bench(a) => (Command::Bench, a),
        Cmd::Blocking(a) => (Command::Blocking, a),
        Cmd::Pricing(a) => (Command::Pricing, a),
        Cmd::Dp(a) => (Command::Dp, a),
    };
    let spec = RunSpec {
        config: args.config,
        out: args.out,
        seed: args.seed,
        overrides: args.set,
        replications: args.replications,
    };
    match execute(command, &spec) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            println!("wrote {}", spec.out.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
