// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tapbound::commands::{self, Context, Outcome};
use tapbound::config::{self, ConfigFile};
use tapbound::{CliError, EXIT_OK, EXIT_VIOLATED};

/// Timely-progress bounds for the TAP knowledge-propagation protocol.
#[derive(Parser, Debug)]
#[command(name = "tapbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV and text reports.
    #[arg(
        short,
        long,
        global = true,
        env = "TAPBOUND_OUTPUT_DIR",
        default_value = "tapbound-out"
    )]
    output_dir: PathBuf,

    /// Overrides `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides `scenario.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(short = 'j', long, global = true)]
    threads: Option<usize>,

    /// Overrides any config key, e.g. `--set queue.horizon=5000`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evaluate the analytic bound over the grid.
    Bound,
    /// Sample worst-case progress times.
    Simulate,
    /// Check the bound against Monte Carlo samples.
    Verify,
    /// Simulate the M/M/1 queue and fit its sojourn times.
    Queue,
    /// Sample two-hop relay delivery delays.
    Mtr,
    /// Run the protocol and log every message.
    TapTrace,
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut overrides = Vec::new();
    if let Some(seed) = cli.seed {
        overrides.push(format!("scenario.seed={seed}"));
    }
    if let Some(trials) = cli.trials {
        overrides.push(format!("scenario.trials={trials}"));
    }
    overrides.extend(cli.overrides.iter().cloned());
    let cfg: ConfigFile = config::load(path, &overrides)?;
    let ctx = Context {
        output_dir: cli.output_dir.clone(),
        threads: cli.threads,
    };
    match cli.command {
        Command::Bound => commands::cmd_bound(&ctx, &cfg),
        Command::Simulate => commands::cmd_simulate(&ctx, &cfg),
        Command::Verify => commands::cmd_verify(&ctx, &cfg),
        Command::Queue => commands::cmd_queue(&ctx, &cfg),
        Command::Mtr => commands::cmd_mtr(&ctx, &cfg),
        Command::TapTrace => commands::cmd_tap_trace(&ctx, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::from(if outcome.passed {
                EXIT_OK
            } else {
                EXIT_VIOLATED
            } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
