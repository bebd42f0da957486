use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uwbpc::harness::{run_scenario, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "uwbpc", version, about = "Seeded Monte-Carlo experiments for UWB power-control games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the experiment by another kind with default settings.
        #[arg(long)]
        experiment: Option<String>,
    },
    /// Parse and check a scenario file without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => Scenario::load(&config).map(|s| {
            println!("{}: ok ({}, scenario {})", config.display(), s.experiment.kind(), s.hash());
        }),
        Command::Run {
            config,
            seed,
            trials,
            out,
            experiment,
        } => Scenario::load(&config)
            .and_then(|mut s| {
                Overrides {
                    seed,
                    trials,
                    output_dir: out,
                    experiment,
                }
                .apply(&mut s)?;
                run_scenario(&s)
            })
            .map(|r| {
                println!("{}", r.paths.csv.display());
                println!("{}", r.paths.summary.display());
                if let Some(t) = &r.paths.trace {
                    println!("{}", t.display());
                }
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
