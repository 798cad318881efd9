use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlmctdhb::cli::{self, Command, Invocation};

#[derive(Parser)]
#[command(name = "mlb", version, about = "Multi-layer MCTDH for bosonic mixtures")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One-body levels of the real-time trap.
    Bands(Common),
    /// Imaginary-time relaxation to the ground state.
    Relax(Common),
    /// Real-time propagation (relaxes first unless resuming).
    Propagate(Common),
    /// Recompute observables from checkpoints.
    Observe(Common),
    /// Coefficient counts against single-layer MCTDHB.
    Cost(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    resume: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (command, common) = match args.command {
        Cmd::Bands(c) => (Command::Bands, c),
        Cmd::Relax(c) => (Command::Relax, c),
        Cmd::Propagate(c) => (Command::Propagate, c),
        Cmd::Observe(c) => (Command::Observe, c),
        Cmd::Cost(c) => (Command::Cost, c),
    };
    let outcome = cli::run::configure_threads()
        .and_then(|_| cli::load_config(&common.config))
        .and_then(|config| {
            cli::run(&Invocation {
                command,
                config,
                out: common.out,
                resume: common.resume,
            })
        });
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", cli::run::error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
