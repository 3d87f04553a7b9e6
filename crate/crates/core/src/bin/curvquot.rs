use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curvquot::run::execute_file;

/// Solver and verification suite for Hessian-quotient curvature equations on the sphere.
#[derive(Parser)]
#[command(name = "curvquot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Output directory (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized probes.
        #[arg(long)]
        seed: Option<u64>,
        /// Grid resolution: nodes per meridian, or n_theta with n_phi = 2·n_theta.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            resolution,
        } => {
            let (code, message) = execute_file(&config, out.as_deref(), seed, resolution);
            if code == 0 {
                println!("{message}");
            } else {
                eprintln!("curvquot: {message}");
            }
            ExitCode::from(code as u8)
        }
    }
}
