//! `fpk`: validate problems, check Lyapunov certificates, solve, simulate,
//! compare and average.
//!
//! Exit codes: 0 success, 1 the requested check did not pass, 2 usage,
//! input or runtime error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fpk", version, about = "Fokker-Planck-Kolmogorov workbench")]
struct Cli {
    /// Worker threads (default: rayon's choice).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the standing hypotheses; prints a validation report as JSON.
    Validate { config: PathBuf },
    /// Evaluate the certificates listed in [lyapunov]; prints JSON.
    Check { config: PathBuf },
    /// Finite-volume solve; writes density.csv, mass.csv, metadata.json.
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo particle run; writes mc.csv, mc_hist.csv, metadata.json.
    Mc {
        config: PathBuf,
        /// Number of paths (default: [mc] paths).
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a solve directory with an mc directory; writes compare.csv.
    Compare {
        pde_dir: PathBuf,
        mc_dir: PathBuf,
        /// Output directory (default: the mc directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cesàro averages against the stationary density; writes ergodic.csv,
    /// stationary.csv, metadata.json.
    Ergodic {
        config: PathBuf,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Check { config } => commands::check(&config),
        Command::Solve { config, out } => commands::solve(&config, &out),
        Command::Mc { config, paths, seed, out } => commands::mc(&config, paths, seed, &out),
        Command::Compare { pde_dir, mc_dir, out } => commands::compare(&pde_dir, &mc_dir, out.as_deref()),
        Command::Ergodic { config, t_end, out } => commands::ergodic(&config, t_end, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
