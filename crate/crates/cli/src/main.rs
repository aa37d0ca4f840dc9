//! Batch experiment runner: configure a system, run one experiment family,
//! emit CSV artifacts plus a plot script. Exit status 0 when every in-run
//! assertion holds, 1 with a report naming the violated invariants, 2 on
//! configuration errors.

mod config;
mod runners;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(name = "symlab", version, about = "Dyadic analysis and symmetrizer energy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dyadic blocks, partition of unity, Besov norms and Bernstein ratios
    Decompose(RunArgs),
    /// Second-difference seminorm sweeps and mollifier rate tables
    Zygmund(RunArgs),
    /// Bony identity residuals and paraproduct/remainder bound constants
    Paradiff(RunArgs),
    /// Symmetrizer construction and validation along a frequency ladder
    Symmetrize(RunArgs),
    /// Per-mode energy ladder and loss-of-derivatives fit
    Energy(RunArgs),
    /// Closed-form wave cross-check
    Wave(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration file (flat `key = value`)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts and plot scripts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override for generated coefficients
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args): (&str, &RunArgs) = match &cli.command {
        Command::Decompose(a) => ("decompose", a),
        Command::Zygmund(a) => ("zygmund", a),
        Command::Paradiff(a) => ("paradiff", a),
        Command::Symmetrize(a) => ("symmetrize", a),
        Command::Energy(a) => ("energy", a),
        Command::Wave(a) => ("wave", a),
    };

    let cfg = match Config::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let seed = match args.seed {
        Some(s) => s,
        None => match cfg.u64_or("seed", 0) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
    };

    let outcome = match &cli.command {
        Command::Decompose(_) => runners::run_decompose(&cfg, &args.out, seed).and_then(|mut v| {
            let n = cfg.usize_or("grid_n", 1 << 14)?;
            v.extend(runners::run_primitive_table(&args.out, n)?);
            Ok(v)
        }),
        Command::Zygmund(_) => runners::run_zygmund(&cfg, &args.out, seed).and_then(|mut v| {
            let count = cfg.usize_or("corpus_size", 0)?;
            if count > 0 {
                let n = cfg.usize_or("grid_n", 1 << 15)?;
                v.extend(runners::run_norm_table(&args.out, n, count, seed)?);
            }
            Ok(v)
        }),
        Command::Paradiff(_) => runners::run_paradiff(&cfg, &args.out, seed),
        Command::Symmetrize(_) => runners::run_symmetrize(&cfg, &args.out, seed),
        Command::Energy(_) => runners::run_energy(&cfg, &args.out, seed),
        Command::Wave(_) => runners::run_wave(&cfg, &args.out, seed),
    };

    match outcome {
        Ok(violations) if violations.is_empty() => {
            println!("{name}: all assertions passed");
            ExitCode::SUCCESS
        }
        Ok(violations) => {
            eprintln!("{name}: {} violated invariant(s):", violations.len());
            for v in &violations {
                eprintln!("  - {v}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            if e.is::<config::ConfigError>() {
                eprintln!("{e}");
                ExitCode::from(2)
            } else {
                eprintln!("{name}: failed: {e}");
                ExitCode::from(1)
            }
        }
    }
}
