use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinreg_cli::{parse_manifest_with, run_ensemble, Command, Overrides};

/// Disorder-ensemble runs of a random spin register.
#[derive(Parser)]
#[command(name = "spinreg", version)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Eigenvalues with eigenstate entropy and participation.
    Spectrum(Common),
    /// Strength function of the initial state with Breit-Wigner fits.
    Strength(Common),
    /// Survival probability, entropy and participation over time.
    Evolve(Common),
    /// Critical time per register size.
    TcScan(Common),
    /// Eigenstate entropy and spacing ratio over couplings.
    JcScan(Common),
    /// Run whatever command the manifest names.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run manifest.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_name = "BOOL")]
    store_components: Option<bool>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.action {
        Action::Spectrum(a) => (Some(Command::Spectrum), a),
        Action::Strength(a) => (Some(Command::Strength), a),
        Action::Evolve(a) => (Some(Command::Evolve), a),
        Action::TcScan(a) => (Some(Command::TcScan), a),
        Action::JcScan(a) => (Some(Command::JcScan), a),
        Action::Run(a) => (None, a),
    };
    let overrides = Overrides {
        command,
        output_dir: args.out,
        realizations: args.realizations,
        master_seed: args.seed,
        threads: args.threads,
        store_components: args.store_components,
    };
    let manifest = match parse_manifest_with(&args.config, &overrides) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!(
        "[spinreg] {} n={} realizations={} seed={} -> {}",
        manifest.command,
        manifest.register.n,
        manifest.realizations,
        manifest.register.master_seed,
        manifest.output_dir.display()
    );
    match run_ensemble(&manifest) {
        Ok(summary) => {
            for (name, v) in &summary.observables {
                match v.stderr {
                    Some(se) => println!("[spinreg] {name} = {:.6e} +- {:.2e} ({} samples)", v.mean, se, v.count),
                    None => println!("[spinreg] {name} = {:.6e} ({} samples)", v.mean, v.count),
                }
            }
            for f in &summary.failures {
                match f.index {
                    Some(r) => eprintln!("[spinreg] realization {r} failed: {}", f.message),
                    None => eprintln!("[spinreg] run failed: {}", f.message),
                }
            }
            if summary.partial {
                eprintln!("[spinreg] partial: {}/{} realizations completed", summary.completed, summary.realizations);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
