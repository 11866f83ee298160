use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "alflab",
    about = "Taub-NUT hyperkähler laboratory: identity suites, dihedral checks, ALF gluing sweeps and a complex Monge-Ampère continuity solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and emit per-check CSV
    Verify {
        /// taubnut-identities | dihedral | gluing | frames | curvature
        suite: String,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// CSV output path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monge-Ampère continuity solver from a JSON config
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "solve-out")]
        out: PathBuf,
    },
    /// Emit radial sweep tables for log-log plotting
    Sweep {
        /// comparison-bounds | decay | decay-euclidean | fiber-length
        kind: String,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export model curves (cutoff profiles, potential profiles)
    Export {
        /// cutoffs | potential
        kind: String,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ALFLAB_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            suite,
            m,
            k,
            seed,
            n,
            out,
        } => alflab::cli::cmd_verify(&suite, m, k, seed, n).and_then(|(code, csv)| {
            emit(&csv, out)?;
            Ok(code)
        }),
        Command::Solve { config, out } => alflab::cli::cmd_solve(&config, &out),
        Command::Sweep {
            kind,
            m,
            seed,
            n,
            out,
        } => alflab::cli::cmd_sweep(&kind, m, seed, n).and_then(|csv| {
            emit(&csv, out)?;
            Ok(0)
        }),
        Command::Export { kind, m, n, out } => alflab::cli::cmd_export(&kind, m, n).and_then(|csv| {
            emit(&csv, out)?;
            Ok(0)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
