use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geq_cli::{Format, Outcome, SessionConfig};

/// Lyndon length-function checks on finite samples of Λ-words.
#[derive(Parser)]
#[command(name = "lenfun", version)]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,
    /// Rank `n` of `ℤⁿ`.
    #[arg(long, global = true, env = "GEQ_RANK", value_parser = clap::value_parser!(u64).range(1..))]
    rank: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check axioms on the closure of the words in a file.
    Check {
        /// Axioms, e.g. `L1..L6` or `L1,L3`.
        #[arg(long, default_value = "L1..L6")]
        axioms: String,
        #[arg(long, default_value_t = 0)]
        closure_depth: usize,
        file: PathBuf,
    },
    /// The Gromov product c(g, f).
    Gromov { g: String, f: String },
}

fn dispatch(cli: Cli) -> Outcome {
    let cfg = SessionConfig { rank: cli.rank.map(|r| r as usize), format: cli.format, ..SessionConfig::default() };
    match cli.command {
        Command::Check { axioms, closure_depth, file } => geq_cli::cmd_lenfun_check(&cfg, &axioms, closure_depth, &file),
        Command::Gromov { g, f } => geq_cli::cmd_lenfun_gromov(&cfg, &g, &f),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            print!("{}", f.stdout);
            eprintln!("error: {}", f.message);
            ExitCode::from(1)
        }
    }
}
