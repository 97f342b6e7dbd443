use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geq_cli::{Format, Outcome, SessionConfig};

/// Generalized equations over Λ-words: build, inspect, transform, eliminate.
#[derive(Parser)]
#[command(name = "geq", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output format for query commands.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,
    /// Rank `n` of `ℤⁿ` where the input does not state it.
    #[arg(long, global = true, env = "GEQ_RANK", value_parser = clap::value_parser!(u64).range(1..))]
    rank: Option<u64>,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble Ω from a presentation with an embedding table.
    Build {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Where to write the planted piece solution.
        #[arg(long)]
        solution_out: Option<PathBuf>,
    },
    /// Check the structural invariants of Ω.
    Validate { file: PathBuf },
    /// List the basic and boundary equations of Ω.
    Derive { file: PathBuf },
    /// The presentation of G_Ω and its abelianization.
    Present { file: PathBuf },
    /// Check a solution against Ω.
    Verify {
        file: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Complexity τ with per-section counts.
    Tau { file: PathBuf },
    /// Apply one transformation: `geq xform <et1..et5|d1..d8> [params..] file.geq`.
    Xform {
        name: String,
        /// Transformation parameters followed by the equation file.
        #[arg(required = true, num_args = 1..)]
        args: Vec<String>,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        solution_out: Option<PathBuf>,
        /// Print the morphism as item substitutions.
        #[arg(long)]
        trace: bool,
    },
    /// Run the elimination process and report the decomposition chain.
    Eliminate {
        file: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Bound f₁ for prohibited paths; defaults to the number of base pairs.
        #[arg(long)]
        f1: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
    },
    /// Draw Ω as SVG.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 80)]
        item_width: i64,
        #[arg(long)]
        no_connections: bool,
    },
    /// A random equation with a planted solution, drawn from `--seed`.
    Sample {
        #[arg(long, default_value_t = 10)]
        items: usize,
        #[arg(long, default_value_t = 8)]
        bases: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        solution_out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Outcome {
    let mut cfg = SessionConfig {
        rank: cli.common.rank.map(|r| r as usize),
        format: cli.common.format,
        seed: cli.common.seed,
        ..SessionConfig::default()
    };
    match cli.command {
        Command::Build { input, output, solution_out } => {
            geq_cli::cmd_build(&cfg, &input, output.as_deref(), solution_out.as_deref())
        }
        Command::Validate { file } => geq_cli::cmd_validate(&cfg, &file),
        Command::Derive { file } => geq_cli::cmd_derive(&cfg, &file),
        Command::Present { file } => geq_cli::cmd_present(&cfg, &file),
        Command::Verify { file, solution } => geq_cli::cmd_verify(&cfg, &file, &solution),
        Command::Tau { file } => geq_cli::cmd_tau(&cfg, &file),
        Command::Xform { name, mut args, solution, output, solution_out, trace } => {
            cfg.trace = trace;
            let file = PathBuf::from(args.pop().expect("clap requires one argument"));
            geq_cli::cmd_xform(&cfg, &name, &args, &file, solution.as_ref(), output.as_deref(), solution_out.as_deref())
        }
        Command::Eliminate { file, solution, max_steps, f1, report, trace } => {
            cfg.max_steps = max_steps;
            cfg.f1 = f1;
            cfg.trace = trace;
            geq_cli::cmd_eliminate(&cfg, &file, solution.as_ref(), report.as_deref())
        }
        Command::Render { file, output, item_width, no_connections } => {
            cfg.render.item_width = item_width.max(20);
            cfg.render.show_connections = !no_connections;
            geq_cli::cmd_render(&cfg, &file, output.as_deref())
        }
        Command::Sample { items, bases, output, solution_out } => {
            geq_cli::cmd_sample(&cfg, items, bases, output.as_deref(), solution_out.as_deref())
        }
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
