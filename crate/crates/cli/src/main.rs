//! `stqp`: exact and relaxed solution of standard quadratic programs.
//!
//! Exit codes: 0 success, 1 other failure, 2 unreadable input or bad
//! arguments, 3 size cap exceeded, 4 a verification check failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;

use commands::Ctx;

#[derive(Parser)]
#[command(name = "stqp", version, about = "Standard quadratic programs and their DNN relaxation")]
struct Cli {
    /// Optimality tolerance of the exact solver (solve) or the interior
    /// point method (relax).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for generated instances; overrides the recipe's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest accepted dimension, at most the module maximum.
    #[arg(long, global = true)]
    cap_n: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global minimum over the simplex with KKT data per minimizer.
    Solve { matrix: PathBuf },
    /// DNN relaxation value with primal and dual solutions.
    Relax { matrix: PathBuf },
    /// Exactness verdict, family membership and convexity graph analysis.
    Classify { matrix: PathBuf },
    /// Instances from a JSON recipe, each re-verified; writes a manifest.
    Generate {
        recipe: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Weighted clique number, theta and theta' of the complement.
    Theta {
        graph: PathBuf,
        /// Comma-separated positive vertex weights.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Convexity graph of a matrix file, or a graph JSON file.
    AnalyzeGraph {
        input: PathBuf,
        /// Also write the graph in Graphviz format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

/// Bad input or arguments.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A computed result broke a guarantee.
#[derive(Debug)]
pub struct Failure(pub String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if cause.is::<Failure>() {
            return 4;
        }
        match cause.downcast_ref::<stqp_core::Error>() {
            Some(stqp_core::Error::CapExceeded { .. }) => return 3,
            Some(stqp_core::Error::Parse { .. }) => return 2,
            _ => {}
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx {
        tol: cli.tol,
        seed: cli.seed,
        cap_n: cli.cap_n,
        json_out: cli.json_out,
        verbose: cli.verbose,
    };
    if let Some(t) = ctx.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Usage(format!("--tol must be positive, got {t}")).into());
        }
    }
    match cli.command {
        Command::Solve { matrix } => commands::solve(&ctx, &matrix),
        Command::Relax { matrix } => commands::relax(&ctx, &matrix),
        Command::Classify { matrix } => commands::classify(&ctx, &matrix),
        Command::Generate {
            recipe,
            count,
            out_dir,
        } => commands::generate(&ctx, &recipe, count, &out_dir),
        Command::Theta { graph, weights } => commands::theta_cmd(&ctx, &graph, weights),
        Command::AnalyzeGraph { input, dot } => {
            commands::analyze_graph(&ctx, &input, dot.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
