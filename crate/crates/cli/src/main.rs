use std::path::PathBuf;

use clap::Parser;
use threadwire_cli::{main_with, Overrides};

/// Runs one threadwire experiment and writes its CSV reports.
///
/// Exit status: 0 success, 2 config error, 3 numerical failure,
/// 4 verification failure.
#[derive(Debug, Parser)]
#[command(name = "threadwire", version)]
struct Args {
    /// Experiment config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Seed recorded in every output; overrides `run.seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and fuzzing.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Replace a `[tolerances]` entry; may be repeated.
    #[arg(long = "tol-override", value_name = "KEY=VAL")]
    tol_override: Vec<String>,
}

fn main() {
    let a = Args::parse();
    let over = Overrides { seed: a.seed, out: a.out, jobs: a.jobs, tolerances: a.tol_override };
    std::process::exit(main_with(&a.config, &over));
}
