//! Experiment harness for the `threadwire` library: parses a sectioned
//! config, runs one task and writes CSV reports stamped with the config
//! digest and seed.

pub mod config;
pub mod csv;
mod tasks;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ExperimentConfig, Overrides, PolygonSource, Task, Tolerances};
pub use csv::{CsvDoc, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Everything a task produced, held in memory until the run succeeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    /// `(file name, contents)` in output order.
    pub files: Vec<(String, String)>,
    /// All checks the task performs passed.
    pub verified: bool,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

/// Runs the configured task without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match cfg.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| tasks::run(cfg))
        }
        None => tasks::run(cfg),
    }
}

/// Writes each artifact through a temporary file and a rename.
pub fn write_artifacts(dir: &Path, art: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Output { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::with_capacity(art.files.len());
    for (name, body) in &art.files {
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.partial"));
        std::fs::write(&tmp, body).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Result of a full run: process exit status and the files written.
#[derive(Debug)]
pub struct RunOutcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Executes and writes; exit code 0 when verified, 4 when a check failed.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let art = execute(cfg)?;
    let files = write_artifacts(&cfg.out_dir, &art)?;
    Ok(RunOutcome { code: if art.verified { 0 } else { 4 }, files, summary: art.summary })
}

/// Loads the config at `path`, runs it and returns the process exit code.
pub fn main_with(path: &Path, over: &Overrides) -> i32 {
    let outcome = ExperimentConfig::load(path, over).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if o.code == 4 {
                eprintln!("verification failed");
            }
            o.code
        }
        Err(e) => {
            eprintln!("threadwire: {e}");
            e.exit_code()
        }
    }
}
