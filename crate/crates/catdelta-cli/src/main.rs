//! Command-line surface for categorical distance experiments: build
//! dissimilarity blocks, compute distance matrices, run KNN / PAM /
//! cross-validation, verify metric properties, and benchmark the closed-form
//! total variation distance against the partition-enumeration oracle.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use config::{CliSet, PartialConfig, RunConfig};

/// Error with the exit-code taxonomy: 1 usage, 2 data, 3 numeric domain.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub kind: &'static str,
    pub code: i32,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            kind: "usage",
            code: 1,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            kind: "data",
            code: 2,
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            kind: "domain",
            code: 3,
        }
    }

    /// Single machine-readable JSON object for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.message,
            "kind": self.kind,
            "code": self.code,
        })
        .to_string()
    }
}

impl From<catdelta::Error> for CliError {
    fn from(e: catdelta::Error) -> Self {
        match e.kind() {
            catdelta::ErrorKind::Domain => CliError::domain(e.to_string()),
            catdelta::ErrorKind::Data => CliError::data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "catdelta",
    version,
    about = "Distances for categorical data via block-diagonal category dissimilarities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build category dissimilarity blocks and export them as CSV
    Delta(CommonOpts),
    /// Compute a distance matrix (pairwise, or --against a second file)
    Dist(CommonOpts),
    /// Classify the rows of --against by k nearest neighbors
    Knn(CommonOpts),
    /// Cluster around k medoids
    Pam(CommonOpts),
    /// Repeated cross-validated evaluation over a list of measures
    Cv(CommonOpts),
    /// Metric-property report (zero diagonal, symmetry, triangle) per measure
    Check(CommonOpts),
    /// Wall-time comparison: closed-form TVD vs partition enumeration,
    /// gather vs dense distances
    Bench(CommonOpts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Delta(_) => "delta",
            Command::Dist(_) => "dist",
            Command::Knn(_) => "knn",
            Command::Pam(_) => "pam",
            Command::Cv(_) => "cv",
            Command::Check(_) => "check",
            Command::Bench(_) => "bench",
        }
    }

    fn opts(&self) -> &CommonOpts {
        match self {
            Command::Delta(o)
            | Command::Dist(o)
            | Command::Knn(o)
            | Command::Pam(o)
            | Command::Cv(o)
            | Command::Check(o)
            | Command::Bench(o) => o,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Input CSV file
    input: Option<PathBuf>,

    /// Config file (JSON or key=value); flags override file values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Measure name (delta/dist/knn/pam)
    #[arg(long)]
    measure: Option<String>,

    /// Comma-separated measure names (cv/check)
    #[arg(long)]
    measures: Option<String>,

    /// Pair weights for association measures: "ones", "mean", or a CSV path
    #[arg(long)]
    weights: Option<String>,

    /// Name of the response (class) column in the input CSV
    #[arg(long)]
    response: Option<String>,

    /// Turn association measures supervised: "supervised" or "full"
    #[arg(long)]
    supervised_mode: Option<String>,

    /// Lin singularity handling: "strict", "default" (1/(2n)), or an epsilon
    #[arg(long)]
    lin_guard: Option<String>,

    /// Floor for profile entries inside the KL divergence
    #[arg(long)]
    kl_floor: Option<f64>,

    /// Use the one-directional KL sum (makes distances non-symmetric)
    #[arg(long, action = ArgAction::SetTrue)]
    directed_kl: bool,

    /// Unseen-category policy: "error" or "max"
    #[arg(long)]
    unseen: Option<String>,

    /// Neighbor count (knn) or cluster count (pam)
    #[arg(long)]
    k: Option<usize>,

    /// Comma-separated neighbor grid for cv (default 1,3,5,9,15,21)
    #[arg(long)]
    k_grid: Option<String>,

    /// Number of cross-validation folds
    #[arg(long)]
    folds: Option<usize>,

    /// Number of cross-validation repeats
    #[arg(long)]
    repeats: Option<usize>,

    /// RNG seed (folds, PAM starts)
    #[arg(long)]
    seed: Option<u64>,

    /// Symmetrize non-symmetric distance matrices as (D + D')/2
    #[arg(long, action = ArgAction::SetTrue)]
    symmetrize: bool,

    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// cv task: "knn" or "pam"
    #[arg(long)]
    task: Option<String>,

    /// Second CSV: distance targets (dist) or test rows (knn)
    #[arg(long)]
    against: Option<PathBuf>,

    /// Input has no header row
    #[arg(long, action = ArgAction::SetTrue)]
    no_header: bool,

    /// Field delimiter (default ',')
    #[arg(long)]
    delimiter: Option<char>,

    /// Missing-cell policy: "error" or "drop_row"
    #[arg(long)]
    na_policy: Option<String>,
}

fn resolve(command: &Command) -> Result<RunConfig, CliError> {
    let opts = command.opts();
    let mut cfg = RunConfig::defaults(command.name());
    let mut set = CliSet::default();

    if let Some(v) = &opts.input {
        cfg.input = Some(v.clone());
        set.input = true;
    }
    if let Some(v) = &opts.against {
        cfg.against = Some(v.clone());
        set.against = true;
    }
    match (&opts.measure, &opts.measures) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("give either --measure or --measures, not both"))
        }
        (Some(m), None) => {
            cfg.measures = vec![m.clone()];
            set.measures = true;
        }
        (None, Some(ms)) => {
            cfg.measures = ms
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            set.measures = true;
        }
        (None, None) => {}
    }
    if let Some(v) = &opts.weights {
        cfg.weights = v.clone();
        set.weights = true;
    }
    if let Some(v) = &opts.response {
        cfg.response = Some(v.clone());
        set.response = true;
    }
    if let Some(v) = &opts.supervised_mode {
        cfg.supervised_mode = Some(v.clone());
        set.supervised_mode = true;
    }
    if let Some(v) = &opts.lin_guard {
        cfg.lin_guard = v.clone();
        set.lin_guard = true;
    }
    if let Some(v) = opts.kl_floor {
        cfg.kl_floor = v;
        set.kl_floor = true;
    }
    if opts.directed_kl {
        cfg.directed_kl = true;
        set.directed_kl = true;
    }
    if let Some(v) = &opts.unseen {
        cfg.unseen = v.clone();
        set.unseen = true;
    }
    if let Some(v) = opts.k {
        cfg.k = Some(v);
        set.k = true;
    }
    if let Some(v) = &opts.k_grid {
        cfg.k_grid = v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::usage(format!("bad k in --k-grid: '{s}'")))
            })
            .collect::<Result<_, _>>()?;
        set.k_grid = true;
    }
    if let Some(v) = opts.folds {
        cfg.folds = v;
        set.folds = true;
    }
    if let Some(v) = opts.repeats {
        cfg.repeats = v;
        set.repeats = true;
    }
    if let Some(v) = opts.seed {
        cfg.seed = v;
        set.seed = true;
    }
    if opts.symmetrize {
        cfg.symmetrize = true;
        set.symmetrize = true;
    }
    if let Some(v) = opts.threads {
        cfg.threads = Some(v);
        set.threads = true;
    }
    if let Some(v) = &opts.out {
        cfg.out = v.clone();
        set.out = true;
    }
    if let Some(v) = &opts.task {
        cfg.task = v.clone();
        set.task = true;
    }
    if opts.no_header {
        cfg.has_header = false;
        set.has_header = true;
    }
    if let Some(v) = opts.delimiter {
        cfg.delimiter = v;
        set.delimiter = true;
    }
    if let Some(v) = &opts.na_policy {
        cfg.na_policy = v.clone();
        set.na_policy = true;
    }

    if let Some(path) = &opts.config {
        let partial = PartialConfig::load(path)?;
        if let Some(c) = &partial.command {
            if c != command.name() {
                eprintln!(
                    "warning: config {} was echoed from a '{c}' run, running '{}'",
                    path.display(),
                    command.name()
                );
            }
        }
        partial.merge_into(&mut cfg, &set);
    }
    Ok(cfg)
}

fn run(command: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Delta(_) => commands::run_delta(cfg),
        Command::Dist(_) => commands::run_dist(cfg),
        Command::Knn(_) => commands::run_knn(cfg),
        Command::Pam(_) => commands::run_pam(cfg),
        Command::Cv(_) => commands::run_cv(cfg),
        Command::Check(_) => commands::run_check(cfg),
        Command::Bench(_) => commands::run_bench(cfg),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            let err = CliError::usage(e.to_string());
            eprintln!("{}", err.to_json_line());
            std::process::exit(err.code);
        }
    };

    let result = resolve(&cli.command).and_then(|cfg| {
        if let Some(t) = cfg.threads {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run(&cli.command, &cfg))
        } else {
            run(&cli.command, &cfg)
        }
    });

    if let Err(err) = result {
        eprintln!("{}", err.to_json_line());
        std::process::exit(err.code);
    }
}
