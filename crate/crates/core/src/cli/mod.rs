//! Command-line front end.
//!
//! Every command resolves its configuration as flags > `--config` TOML file >
//! defaults, runs, and writes a JSON run manifest holding the resolved
//! configuration. `graphlearn replay <manifest>` re-runs a command from it.

mod commands;
pub mod formats;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Variant;

pub use commands::{BenchmarkConfig, EvalConfig, GenGraphConfig, GenSignalsConfig, LearnConfig};
pub use manifest::RunManifest;

/// Environment variable naming the directory for default output paths.
pub const OUT_DIR_ENV: &str = "GRAPHLEARN_OUT_DIR";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) => EXIT_USAGE,
        Error::Io { .. } => EXIT_IO,
        Error::Data(_) => EXIT_DATA,
        Error::Numerical { .. } => EXIT_NUMERICAL,
    }
}

pub(crate) fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Parser)]
#[command(
    name = "graphlearn",
    version,
    about = "Learn graphs from smooth signals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an Erdős–Rényi or stochastic block model graph.
    GenGraph(GenGraphArgs),
    /// Sample smooth signals on a graph.
    GenSignals(GenSignalsArgs),
    /// Learn a graph from signals or distances.
    Learn(LearnArgs),
    /// Compare solver variants against a high-precision reference.
    Benchmark(BenchmarkArgs),
    /// Score a learned graph, or grid-search (alpha, beta).
    Eval(EvalArgs),
    /// Re-run a command from its manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Er,
    Sbm,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "er" => Ok(ModelKind::Er),
            "sbm" => Ok(ModelKind::Sbm),
            _ => Err(Error::argument(format!(
                "unknown graph model `{s}` (expected er or sbm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Zeros,
    Gaussian,
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(InitKind::Zeros),
            "gaussian" => Ok(InitKind::Gaussian),
            _ => Err(Error::argument(format!(
                "unknown init `{s}` (expected zeros or gaussian)"
            ))),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenGraphArgs {
    /// TOML file with defaults for any flag below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Node count (ER).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Edge probability (ER).
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated block sizes (SBM).
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSignalsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Ground-truth edge list.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Number of signals P.
    #[arg(long)]
    pub signals: Option<usize>,
    /// Noise level sigma_e.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Where the pairwise distances come from.
#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Signal CSV (N rows, P columns).
    #[arg(long)]
    pub signals: Option<PathBuf>,
    /// Precomputed distances as an edge list.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    /// Multiply the distances by this factor.
    #[arg(long)]
    pub distance_scale: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Momentum restart interval for FDPG; 0 disables restarts.
    #[arg(long)]
    pub restart: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest KKT residual accepted as converged.
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub init: Option<InitKind>,
    #[arg(long)]
    pub init_seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LearnArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Reference solution w*; adds the err_to_ref trace column.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Record every n-th iteration in the trace.
    #[arg(long)]
    pub trace_stride: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated solver variants.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<Variant>>,
    /// Comma-separated, strictly decreasing target errors.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<f64>>,
    #[arg(long)]
    pub restart: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Iterations for the reference solution.
    #[arg(long)]
    pub oracle_iter: Option<usize>,
    /// Disable restarts and check the worst-case rate bounds.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub check_bounds: Option<bool>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Ground-truth edge list.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Learned edge list to score. Without it, a grid search is run on the input.
    #[arg(long)]
    pub learned: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub restart: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Binarization threshold relative to the largest learned weight.
    #[arg(long)]
    pub threshold_rel: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn strip_nulls(value: &mut serde_json::Value) {
    if let serde_json::Value::Object(map) = value {
        map.retain(|_, v| !v.is_null());
    }
}

/// Resolves a command configuration: defaults, overlaid by the TOML config
/// file, overlaid by explicit flags.
pub(crate) fn resolve<C>(file: Option<&Path>, flags: &impl Serialize) -> Result<C>
where
    C: Serialize + DeserializeOwned + Default,
{
    let to_json = |e: serde_json::Error| Error::argument(e.to_string());
    let mut merged = serde_json::to_value(C::default()).map_err(to_json)?;
    let mut layers = Vec::new();
    if let Some(path) = file {
        let text = formats::read_text(path)?;
        let table: serde_json::Value = toml::from_str(&text)
            .map_err(|e| Error::argument(format!("{}: {e}", path.display())))?;
        layers.push(table);
    }
    let mut flag_values = serde_json::to_value(flags).map_err(to_json)?;
    strip_nulls(&mut flag_values);
    layers.push(flag_values);
    for layer in layers {
        let serde_json::Value::Object(fields) = layer else {
            return Err(Error::argument("configuration must be a table"));
        };
        let target = merged
            .as_object_mut()
            .expect("configs serialize as objects");
        for (key, value) in fields {
            if !target.contains_key(&key) {
                return Err(Error::argument(format!(
                    "unknown configuration key `{key}`"
                )));
            }
            target.insert(key, value);
        }
    }
    serde_json::from_value(merged)
        .map_err(|e| Error::argument(format!("invalid configuration: {e}")))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGraph(args) => {
            let config: GenGraphConfig = resolve(args.config.as_deref(), &args)?;
            commands::gen_graph(config)
        }
        Command::GenSignals(args) => {
            let config: GenSignalsConfig = resolve(args.config.as_deref(), &args)?;
            commands::gen_signals(config)
        }
        Command::Learn(args) => {
            let config: LearnConfig = resolve(args.config.as_deref(), &args)?;
            commands::learn(config)
        }
        Command::Benchmark(args) => {
            let config: BenchmarkConfig = resolve(args.config.as_deref(), &args)?;
            commands::benchmark(config)
        }
        Command::Eval(args) => {
            let config: EvalConfig = resolve(args.config.as_deref(), &args)?;
            commands::eval(config)
        }
        Command::Replay { manifest } => replay(&manifest),
    }
}

fn from_manifest<C: DeserializeOwned>(manifest: &RunManifest) -> Result<C> {
    serde_json::from_value(manifest.config.clone()).map_err(|e| {
        Error::data(format!(
            "manifest config does not match `{}`: {e}",
            manifest.command
        ))
    })
}

/// Re-runs the command recorded in a manifest with its resolved config.
pub fn replay(path: &Path) -> Result<()> {
    let manifest = RunManifest::load(path)?;
    manifest.verify_inputs()?;
    match manifest.command.as_str() {
        "gen-graph" => commands::gen_graph(from_manifest(&manifest)?),
        "gen-signals" => commands::gen_signals(from_manifest(&manifest)?),
        "learn" => commands::learn(from_manifest(&manifest)?),
        "benchmark" => commands::benchmark(from_manifest(&manifest)?),
        "eval" => commands::eval(from_manifest(&manifest)?),
        other => Err(Error::data(format!(
            "unknown command `{other}` in manifest"
        ))),
    }
}
