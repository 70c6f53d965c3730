use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::formats::{
    format_edge_list, format_signals, format_trace, natural_style, parse_edge_list, parse_signals,
    read_text, EdgeListStyle,
};
use super::manifest::RunManifest;
use super::{default_out_dir, InitKind, ModelKind};
use crate::datagen::{
    generate_er, generate_sbm, sample_smooth_signals, GroundTruthGraph, SignalModelConfig,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    self, default_grid, f_measure, grid_search, BenchmarkOptions, EvalReport, ThresholdPolicy,
};
use crate::graph::{distance_vector, EdgeVector};
use crate::solver::{self, Init, OracleOptions, SolverConfig, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenGraphConfig {
    pub model: ModelKind,
    pub nodes: usize,
    pub p: f64,
    pub blocks: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for GenGraphConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Er,
            nodes: 200,
            p: 0.1,
            blocks: vec![100, 100],
            p_in: 0.3,
            p_out: 0.05,
            seed: 0,
            out: None,
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSignalsConfig {
    pub graph: Option<PathBuf>,
    pub signals: usize,
    pub sigma: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for GenSignalsConfig {
    fn default() -> Self {
        Self {
            graph: None,
            signals: 1000,
            sigma: 0.1,
            seed: 0,
            out: None,
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub signals: Option<PathBuf>,
    pub distances: Option<PathBuf>,
    pub distance_scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub variant: Variant,
    pub restart: usize,
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
    pub init: InitKind,
    pub init_seed: u64,
    pub reference: Option<PathBuf>,
    pub trace_stride: usize,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for LearnConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            signals: None,
            distances: None,
            distance_scale: 1.0,
            alpha: solver.alpha,
            beta: solver.beta,
            variant: solver.variant,
            restart: solver.restart_interval.unwrap_or(0),
            tol: solver.tol,
            residual_tol: solver.residual_tol,
            max_iter: solver.max_iter,
            init: InitKind::Zeros,
            init_seed: 0,
            reference: None,
            trace_stride: 1,
            out: None,
            trace: None,
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub signals: Option<PathBuf>,
    pub distances: Option<PathBuf>,
    pub distance_scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub variants: Vec<Variant>,
    pub targets: Vec<f64>,
    pub restart: usize,
    pub max_iter: usize,
    pub oracle_iter: usize,
    pub check_bounds: bool,
    pub out_dir: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            signals: None,
            distances: None,
            distance_scale: 1.0,
            alpha: 1.0,
            beta: 1.0,
            variants: vec![Variant::Fdpg, Variant::Dpg],
            targets: vec![1e-2, 1e-4, 1e-6, 1e-8],
            restart: 100,
            max_iter: 10_000,
            oracle_iter: OracleOptions::default().max_iter,
            check_bounds: false,
            out_dir: None,
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub truth: Option<PathBuf>,
    pub learned: Option<PathBuf>,
    pub signals: Option<PathBuf>,
    pub distances: Option<PathBuf>,
    pub distance_scale: f64,
    pub variant: Variant,
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub threshold_rel: f64,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            truth: None,
            learned: None,
            signals: None,
            distances: None,
            distance_scale: 1.0,
            variant: Variant::Fdpg,
            restart: 100,
            tol: 1e-10,
            max_iter: 10_000,
            alphas: default_grid(),
            betas: default_grid(),
            threshold_rel: ThresholdPolicy::default().relative,
            out: None,
            manifest: None,
        }
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::argument(format!("missing required --{flag}")))
}

fn manifest_path(explicit: &Option<PathBuf>, out: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    })
}

fn restart_interval(restart: usize) -> Option<usize> {
    (restart > 0).then_some(restart)
}

fn load_edges(path: &Path, manifest: &mut RunManifest) -> Result<EdgeVector> {
    let w = parse_edge_list(&read_text(path)?)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    manifest.add_input(path)?;
    Ok(w)
}

/// Distances from exactly one of a signal CSV or a distance edge list.
fn load_distances(
    signals: &Option<PathBuf>,
    distances: &Option<PathBuf>,
    scale: f64,
    manifest: &mut RunManifest,
) -> Result<EdgeVector> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::argument(format!(
            "distance scale must be positive, got {scale}"
        )));
    }
    let e = match (signals, distances) {
        (Some(path), None) => {
            let x = parse_signals(&read_text(path)?)
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            manifest.add_input(path)?;
            distance_vector(&x)
        }
        (None, Some(path)) => load_edges(path, manifest)?,
        _ => {
            return Err(Error::argument(
                "give exactly one of --signals or --distances",
            ))
        }
    };
    Ok(if scale == 1.0 { e } else { e.scaled(scale) })
}

pub fn gen_graph(mut config: GenGraphConfig) -> Result<()> {
    let start = Instant::now();
    let out = config
        .out
        .get_or_insert_with(|| default_out_dir().join("graph.edges"))
        .clone();
    let manifest_file = manifest_path(&config.manifest, &out);
    config.manifest = Some(manifest_file.clone());

    let graph = match config.model {
        ModelKind::Er => generate_er(config.nodes, config.p, config.seed)?,
        ModelKind::Sbm => generate_sbm(&config.blocks, config.p_in, config.p_out, config.seed)?,
    };
    let mut manifest = RunManifest::new("gen-graph", &config)?;
    manifest.seeds.insert("graph".into(), config.seed);
    manifest.write_output(
        &out,
        format_edge_list(&graph.edges, natural_style(&graph.edges)).as_bytes(),
    )?;
    if !graph.connected {
        eprintln!("note: generated graph is disconnected");
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(&manifest_file)
}

pub fn gen_signals(mut config: GenSignalsConfig) -> Result<()> {
    let start = Instant::now();
    let graph_path = required(&config.graph, "graph")?.to_path_buf();
    let out = config
        .out
        .get_or_insert_with(|| default_out_dir().join("signals.csv"))
        .clone();
    let manifest_file = manifest_path(&config.manifest, &out);
    config.manifest = Some(manifest_file.clone());

    let mut manifest = RunManifest::new("gen-signals", &config)?;
    let graph = GroundTruthGraph::from_edges(load_edges(&graph_path, &mut manifest)?);
    let x = sample_smooth_signals(
        &graph,
        &SignalModelConfig {
            sigma_e: config.sigma,
            n_signals: config.signals,
            seed: config.seed,
        },
    )?;
    manifest.seeds.insert("signals".into(), config.seed);
    manifest.write_output(&out, format_signals(&x).as_bytes())?;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(&manifest_file)
}

pub fn learn(mut config: LearnConfig) -> Result<()> {
    let start = Instant::now();
    let out = config
        .out
        .get_or_insert_with(|| default_out_dir().join("learned.edges"))
        .clone();
    let trace_file = config
        .trace
        .get_or_insert_with(|| default_out_dir().join("trace.csv"))
        .clone();
    let manifest_file = manifest_path(&config.manifest, &out);
    config.manifest = Some(manifest_file.clone());

    let mut manifest = RunManifest::new("learn", &config)?;
    let e = load_distances(
        &config.signals,
        &config.distances,
        config.distance_scale,
        &mut manifest,
    )?;
    let reference = match &config.reference {
        Some(path) => Some(load_edges(path, &mut manifest)?),
        None => None,
    };
    let solver_config = SolverConfig {
        alpha: config.alpha,
        beta: config.beta,
        variant: config.variant,
        restart_interval: restart_interval(config.restart),
        max_iter: config.max_iter,
        tol: config.tol,
        residual_tol: config.residual_tol,
        init: match config.init {
            InitKind::Zeros => Init::Zeros,
            InitKind::Gaussian => Init::Gaussian {
                seed: config.init_seed,
            },
        },
        trace_stride: config.trace_stride,
    };
    let solution = solver::solve(&e, &solver_config, reference.as_ref())?;
    if config.init == InitKind::Gaussian {
        manifest.seeds.insert("init".into(), config.init_seed);
    }
    manifest.write_output(
        &out,
        format_edge_list(&solution.weights, EdgeListStyle::Weighted).as_bytes(),
    )?;
    manifest.write_output(&trace_file, format_trace(&solution.trace).as_bytes())?;
    eprintln!(
        "{} iterations, converged: {}, KKT residual: {:.3e}",
        solution.iterations,
        solution.converged,
        solver::optimality_residual(&solution.weights, &solution.dual, config.alpha)?
    );
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(&manifest_file)
}

pub fn benchmark(mut config: BenchmarkConfig) -> Result<()> {
    let start = Instant::now();
    let out_dir = config
        .out_dir
        .get_or_insert_with(|| default_out_dir().join("benchmark"))
        .clone();
    let manifest_file = config
        .manifest
        .get_or_insert_with(|| out_dir.join("manifest.json"))
        .clone();
    let mut seen = Vec::new();
    for v in &config.variants {
        if seen.contains(v) {
            return Err(Error::argument(format!(
                "variant `{}` listed twice",
                v.name()
            )));
        }
        seen.push(*v);
    }

    let mut manifest = RunManifest::new("benchmark", &config)?;
    let e = load_distances(
        &config.signals,
        &config.distances,
        config.distance_scale,
        &mut manifest,
    )?;
    let variants: Vec<SolverConfig> = config
        .variants
        .iter()
        .map(|&variant| SolverConfig {
            variant,
            restart_interval: restart_interval(config.restart),
            max_iter: config.max_iter,
            tol: 0.0,
            ..SolverConfig::default()
        })
        .collect();
    let options = BenchmarkOptions {
        oracle: OracleOptions {
            max_iter: config.oracle_iter,
            ..OracleOptions::default()
        },
        check_bounds: config.check_bounds,
    };
    let result = evaluation::benchmark(
        &e,
        config.alpha,
        config.beta,
        &variants,
        &config.targets,
        &options,
    )?;

    manifest.write_output(
        &out_dir.join("reference.edges"),
        format_edge_list(&result.reference.weights, EdgeListStyle::Weighted).as_bytes(),
    )?;
    let mut summary = String::from("variant,target,iterations,seconds\n");
    for run in &result.runs {
        manifest.write_output(
            &out_dir.join(format!("trace_{}.csv", run.label)),
            format_trace(&run.trace).as_bytes(),
        )?;
        for (target, hit) in result.targets.iter().zip(&run.hits) {
            match hit {
                Some(h) => writeln!(
                    summary,
                    "{},{target:e},{},{}",
                    run.label, h.iteration, h.seconds
                ),
                None => writeln!(summary, "{},{target:e},not reached,", run.label),
            }
            .unwrap();
        }
    }
    manifest.write_output(&out_dir.join("summary.csv"), summary.as_bytes())?;

    if config.check_bounds {
        let mut bounds = String::from("variant,dual_gap_violations,primal_error_violations\n");
        // The bounds describe the accelerated method only.
        for run in result
            .runs
            .iter()
            .filter(|r| r.config.variant == Variant::Fdpg)
        {
            let rb = result.rate_bounds(run);
            writeln!(
                bounds,
                "{},{},{}",
                run.label,
                rb.dual_violations(&run.trace, result.reference.dual_objective)
                    .len(),
                rb.primal_violations(&run.trace).len()
            )
            .unwrap();
        }
        manifest.write_output(&out_dir.join("bounds.csv"), bounds.as_bytes())?;
    }
    eprintln!(
        "reference: {} iterations, KKT residual {:.3e}",
        result.reference.iterations, result.reference.residual
    );
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(&manifest_file)
}

const EVAL_HEADER: &str =
    "alpha,beta,threshold,tp,fp,fn,tn,precision,recall,f_measure,empty,failed,best";

fn eval_row(out: &mut String, report: &EvalReport, failed: bool, best: bool) {
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cell(report.alpha),
        cell(report.beta),
        report.threshold,
        report.true_positives,
        report.false_positives,
        report.false_negatives,
        report.true_negatives,
        report.precision,
        report.recall,
        report.f_measure,
        u8::from(report.empty_estimate),
        u8::from(failed),
        u8::from(best)
    )
    .unwrap();
}

pub fn eval(mut config: EvalConfig) -> Result<()> {
    let start = Instant::now();
    let truth_path = required(&config.truth, "truth")?.to_path_buf();
    let out = config
        .out
        .get_or_insert_with(|| default_out_dir().join("eval.csv"))
        .clone();
    let manifest_file = manifest_path(&config.manifest, &out);
    config.manifest = Some(manifest_file.clone());

    let mut manifest = RunManifest::new("eval", &config)?;
    let truth = GroundTruthGraph::from_edges(load_edges(&truth_path, &mut manifest)?);
    let policy = ThresholdPolicy {
        relative: config.threshold_rel,
    };
    let mut table = format!("{EVAL_HEADER}\n");
    if let Some(learned_path) = &config.learned {
        let learned = load_edges(learned_path, &mut manifest)?;
        let report = f_measure(&learned, &truth, policy)?;
        eval_row(&mut table, &report, false, true);
        eprintln!("F-measure {:.4}", report.f_measure);
    } else {
        let e = load_distances(
            &config.signals,
            &config.distances,
            config.distance_scale,
            &mut manifest,
        )?;
        let template = SolverConfig {
            variant: config.variant,
            restart_interval: restart_interval(config.restart),
            tol: config.tol,
            max_iter: config.max_iter,
            ..SolverConfig::default()
        };
        let grid = grid_search(&e, &truth, &config.alphas, &config.betas, &template, policy)?;
        for (idx, cell) in grid.cells.iter().enumerate() {
            eval_row(
                &mut table,
                &cell.report,
                cell.failure.is_some(),
                idx == grid.best,
            );
        }
        let best = grid.best_cell();
        eprintln!(
            "best alpha {} beta {} F-measure {:.4}",
            best.alpha, best.beta, best.report.f_measure
        );
    }
    manifest.write_output(&out, table.as_bytes())?;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(&manifest_file)
}
