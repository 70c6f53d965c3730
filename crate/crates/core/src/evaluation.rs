//! Edge-detection scoring, `(α, β)` model selection and convergence
//! benchmarks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::GroundTruthGraph;
use crate::error::{Error, Result};
use crate::graph::EdgeVector;
use crate::solver::{
    oracle_solve, solve, ConvergenceTrace, OracleOptions, OracleSolution, RateBounds, SolverConfig,
};

/// Learned weights are binarized as `w > relative · max(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub relative: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self { relative: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// The learned graph had no edge above the threshold.
    pub empty_estimate: bool,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F-measure of the binarized learned graph against
/// the edge set of `truth`.
pub fn f_measure(
    learned: &EdgeVector,
    truth: &GroundTruthGraph,
    policy: ThresholdPolicy,
) -> Result<EvalReport> {
    learned
        .check_same_graph(&truth.edges)
        .map_err(|e| Error::Data(e.to_string()))?;
    let threshold = policy.relative * learned.max();
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (w, t) in learned.values().iter().zip(truth.edges.values()) {
        match (*w > threshold, *t > 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EvalReport {
        threshold,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        precision,
        recall,
        f_measure: f,
        alpha: None,
        beta: None,
        empty_estimate: tp + fp == 0,
    })
}

/// `count` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// Ten log-spaced values in `[1e-2, 1e2]`.
pub fn default_grid() -> Vec<f64> {
    log_space(1e-2, 1e2, 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub report: EvalReport,
    pub iterations: usize,
    /// Set when the solver failed on this cell; the cell then scores 0.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    /// Row-major over `alphas × betas`.
    pub cells: Vec<GridCell>,
    pub best: usize,
}

impl GridSearch {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Index of the best cell: highest F-measure, ties toward larger `β`, then
/// the earliest cell in grid order.
pub fn select_best(cells: &[GridCell]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (idx, cell) in cells.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &cells[b];
                cell.report.f_measure > cur.report.f_measure
                    || (cell.report.f_measure == cur.report.f_measure && cell.beta > cur.beta)
            }
        };
        if better {
            best = Some(idx);
        }
    }
    best
}

fn empty_report(alpha: f64, beta: f64, truth: &GroundTruthGraph) -> EvalReport {
    let positives = truth.edge_count();
    EvalReport {
        threshold: 0.0,
        true_positives: 0,
        false_positives: 0,
        false_negatives: positives,
        true_negatives: truth.edges.len() - positives,
        precision: 0.0,
        recall: 0.0,
        f_measure: 0.0,
        alpha: Some(alpha),
        beta: Some(beta),
        empty_estimate: true,
    }
}

/// Solves one instance per `(α, β)` pair and scores it against `truth`.
/// Cells are solved in parallel; the table is always in grid order.
pub fn grid_search(
    e: &EdgeVector,
    truth: &GroundTruthGraph,
    alphas: &[f64],
    betas: &[f64],
    template: &SolverConfig,
    policy: ThresholdPolicy,
) -> Result<GridSearch> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::argument(
            "grid search needs nonempty alpha and beta grids",
        ));
    }
    if alphas
        .iter()
        .chain(betas)
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(Error::argument("grid values must be positive"));
    }
    e.check_same_graph(&truth.edges)
        .map_err(|err| Error::Data(err.to_string()))?;
    let jobs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(alpha, beta)| {
            let config = SolverConfig {
                alpha,
                beta,
                trace_stride: 0,
                ..template.clone()
            };
            match solve(e, &config, None) {
                Ok(sol) => {
                    let mut report = f_measure(&sol.weights, truth, policy)?;
                    report.alpha = Some(alpha);
                    report.beta = Some(beta);
                    Ok(GridCell {
                        alpha,
                        beta,
                        report,
                        iterations: sol.iterations,
                        failure: None,
                    })
                }
                Err(err @ Error::Numerical { .. }) => Ok(GridCell {
                    alpha,
                    beta,
                    report: empty_report(alpha, beta, truth),
                    iterations: 0,
                    failure: Some(err.to_string()),
                }),
                Err(err) => Err(err),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&cells).expect("grid is nonempty");
    Ok(GridSearch { cells, best })
}

/// First iteration and solver time at which a variant got within a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetHit {
    pub iteration: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct VariantRun {
    pub label: String,
    pub config: SolverConfig,
    pub trace: ConvergenceTrace,
    /// One entry per target; `None` means not reached within `max_iter`.
    pub hits: Vec<Option<TargetHit>>,
    pub seconds: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub targets: Vec<f64>,
    pub reference: OracleSolution,
    pub runs: Vec<VariantRun>,
}

impl BenchmarkResult {
    /// Worst-case rate bounds for a run, measured from its own `λ₀`.
    pub fn rate_bounds(&self, run: &VariantRun) -> RateBounds {
        let n = self.reference.dual.n_nodes();
        RateBounds::new(
            n,
            run.config.beta,
            &run.config.initial_dual(n),
            &self.reference.dual,
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub oracle: OracleOptions,
    /// Turn off momentum restarts so traces are comparable with the
    /// non-restarted rate bounds.
    pub check_bounds: bool,
}

/// Runs every variant on the same `(e, α, β)` against one shared reference
/// `w*` and records iterations/time to reach each target error.
pub fn benchmark(
    e: &EdgeVector,
    alpha: f64,
    beta: f64,
    variants: &[SolverConfig],
    targets: &[f64],
    options: &BenchmarkOptions,
) -> Result<BenchmarkResult> {
    if variants.is_empty() {
        return Err(Error::argument(
            "benchmark needs at least one solver variant",
        ));
    }
    if targets.iter().any(|t| !(*t > 0.0)) || targets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::argument(
            "targets must be positive and strictly decreasing",
        ));
    }
    let reference = oracle_solve(e, alpha, beta, &options.oracle)?;
    let runs = variants
        .par_iter()
        .map(|variant| {
            let config = SolverConfig {
                alpha,
                beta,
                trace_stride: 1,
                restart_interval: if options.check_bounds {
                    None
                } else {
                    variant.restart_interval
                },
                ..variant.clone()
            };
            let sol = solve(e, &config, Some(&reference.weights))?;
            let hits = targets
                .iter()
                .map(|&target| {
                    sol.trace.first_within(target).map(|r| TargetHit {
                        iteration: r.k,
                        seconds: r.elapsed_s,
                    })
                })
                .collect();
            Ok(VariantRun {
                label: config.variant.name().to_string(),
                seconds: sol.elapsed_s,
                iterations: sol.iterations,
                config,
                trace: sol.trace,
                hits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkResult {
        targets: targets.to_vec(),
        reference,
        runs,
    })
}
