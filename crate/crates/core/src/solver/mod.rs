//! Fast dual proximal gradient (FDPG) solver and its non-accelerated variant
//! (DPG), with fixed-interval momentum restarts and per-iteration tracing.
//!
//! Each iteration computes, from the extrapolated dual point `ω_k`,
//!
//! ```text
//! w̄_k     = max(0, (Sᵀω_k − 2e)/(2β))
//! u_k     = prox_{Lg}(Sw̄_k − Lω_k)
//! λ_k     = ω_k − (Sw̄_k − u_k)/L
//! t_{k+1} = (1 + √(1 + 4t_k²))/2            (t ≡ 1 for DPG)
//! ω_{k+1} = λ_k + ((t_k − 1)/t_{k+1})(λ_k − λ_{k−1})
//! ```
//!
//! and reports the primal estimate `ŵ_k = max(0, (Sᵀλ_k − 2e)/(2β))`.

mod bounds;
mod steps;
mod trace;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use bounds::{BoundViolation, RateBounds};
pub use steps::{
    dual_barrier_part, dual_gradient_f, dual_objective, dual_smooth_part, extrapolate,
    lambda_update, lipschitz_constant, momentum_update, optimality_residual, primal_from_dual,
    u_update, wbar_update,
};
pub use trace::{ConvergenceTrace, TraceRecord};

use crate::error::{Error, Result};
use crate::graph::{primal_objective, DualPoint, EdgeVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Accelerated (FISTA momentum).
    Fdpg,
    /// Plain dual proximal gradient, `t_k ≡ 1`.
    Dpg,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Fdpg => "fdpg",
            Variant::Dpg => "dpg",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fdpg" => Ok(Variant::Fdpg),
            "dpg" => Ok(Variant::Dpg),
            other => Err(Error::argument(format!("unknown solver variant `{other}`"))),
        }
    }
}

/// Starting dual point `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Init {
    Zeros,
    /// i.i.d. standard normal entries from a seeded generator.
    Gaussian {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub variant: Variant,
    /// Reset the momentum every this many iterations (FDPG only).
    pub restart_interval: Option<usize>,
    pub max_iter: usize,
    /// Stop once `‖ŵ_k − ŵ_{k−1}‖ / max(1, ‖ŵ_k‖) ≤ tol` and the KKT
    /// residual is at most `residual_tol`.
    pub tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    pub init: Init,
    /// Record every `trace_stride`-th iteration (and the last one). 0 disables tracing.
    pub trace_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            variant: Variant::Fdpg,
            restart_interval: Some(100),
            max_iter: 10_000,
            tol: 1e-10,
            residual_tol: default_residual_tol(),
            init: Init::Zeros,
            trace_stride: 1,
        }
    }
}

fn default_residual_tol() -> f64 {
    1e-6
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::argument(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::argument(format!(
                "beta must be positive (the Lipschitz constant (N-1)/beta is undefined otherwise), got {}",
                self.beta
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::argument("max_iter must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::argument(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::argument(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.restart_interval == Some(0) {
            return Err(Error::argument("restart interval must be positive"));
        }
        Ok(())
    }

    /// Restart interval in effect: always `None` for DPG.
    pub fn effective_restart(&self) -> Option<usize> {
        match self.variant {
            Variant::Fdpg => self.restart_interval,
            Variant::Dpg => None,
        }
    }

    pub fn initial_dual(&self, n_nodes: usize) -> DualPoint {
        match self.init {
            Init::Zeros => DualPoint::zeros(n_nodes),
            Init::Gaussian { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                DualPoint::from_raw(
                    (0..n_nodes)
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect(),
                )
            }
        }
    }
}

/// Iterate state of the dual method.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub lambda: DualPoint,
    pub lambda_prev: DualPoint,
    pub omega: DualPoint,
    pub t: f64,
    pub k: usize,
    pub lipschitz: f64,
}

impl SolverState {
    pub fn new(lambda0: DualPoint, beta: f64) -> Result<Self> {
        let lipschitz = lipschitz_constant(lambda0.n_nodes(), beta)?;
        Ok(Self {
            lambda_prev: lambda0.clone(),
            omega: lambda0.clone(),
            lambda: lambda0,
            t: 1.0,
            k: 0,
            lipschitz,
        })
    }

    /// Advances one iteration, leaving `λ_k` in `self.lambda` and the next
    /// extrapolated point in `self.omega`.
    pub fn step(&mut self, e: &EdgeVector, config: &SolverConfig) -> Result<()> {
        self.k += 1;
        let wbar = wbar_update(&self.omega, e, config.beta);
        let u = u_update(&wbar, &self.omega, config.alpha, self.lipschitz);
        let lambda = lambda_update(&self.omega, &wbar, &u, config.alpha, self.lipschitz);
        if let Some(bad) = lambda
            .values()
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::Numerical {
                iteration: self.k,
                message: format!("dual iterate left the positive orthant ({bad})"),
            });
        }
        self.lambda_prev = std::mem::replace(&mut self.lambda, lambda);

        let restart = config
            .effective_restart()
            .is_some_and(|r| self.k.is_multiple_of(r));
        match config.variant {
            Variant::Dpg => self.omega = self.lambda.clone(),
            Variant::Fdpg if restart => {
                self.t = 1.0;
                self.omega = self.lambda.clone();
            }
            Variant::Fdpg => {
                let t_next = momentum_update(self.t);
                self.omega = extrapolate(&self.lambda, &self.lambda_prev, self.t, t_next);
                self.t = t_next;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Final primal estimate `ŵ`.
    pub weights: EdgeVector,
    /// Final dual iterate `λ`.
    pub dual: DualPoint,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    /// Whether the tolerance test fired before `max_iter`.
    pub converged: bool,
    /// Solver-loop wall time.
    pub elapsed_s: f64,
}

/// Runs FDPG or DPG on distances `e`. When `reference` is given, the trace
/// carries `‖ŵ_k − w*‖` per recorded iteration.
pub fn solve(
    e: &EdgeVector,
    config: &SolverConfig,
    reference: Option<&EdgeVector>,
) -> Result<Solution> {
    config.validate()?;
    if e.values().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::data("distances must be finite and nonnegative"));
    }
    if let Some(r) = reference {
        e.check_same_graph(r)?;
    }
    let n = e.n_nodes();
    let mut state = SolverState::new(config.initial_dual(n), config.beta)?;
    let mut trace = ConvergenceTrace::default();
    let mut w_prev = primal_from_dual(&state.lambda, e, config.beta);
    let mut converged = false;
    let start = Instant::now();

    while state.k < config.max_iter {
        state.step(e, config)?;
        let w = primal_from_dual(&state.lambda, e, config.beta);
        let step_change = w.distance(&w_prev);
        if !step_change.is_finite() {
            return Err(Error::Numerical {
                iteration: state.k,
                message: "primal estimate is not finite".into(),
            });
        }
        // Small steps alone are not enough: the estimate can sit at zero
        // while λ moves, and badly scaled instances crawl.
        converged = step_change / w.norm().max(1.0) <= config.tol
            && optimality_residual(&w, &state.lambda, config.alpha)? <= config.residual_tol;
        let last = converged || state.k == config.max_iter;
        if config.trace_stride > 0 && (state.k % config.trace_stride == 0 || last) {
            trace.records.push(TraceRecord {
                k: state.k,
                dual_objective: dual_objective(&state.lambda, e, config.alpha, config.beta),
                primal_objective: primal_objective(&w, e, config.alpha, config.beta),
                step_change,
                error_to_reference: reference.map(|r| w.distance(r)),
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        w_prev = w;
        if converged {
            break;
        }
    }

    Ok(Solution {
        weights: w_prev,
        dual: state.lambda,
        trace,
        iterations: state.k,
        converged,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub max_iter: usize,
    pub restart_interval: usize,
    pub init: Init,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            restart_interval: 100,
            init: Init::Zeros,
        }
    }
}

/// High-precision reference solution `w*`, `λ*`.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub weights: EdgeVector,
    pub dual: DualPoint,
    /// `φ(λ*)`.
    pub dual_objective: f64,
    /// KKT residual of `(w*, λ*)`.
    pub residual: f64,
    pub iterations: usize,
}

/// Long restarted FDPG run with zero tolerance: stops only when the primal
/// estimate stops changing or `max_iter` is hit.
pub fn oracle_solve(
    e: &EdgeVector,
    alpha: f64,
    beta: f64,
    options: &OracleOptions,
) -> Result<OracleSolution> {
    let config = SolverConfig {
        alpha,
        beta,
        variant: Variant::Fdpg,
        restart_interval: Some(options.restart_interval),
        max_iter: options.max_iter,
        tol: 0.0,
        residual_tol: 1e-12,
        init: options.init,
        trace_stride: 0,
    };
    let solution = solve(e, &config, None)?;
    let residual = optimality_residual(&solution.weights, &solution.dual, alpha)?;
    Ok(OracleSolution {
        dual_objective: dual_objective(&solution.dual, e, alpha, beta),
        weights: solution.weights,
        dual: solution.dual,
        residual,
        iterations: solution.iterations,
    })
}
