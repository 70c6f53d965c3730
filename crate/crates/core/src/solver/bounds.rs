//! Worst-case rates of the non-restarted accelerated iterations:
//!
//! ```text
//! φ(λ_k) − φ(λ*) ≤ 2(N−1)‖λ₀ − λ*‖² / (βk²)
//! ‖ŵ_k − w*‖     ≤ √(2(N−1)) ‖λ₀ − λ*‖ / (βk)
//! ```
//!
//! These hold for the momentum sequence without restarts, so callers should
//! disable restarts before comparing a trace against them.

use crate::graph::DualPoint;

use super::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub n_nodes: usize,
    pub beta: f64,
    /// `‖λ₀ − λ*‖₂`.
    pub initial_distance: f64,
}

/// A recorded iteration that exceeds its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub k: usize,
    pub observed: f64,
    pub bound: f64,
}

impl RateBounds {
    pub fn new(n_nodes: usize, beta: f64, lambda0: &DualPoint, lambda_star: &DualPoint) -> Self {
        Self {
            n_nodes,
            beta,
            initial_distance: lambda0.distance(lambda_star),
        }
    }

    pub fn dual_gap(&self, k: usize) -> f64 {
        let k = k as f64;
        2.0 * (self.n_nodes as f64 - 1.0) * self.initial_distance.powi(2) / (self.beta * k * k)
    }

    pub fn primal_error(&self, k: usize) -> f64 {
        (2.0 * (self.n_nodes as f64 - 1.0)).sqrt() * self.initial_distance / (self.beta * k as f64)
    }

    /// Records where `φ(λ_k) − φ*` exceeds the dual-gap bound.
    pub fn dual_violations(
        &self,
        trace: &ConvergenceTrace,
        optimal_value: f64,
    ) -> Vec<BoundViolation> {
        trace
            .records
            .iter()
            .filter_map(|r| {
                let observed = r.dual_objective - optimal_value;
                let bound = self.dual_gap(r.k);
                (observed > bound).then_some(BoundViolation {
                    k: r.k,
                    observed,
                    bound,
                })
            })
            .collect()
    }

    /// Records where `‖ŵ_k − w*‖` exceeds the primal bound. Records without a
    /// reference error are skipped.
    pub fn primal_violations(&self, trace: &ConvergenceTrace) -> Vec<BoundViolation> {
        trace
            .records
            .iter()
            .filter_map(|r| {
                let observed = r.error_to_reference?;
                let bound = self.primal_error(r.k);
                (observed > bound).then_some(BoundViolation {
                    k: r.k,
                    observed,
                    bound,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_formulas() {
        let b = RateBounds {
            n_nodes: 3,
            beta: 2.0,
            initial_distance: 3.0,
        };
        assert_eq!(b.dual_gap(1), 2.0 * 2.0 * 9.0 / 2.0);
        assert_eq!(b.dual_gap(3), 2.0);
        assert_eq!(b.primal_error(2), 2.0 * 3.0 / 4.0);
    }
}
