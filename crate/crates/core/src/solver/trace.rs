use serde::{Deserialize, Serialize};

/// One recorded iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `φ(λ_k)`.
    pub dual_objective: f64,
    /// Primal cost at `ŵ_k`; `+∞` when `ŵ_k` has an isolated node.
    pub primal_objective: f64,
    /// `‖ŵ_k − ŵ_{k−1}‖₂`.
    pub step_change: f64,
    /// `‖ŵ_k − w*‖₂` when a reference was supplied.
    pub error_to_reference: Option<f64>,
    /// Seconds since the solver loop started.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First record whose reference error is at most `target`.
    pub fn first_within(&self, target: f64) -> Option<&TraceRecord> {
        self.records
            .iter()
            .find(|r| r.error_to_reference.is_some_and(|err| err <= target))
    }

    /// `φ(λ_k) − φ*` for every record.
    pub fn dual_suboptimality(&self, optimal_value: f64) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .map(|r| (r.k, r.dual_objective - optimal_value))
            .collect()
    }
}
