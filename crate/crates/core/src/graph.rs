//! Edge-vector layout, the edge-to-degree operator `S`, pairwise distances and
//! the smoothness functionals built on them.
//!
//! Edge vectors hold the strictly upper-triangular entries of a symmetric
//! hollow `N × N` matrix, with pairs `(i, j)`, `i < j`, in lexicographic order.
//! `S` maps such a vector to nodal degrees. It is never materialized: both
//! `S` and `Sᵀ` are applied by a single pass over the pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Number of unordered node pairs, `N(N−1)/2`.
pub fn num_edges(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1) / 2
}

/// Position of pair `(i, j)` in the canonical edge ordering.
pub fn edge_index(i: usize, j: usize, n_nodes: usize) -> Result<usize> {
    if i >= j || j >= n_nodes {
        return Err(Error::argument(format!(
            "edge ({i}, {j}) is not a pair i < j < {n_nodes}"
        )));
    }
    // Rows 0..i contribute (N−1) + (N−2) + … + (N−i) entries.
    Ok(i * (2 * n_nodes - i - 1) / 2 + (j - i - 1))
}

/// Inverse of [`edge_index`].
pub fn edge_pair(index: usize, n_nodes: usize) -> Result<(usize, usize)> {
    if index >= num_edges(n_nodes) {
        return Err(Error::argument(format!(
            "edge index {index} out of range for {n_nodes} nodes"
        )));
    }
    let mut row_start = 0;
    for i in 0..n_nodes {
        let row_len = n_nodes - i - 1;
        if index < row_start + row_len {
            return Ok((i, i + 1 + index - row_start));
        }
        row_start += row_len;
    }
    unreachable!("index checked against edge count")
}

/// Iterator over all pairs `(i, j)`, `i < j`, in canonical order.
pub fn pairs(n_nodes: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_nodes).flat_map(move |i| (i + 1..n_nodes).map(move |j| (i, j)))
}

/// Values indexed by node pairs in canonical order: edge weights `w`,
/// pairwise distances `e`, or any other per-pair quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector {
    n_nodes: usize,
    values: Vec<f64>,
}

impl EdgeVector {
    /// Wraps `values`, checking only the length.
    pub fn new(n_nodes: usize, values: Vec<f64>) -> Result<Self> {
        let m = num_edges(n_nodes);
        if n_nodes == 0 {
            return Err(Error::argument("graph must have at least one node"));
        }
        if values.len() != m {
            return Err(Error::argument(format!(
                "edge vector for {n_nodes} nodes needs {m} entries, got {}",
                values.len()
            )));
        }
        Ok(Self { n_nodes, values })
    }

    /// Wraps edge weights or distances: every entry must be finite and `≥ 0`.
    pub fn nonnegative(n_nodes: usize, values: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::data(format!(
                "entry {k} must be finite and nonnegative, got {v}"
            )));
        }
        Self::new(n_nodes, values)
    }

    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            values: vec![0.0; num_edges(n_nodes)],
        }
    }

    /// Reads the upper triangle of a dense symmetric matrix given row-major.
    pub fn from_dense(n_nodes: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n_nodes * n_nodes {
            return Err(Error::argument("dense matrix has wrong size"));
        }
        let values = pairs(n_nodes)
            .map(|(i, j)| dense[i * n_nodes + j])
            .collect();
        Self::new(n_nodes, values)
    }

    /// Symmetric hollow `N × N` matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n_nodes;
        let mut dense = vec![0.0; n * n];
        for ((i, j), &v) in pairs(n).zip(&self.values) {
            dense[i * n + j] = v;
            dense[j * n + i] = v;
        }
        dense
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Ok(self.values[edge_index(a, b, self.n_nodes)?])
    }

    pub fn dot(&self, other: &EdgeVector) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean distance to another edge vector of the same size.
    pub fn distance(&self, other: &EdgeVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> EdgeVector {
        EdgeVector {
            n_nodes: self.n_nodes,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub(crate) fn from_raw(n_nodes: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), num_edges(n_nodes));
        Self { n_nodes, values }
    }

    pub(crate) fn check_same_graph(&self, other: &EdgeVector) -> Result<()> {
        if self.n_nodes != other.n_nodes {
            return Err(Error::argument(format!(
                "edge vectors for {} and {} nodes do not match",
                self.n_nodes, other.n_nodes
            )));
        }
        Ok(())
    }
}

/// A vector over the nodes: dual variables `λ`, `ω`, or degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    values: Vec<f64>,
}

impl DualPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::argument("node vector must be nonempty"));
        }
        Ok(Self { values })
    }

    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            values: vec![0.0; n_nodes],
        }
    }

    pub fn filled(n_nodes: usize, value: f64) -> Self {
        Self {
            values: vec![value; n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &DualPoint) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &DualPoint) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// `N × P` observations; column `p` is the signal `x_p`, row `i` collects
/// every measurement taken at node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    n_nodes: usize,
    n_signals: usize,
    // row-major
    values: Vec<f64>,
}

impl SignalMatrix {
    /// Builds from row-major data. Entries must be finite.
    pub fn from_row_major(n_nodes: usize, n_signals: usize, values: Vec<f64>) -> Result<Self> {
        if n_nodes == 0 || n_signals == 0 {
            return Err(Error::argument("signal matrix must be at least 1 × 1"));
        }
        if values.len() != n_nodes * n_signals {
            return Err(Error::argument(format!(
                "expected {} entries for a {n_nodes} × {n_signals} matrix, got {}",
                n_nodes * n_signals,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite signal value at node {}, signal {}",
                k / n_signals,
                k % n_signals
            )));
        }
        Ok(Self {
            n_nodes,
            n_signals,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_signals = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_signals) {
            return Err(Error::data("signal rows have unequal lengths"));
        }
        Self::from_row_major(rows.len(), n_signals, rows.concat())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    /// Measurements at node `i` across all signals.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_signals..(i + 1) * self.n_signals]
    }

    pub fn column(&self, p: usize) -> Vec<f64> {
        (0..self.n_nodes)
            .map(|i| self.values[i * self.n_signals + p])
            .collect()
    }

    pub fn get(&self, i: usize, p: usize) -> f64 {
        self.values[i * self.n_signals + p]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.values
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Sw`: the degree of every node, `d_i = Σ_{j≠i} W_ij`.
pub fn degree_apply(w: &EdgeVector) -> DualPoint {
    let n = w.n_nodes;
    let mut d = vec![0.0; n];
    let mut k = 0;
    for i in 0..n {
        let mut row_sum = 0.0;
        for (dj, wk) in d[i + 1..].iter_mut().zip(&w.values[k..]) {
            row_sum += wk;
            *dj += wk;
        }
        k += n - i - 1;
        d[i] += row_sum;
    }
    DualPoint::from_raw(d)
}

/// `Sᵀv`: the entry for pair `(i, j)` is `v_i + v_j`.
pub fn degree_adjoint(v: &DualPoint) -> EdgeVector {
    let n = v.n_nodes();
    let mut out = Vec::with_capacity(num_edges(n));
    for i in 0..n {
        let vi = v.values[i];
        out.extend(v.values[i + 1..].iter().map(|vj| vi + vj));
    }
    EdgeVector::from_raw(n, out)
}

/// Closed-form spectral norm of `S`: `SSᵀ = (N−2)I + 11ᵀ` has top eigenvalue
/// `2(N−1)`.
pub fn spectral_norm_s(n_nodes: usize) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::argument("spectral norm of S needs at least 2 nodes"));
    }
    Ok((2.0 * (n_nodes as f64 - 1.0)).sqrt())
}

/// Estimates `‖S‖₂` by power iteration on `SSᵀ`, applying `S` and `Sᵀ`
/// matrix-free. Stops when the Rayleigh quotient changes by less than
/// `tol` (relative) or after `max_iter` steps.
pub fn estimate_spectral_norm_s(
    n_nodes: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::argument("spectral norm of S needs at least 2 nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n_nodes)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut quotient = 0.0;
    for _ in 0..max_iter {
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let point = DualPoint::from_raw(v);
        let next = degree_apply(&degree_adjoint(&point));
        let new_quotient = point.dot(&next);
        v = next.into_values();
        if (new_quotient - quotient).abs() <= tol * new_quotient.abs() {
            quotient = new_quotient;
            break;
        }
        quotient = new_quotient;
    }
    Ok(quotient.sqrt())
}

/// Pairwise squared distances `E_ij = ‖x̄_i − x̄_j‖²` between rows of `X`,
/// computed from the Gram matrix. Values lost to cancellation are clamped to 0.
pub fn distance_vector(signals: &SignalMatrix) -> EdgeVector {
    let n = signals.n_nodes;
    let sq_norms: Vec<f64> = (0..n)
        .map(|i| dot(signals.row(i), signals.row(i)))
        .collect();
    let mut out = Vec::with_capacity(num_edges(n));
    for i in 0..n {
        let xi = signals.row(i);
        for j in i + 1..n {
            let gram = dot(xi, signals.row(j));
            out.push((sq_norms[i] + sq_norms[j] - 2.0 * gram).max(0.0));
        }
    }
    EdgeVector::from_raw(n, out)
}

/// Total variation summed over all signals, `Σ_p x_pᵀ L x_p`, with
/// `L = diag(W1) − W` the Laplacian of the graph encoded by `w`.
pub fn total_variation(signals: &SignalMatrix, w: &EdgeVector) -> Result<f64> {
    if signals.n_nodes != w.n_nodes {
        return Err(Error::argument(format!(
            "signals live on {} nodes but the graph has {}",
            signals.n_nodes, w.n_nodes
        )));
    }
    let n = w.n_nodes;
    let degrees = degree_apply(w);
    let mut total = 0.0;
    for p in 0..signals.n_signals {
        let x = signals.column(p);
        // Lx = d∘x − Wx
        let mut lx: Vec<f64> = x
            .iter()
            .zip(degrees.values())
            .map(|(xi, di)| xi * di)
            .collect();
        for ((i, j), &wij) in pairs(n).zip(&w.values) {
            lx[i] -= wij * x[j];
            lx[j] -= wij * x[i];
        }
        total += dot(&x, &lx);
    }
    Ok(total)
}

/// Primal cost `2wᵀe + β‖w‖² − α Σ log (Sw)_i`. Returns `+∞` when `w` has a
/// negative entry or some node has nonpositive degree.
pub fn primal_objective(w: &EdgeVector, e: &EdgeVector, alpha: f64, beta: f64) -> f64 {
    if w.n_nodes != e.n_nodes || w.values.iter().any(|v| *v < 0.0) {
        return f64::INFINITY;
    }
    let degrees = degree_apply(w);
    if degrees.values().iter().any(|d| *d <= 0.0) {
        return f64::INFINITY;
    }
    let log_barrier: f64 = degrees.values().iter().map(|d| d.ln()).sum();
    2.0 * w.dot(e) + beta * w.dot(w) - alpha * log_barrier
}
