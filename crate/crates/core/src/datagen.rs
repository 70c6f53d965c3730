//! Synthetic ground-truth graphs and smooth signals drawn from
//! `N(0, L† + σ²I)`.
//!
//! Randomness comes from ChaCha8 seeded with the user seed. Graph sampling
//! reads stream [`GRAPH_STREAM`] and signal sampling reads stream
//! [`SIGNAL_STREAM`] of that generator, so either can be regenerated on its
//! own from the same seed.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{num_edges, pairs, EdgeVector, SignalMatrix};

pub const GRAPH_STREAM: u64 = 0;
pub const SIGNAL_STREAM: u64 = 1;

/// Eigenvalues of `L` below `RANK_TOLERANCE · λ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum GraphModel {
    Er {
        p: f64,
    },
    Sbm {
        block_sizes: Vec<usize>,
        p_in: f64,
        p_out: f64,
    },
    /// Loaded from a file; no generator metadata.
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthGraph {
    pub edges: EdgeVector,
    pub model: GraphModel,
    pub seed: Option<u64>,
    pub connected: bool,
}

impl GroundTruthGraph {
    pub fn from_edges(edges: EdgeVector) -> Self {
        let connected = is_connected(&edges);
        Self {
            edges,
            model: GraphModel::External,
            seed: None,
            connected,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.edges.n_nodes()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().iter().filter(|w| **w > 0.0).count()
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::argument(format!(
            "{name} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Whether the graph with positive-weight edges `w` is connected.
pub fn is_connected(w: &EdgeVector) -> bool {
    let n = w.n_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for ((i, j), &wij) in pairs(n).zip(w.values()) {
        if wij > 0.0 {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
    }
    components <= 1
}

/// Erdős–Rényi graph: every pair is an edge of weight 1 with probability `p`.
pub fn generate_er(n_nodes: usize, p: f64, seed: u64) -> Result<GroundTruthGraph> {
    if n_nodes < 2 {
        return Err(Error::argument("a graph needs at least 2 nodes"));
    }
    check_probability("p", p)?;
    let mut rng = stream_rng(seed, GRAPH_STREAM);
    let values = (0..num_edges(n_nodes))
        .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect();
    let edges = EdgeVector::new(n_nodes, values)?;
    Ok(GroundTruthGraph {
        connected: is_connected(&edges),
        edges,
        model: GraphModel::Er { p },
        seed: Some(seed),
    })
}

/// Stochastic block model with contiguous blocks: pairs inside a block are
/// edges with probability `p_in`, pairs across blocks with `p_out`.
pub fn generate_sbm(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<GroundTruthGraph> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::argument("block sizes must be nonempty and positive"));
    }
    check_probability("p_in", p_in)?;
    check_probability("p_out", p_out)?;
    let n_nodes: usize = block_sizes.iter().sum();
    if n_nodes < 2 {
        return Err(Error::argument("a graph needs at least 2 nodes"));
    }
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let mut rng = stream_rng(seed, GRAPH_STREAM);
    let values = pairs(n_nodes)
        .map(|(i, j)| {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let edges = EdgeVector::new(n_nodes, values)?;
    Ok(GroundTruthGraph {
        connected: is_connected(&edges),
        edges,
        model: GraphModel::Sbm {
            block_sizes: block_sizes.to_vec(),
            p_in,
            p_out,
        },
        seed: Some(seed),
    })
}

/// Dense Laplacian `diag(W1) − W`.
pub fn laplacian(w: &EdgeVector) -> DMatrix<f64> {
    let n = w.n_nodes();
    let mut lap = DMatrix::zeros(n, n);
    for ((i, j), &wij) in pairs(n).zip(w.values()) {
        lap[(i, j)] -= wij;
        lap[(j, i)] -= wij;
        lap[(i, i)] += wij;
        lap[(j, j)] += wij;
    }
    lap
}

/// Eigenvectors of `L` scaled by `1/√s` for every nonzero eigenvalue `s`, so
/// that `F Fᵀ = L†`.
fn pseudoinverse_factor(w: &EdgeVector) -> DMatrix<f64> {
    let n = w.n_nodes();
    let eig = SymmetricEigen::new(laplacian(w));
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOLERANCE * lambda_max;
    let mut factor = DMatrix::zeros(n, n);
    for (col, &s) in eig.eigenvalues.iter().enumerate() {
        if lambda_max > 0.0 && s > cutoff {
            let scale = 1.0 / s.sqrt();
            for row in 0..n {
                factor[(row, col)] = eig.eigenvectors[(row, col)] * scale;
            }
        }
    }
    factor
}

/// Moore–Penrose pseudoinverse of the Laplacian.
pub fn laplacian_pseudoinverse(w: &EdgeVector) -> DMatrix<f64> {
    let f = pseudoinverse_factor(w);
    &f * f.transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalModelConfig {
    /// Noise level `σ_e`.
    pub sigma_e: f64,
    pub n_signals: usize,
    pub seed: u64,
}

impl SignalModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_e >= 0.0 && self.sigma_e.is_finite()) {
            return Err(Error::argument(format!(
                "noise level must be nonnegative, got {}",
                self.sigma_e
            )));
        }
        if self.n_signals == 0 {
            return Err(Error::argument("need at least one signal"));
        }
        Ok(())
    }
}

/// Draws `P` i.i.d. signals `x_p = F z_p + σ_e z'_p` with `F Fᵀ = L†` and
/// independent standard normal `z_p`, `z'_p` (drawn in that order per signal).
pub fn sample_smooth_signals(
    graph: &GroundTruthGraph,
    config: &SignalModelConfig,
) -> Result<SignalMatrix> {
    config.validate()?;
    let n = graph.n_nodes();
    let p_total = config.n_signals;
    let factor = pseudoinverse_factor(&graph.edges);
    let mut rng = stream_rng(config.seed, SIGNAL_STREAM);
    let mut values = vec![0.0; n * p_total];
    let mut z = vec![0.0; n];
    for p in 0..p_total {
        z.iter_mut()
            .for_each(|v| *v = StandardNormal.sample(&mut rng));
        for i in 0..n {
            let mut x = 0.0;
            for (c, zc) in z.iter().enumerate() {
                x += factor[(i, c)] * zc;
            }
            values[i * p_total + p] = x;
        }
        for i in 0..n {
            let noise: f64 = StandardNormal.sample(&mut rng);
            values[i * p_total + p] += config.sigma_e * noise;
        }
    }
    SignalMatrix::from_row_major(n, p_total, values)
}
