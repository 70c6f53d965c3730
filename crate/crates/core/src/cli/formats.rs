//! Text file formats.
//!
//! Edge list:
//!
//! ```text
//! nodes 4
//! 0 1 0.5
//! 1 3 2
//! ```
//!
//! Zero-based pairs with `i < j`, one per line, optional weight (missing
//! means 1.0). Pairs not listed have weight 0. Lines starting with `#` are
//! ignored.
//!
//! Signal CSV: no header, `N` rows by `P` columns, 17 significant digits.
//!
//! Trace CSV: `k,dual_obj,primal_obj,step_change,err_to_ref,elapsed_s`, with
//! empty cells for unavailable values.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{edge_index, pairs, EdgeVector, SignalMatrix};
use crate::solver::ConvergenceTrace;

pub const TRACE_HEADER: &str = "k,dual_obj,primal_obj,step_change,err_to_ref,elapsed_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListStyle {
    /// Nonzero pairs without weights.
    Binary,
    /// Nonzero pairs with weights.
    Weighted,
    /// Every pair with its value, including zeros.
    Dense,
}

pub fn format_edge_list(w: &EdgeVector, style: EdgeListStyle) -> String {
    let mut out = format!("nodes {}\n", w.n_nodes());
    for ((i, j), &v) in pairs(w.n_nodes()).zip(w.values()) {
        match style {
            EdgeListStyle::Binary if v != 0.0 => writeln!(out, "{i} {j}").unwrap(),
            EdgeListStyle::Weighted if v != 0.0 => writeln!(out, "{i} {j} {v}").unwrap(),
            EdgeListStyle::Dense => writeln!(out, "{i} {j} {v}").unwrap(),
            _ => {}
        }
    }
    out
}

/// Binary style when every nonzero weight is exactly 1.
pub fn natural_style(w: &EdgeVector) -> EdgeListStyle {
    if w.values().iter().all(|v| *v == 0.0 || *v == 1.0) {
        EdgeListStyle::Binary
    } else {
        EdgeListStyle::Weighted
    }
}

fn parse_err(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("line {line_no}: {msg}"))
}

pub fn parse_edge_list(text: &str) -> Result<EdgeVector> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first_no, header) = lines.next().ok_or_else(|| Error::data("empty edge list"))?;
    let n_nodes: usize = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["nodes", n] => n.parse().map_err(|e| parse_err(first_no, e))?,
        _ => return Err(parse_err(first_no, "expected header `nodes N`")),
    };
    if n_nodes == 0 {
        return Err(parse_err(first_no, "graph must have at least one node"));
    }
    let mut values = vec![0.0; crate::graph::num_edges(n_nodes)];
    let mut seen = vec![false; values.len()];
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(line_no, "expected `i j [weight]`"));
        }
        let i: usize = fields[0].parse().map_err(|e| parse_err(line_no, e))?;
        let j: usize = fields[1].parse().map_err(|e| parse_err(line_no, e))?;
        let weight: f64 = match fields.get(2) {
            Some(w) => w.parse().map_err(|e| parse_err(line_no, e))?,
            None => 1.0,
        };
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(parse_err(
                line_no,
                format!("weight must be finite and nonnegative, got {weight}"),
            ));
        }
        let k = edge_index(i, j, n_nodes).map_err(|e| parse_err(line_no, e))?;
        if std::mem::replace(&mut seen[k], true) {
            return Err(parse_err(line_no, format!("duplicate pair ({i}, {j})")));
        }
        values[k] = weight;
    }
    EdgeVector::nonnegative(n_nodes, values)
}

pub fn format_signals(x: &SignalMatrix) -> String {
    let mut out = String::new();
    for i in 0..x.n_nodes() {
        for (p, v) in x.row(i).iter().enumerate() {
            if p > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_signals(text: &str) -> Result<SignalMatrix> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            line.split(',')
                .map(|cell| cell.trim().parse::<f64>().map_err(|e| parse_err(k + 1, e)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::data("empty signal file"));
    }
    SignalMatrix::from_rows(&rows)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn format_trace(trace: &ConvergenceTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.dual_objective,
            r.primal_objective,
            r.step_change,
            opt_cell(r.error_to_reference),
            r.elapsed_s
        )
        .unwrap();
    }
    out
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
