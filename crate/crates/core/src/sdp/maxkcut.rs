//! Max-k-cut relaxation: minimize `tr(W Y)` over `Y ⪰ 0`, `Y_ii = 1`,
//! `Y_ij >= -1/(M-1)`, optionally with `Y 1 = 0`.

use nalgebra::DMatrix;

use super::polytope::Polytope;
use super::psd::min_eigenvalue;
use super::splitting::{Blocks, SplittingProblem};
use super::{write_trace, Residuals, SolverConfig, TraceRow};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone)]
pub struct MaxKCutSolution {
    pub y: DMatrix<f64>,
    /// `tr(W Y)`.
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl MaxKCutSolution {
    /// Lower bound on the intra-cluster weight `Σ_{i<j, same} w_ij` of any
    /// partition into at most `M` clusters: a physical `Y` has
    /// `tr(W Y) = (M · retained - S) · 2 / (M - 1)` with `S = Σ_{i<j} w_ij`.
    pub fn retained_weight_bound(&self, weights: &DMatrix<f64>, num_classes: usize) -> f64 {
        let m = num_classes as f64;
        let total = upper_sum(weights);
        ((m - 1.0) * self.objective / 2.0 + total) / m
    }
}

fn upper_sum(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| w[(i, j)]).sum()
}

/// Intra-cluster weight `Σ_{i<j, labels equal} w_ij`.
pub fn retained_weight(weights: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = weights.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                total += weights[(i, j)];
            }
        }
    }
    total
}

pub fn maxkcut_sdp(
    weights: &DMatrix<f64>,
    num_classes: usize,
    balanced: bool,
    config: &SolverConfig,
) -> Result<MaxKCutSolution> {
    config.validate()?;
    let n = weights.nrows();
    if weights.ncols() != n || n == 0 {
        return domain("weight matrix must be square and nonempty");
    }
    if num_classes < 2 {
        return domain(format!("need at least two clusters, got {num_classes}"));
    }
    if balanced && n % num_classes != 0 {
        return domain(format!("balanced clusters need n divisible by M (n = {n}, M = {num_classes})"));
    }
    for i in 0..n {
        if weights[(i, i)] != 0.0 {
            return domain(format!("weight matrix has a nonzero diagonal entry at {i}"));
        }
        for j in 0..n {
            let w = weights[(i, j)];
            if !w.is_finite() || w < 0.0 || (w - weights[(j, i)]).abs() > 1e-12 * (1.0 + w.abs()) {
                return domain(format!("weights must be symmetric, finite and nonnegative (entry {i},{j})"));
            }
        }
    }
    let lo = -1.0 / (num_classes as f64 - 1.0);
    let mut pair_set = Polytope::new(1);
    pair_set.push(vec![1.0], lo);
    pair_set.push(vec![-1.0], -1.0);
    let mut grad = Blocks::zeros(n, 0);
    grad.c = weights.transpose();
    let problem = SplittingProblem {
        n,
        grad,
        constant: 0.0,
        pair_set,
        balanced,
    };
    let result = problem.solve(config)?;
    if let Some(path) = &config.trace_path {
        write_trace(&result.trace, path)?;
    }
    let y = result.y.c;
    let mut residuals = Residuals {
        psd_classification: (-min_eigenvalue(&y)?).max(0.0),
        diagonal: (0..n).map(|i| (y[(i, i)] - 1.0).abs()).fold(0.0, f64::max),
        lower_bound: y.iter().map(|&x| (lo - x).max(0.0)).fold(0.0, f64::max),
        primal: result.primal_residual,
        dual: result.dual_residual,
        ..Residuals::default()
    };
    if balanced {
        residuals.balance = (0..n).map(|i| y.row(i).sum().abs()).fold(0.0, f64::max);
    }
    Ok(MaxKCutSolution {
        objective: (weights * &y).trace(),
        y,
        residuals,
        iterations: result.iterations,
        converged: result.converged,
        trace: result.trace,
    })
}

/// Parses an edge list of `i j w` lines (0-indexed, undirected). Blank lines
/// and `#` comments are skipped; repeated edges accumulate. The node count is
/// `nodes` when given, otherwise one more than the largest index.
pub fn parse_edge_list(text: &str, nodes: Option<usize>) -> Result<DMatrix<f64>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(lineno, format!("expected `i j w`, found {} fields", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad vertex index `{}`", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad vertex index `{}`", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad weight `{}`", fields[2])))?;
        if i == j {
            return Err(Error::parse(lineno, "self loops are not allowed"));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::parse(lineno, "weights must be finite and nonnegative"));
        }
        edges.push((lineno, i, j, w));
    }
    let inferred = edges.iter().map(|&(_, i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = nodes.unwrap_or(inferred);
    if let Some(&(lineno, ..)) = edges.iter().find(|&&(_, i, j, _)| i.max(j) >= n) {
        return Err(Error::parse(lineno, format!("vertex index exceeds node count {n}")));
    }
    let mut w = DMatrix::zeros(n, n);
    for (_, i, j, weight) in edges {
        w[(i, j)] += weight;
        w[(j, i)] += weight;
    }
    Ok(w)
}
