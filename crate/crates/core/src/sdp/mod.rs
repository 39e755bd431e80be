//! Semidefinite relaxations: the symmetry-reduced product NUG over
//! `SO(2) x Z_M` and the max-k-cut special case.

mod maxkcut;
mod nug;
mod polytope;
mod psd;
mod splitting;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use maxkcut::{maxkcut_sdp, parse_edge_list, retained_weight, MaxKCutSolution};
pub use nug::{
    audit_class_shift_nonnegativity, certify_physical, constraint_residuals, nonnegativity_rows,
    reduced_objective, solve, NonnegativityRows, NugSdpProblem,
    NugSdpSolution, NugSdpVariables,
};
pub use polytope::{Polytope, ProjectionStats};
pub use psd::{min_eigenvalue, project_psd};

/// Settings of the splitting solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative tolerance on primal and dual residuals and on the objective change.
    pub tolerance: f64,
    /// Initial ADMM penalty `ρ`.
    pub penalty: f64,
    pub adapt_penalty: bool,
    /// `ρ` is multiplied or divided by this factor ...
    pub penalty_factor: f64,
    /// ... when the normalized primal/dual residual ratio exceeds this.
    pub residual_ratio: f64,
    /// Minimum iterations between two penalty updates.
    pub adapt_interval: usize,
    /// ADMM over-relaxation `α` in `(0, 2)`; 1 is the plain iteration.
    pub relaxation: f64,
    /// First proximal step, as `t ‖G‖ / sqrt(dim)`.
    pub initial_step: f64,
    /// The step is multiplied by this after every proximal iteration ...
    pub step_growth: f64,
    /// ... and convergence is only declared once `t ‖G‖ / sqrt(dim)` reaches this.
    pub final_step: f64,
    /// Optional CSV destination for the iteration trace.
    pub trace_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-6,
            penalty: 1.0,
            adapt_penalty: true,
            penalty_factor: 2.0,
            residual_ratio: 10.0,
            adapt_interval: 10,
            relaxation: 1.6,
            initial_step: 0.1,
            step_growth: 4.0,
            final_step: 1e4,
            trace_path: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain("solver tolerance must be positive".into()));
        }
        if !(self.penalty > 0.0) || !(self.penalty_factor > 1.0) || !(self.residual_ratio > 1.0) {
            return Err(Error::Domain(
                "penalty must be positive, and the adaptation factor and ratio greater than one".into(),
            ));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::Domain("relaxation must lie in (0, 2)".into()));
        }
        if !(self.initial_step > 0.0) || !(self.step_growth > 1.0) || !(self.final_step >= self.initial_step) {
            return Err(Error::Domain(
                "proximal steps must be positive, growing, and end no shorter than they start".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One proximal step, as written to the trace CSV. `iteration` counts the
/// inner iterations used so far; row 0 is the starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub penalty: f64,
}

pub const TRACE_HEADER: &str = "iteration,objective,primal_residual,dual_residual,penalty";

pub fn format_trace(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.objective, r.primal_residual, r.dual_residual, r.penalty
        );
    }
    out
}

pub fn write_trace(rows: &[TraceRow], path: &Path) -> Result<()> {
    std::fs::write(path, format_trace(rows)).map_err(|e| Error::io(path, e))
}

/// Worst violation of each constraint family; zero means satisfied.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    /// `max(0, -λ_min(C))`.
    pub psd_classification: f64,
    /// `max_k max(0, -λ_min(R_k))`.
    pub psd_alignment: f64,
    /// Deviation of diagonals from one.
    pub diagonal: f64,
    /// Violation of `C_ij >= -1/(M-1)`.
    pub lower_bound: f64,
    /// Violation of the sampled nonnegativity constraints.
    pub nonnegativity: f64,
    /// `max_i |Σ_j C_ij|` when the balanced constraint is on, else zero.
    pub balance: f64,
    /// Final ADMM primal residual `‖Z - Y‖_F`.
    pub primal: f64,
    /// Final ADMM dual residual.
    pub dual: f64,
}

impl Residuals {
    /// Largest violation among the constraint families (excludes ADMM residuals).
    pub fn worst(&self) -> f64 {
        [
            self.psd_classification,
            self.psd_alignment,
            self.diagonal,
            self.lower_bound,
            self.nonnegativity,
            self.balance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
