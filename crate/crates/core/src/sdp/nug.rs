//! The symmetry-reduced product-NUG relaxation.
//!
//! After averaging over class-label permutations and inter-class rotations,
//! the lifted blocks of the product problem collapse to
//!
//! * `X^(0,0) = J` (all ones),
//! * `X^(0,m) = C` for every `m != 0`, real symmetric,
//! * `X^(k,m) = R_k` for every `k != 0` and every `m`, with `R_{-k} = conj(R_k)`,
//!
//! and with `F̂^(k,m) = F̂^(k) / M` the objective becomes
//!
//! ```text
//! (1/M) tr(F̂^(0) J) + ((M-1)/M) tr(F̂^(0) C) + Σ_{k=1..K} 2 Re tr(F̂^(k) R_k).
//! ```
//!
//! The nonnegativity constraint at `(g, e)` collapses to
//! `q_ij(g) = 1 + (M-1) C_ij + M Σ_{k=1..K} w_k 2 Re(exp(-ikg) R_k(i,j)) >= 0`,
//! sampled on a uniform grid with kernel weights `w_k`.

use std::fmt::Write as _;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::polytope::Polytope;
use super::psd::min_eigenvalue;
use super::splitting::{Blocks, SplittingProblem};
use super::{write_trace, Residuals, SolverConfig, TraceRow};
use crate::error::{domain, Result};
use crate::harmonics::{fejer_weights, irrep_product, uniform_grid, Bandwidth, CyclicElement, ProductElement, RotationAngle};
use crate::penalty::PenaltyCoefficients;

/// Minimum number of nonnegativity sample angles.
pub const MIN_GRID_SIZE: usize = 16;

#[derive(Debug, Clone)]
pub struct NugSdpProblem {
    coefficients: PenaltyCoefficients,
    num_classes: usize,
    weights: Vec<f64>,
    grid_size: usize,
    balanced: bool,
}

impl NugSdpProblem {
    /// Fejér weights and `max(2K + 2, 16)` sample angles.
    pub fn new(coefficients: PenaltyCoefficients, num_classes: usize, balanced: bool) -> Result<Self> {
        if num_classes < 2 {
            return domain(format!("need at least two classes, got {num_classes}"));
        }
        let n = coefficients.n();
        if n < 2 {
            return domain("need at least two signals");
        }
        if balanced && n % num_classes != 0 {
            return domain(format!(
                "balanced classes need n divisible by M (n = {n}, M = {num_classes})"
            ));
        }
        let bw = coefficients.bandwidth();
        for k in 0..=bw.0 as i64 {
            let f = coefficients.matrix(k);
            let scale = 1.0 + f.norm();
            if (f - f.adjoint()).norm() > 1e-9 * scale {
                return domain(format!("coefficient matrix for k = {k} is not Hermitian"));
            }
        }
        Ok(Self {
            weights: fejer_weights(bw),
            grid_size: (2 * bw.0 + 2).max(MIN_GRID_SIZE),
            coefficients,
            num_classes,
            balanced,
        })
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Result<Self> {
        if grid_size < 2 * self.bandwidth().0 + 2 {
            return domain(format!(
                "grid size {grid_size} is below 2K + 2 = {}",
                2 * self.bandwidth().0 + 2
            ));
        }
        self.grid_size = grid_size;
        Ok(self)
    }

    /// Replaces the kernel weights (ordered by frequency `-K..=K`).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.bandwidth().len() {
            return domain("one kernel weight per frequency is required");
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.coefficients.n()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.coefficients.bandwidth()
    }

    pub fn coefficients(&self) -> &PenaltyCoefficients {
        &self.coefficients
    }

    pub fn balanced(&self) -> bool {
        self.balanced
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Kernel weight `w_k`.
    pub fn weight(&self, k: i64) -> f64 {
        self.bandwidth().index(k).map_or(0.0, |i| self.weights[i])
    }

    /// `-1/(M-1)`.
    pub fn lower_bound(&self) -> f64 {
        -1.0 / (self.num_classes as f64 - 1.0)
    }

    /// `Σ_k Σ_ij |F̂^(k)_ij|`, an a-priori bound on the objective magnitude.
    pub fn objective_scale(&self) -> f64 {
        self.coefficients.magnitude()
    }

    fn splitting(&self) -> SplittingProblem {
        let n = self.n();
        let m = self.num_classes as f64;
        let kmax = self.bandwidth().0;
        let dc = self.coefficients.dc_matrix();

        let mut grad = Blocks::zeros(n, kmax);
        // tr(F X) = <F^T, X>; every F̂^(k) is Hermitian, so F^T = conj(F).
        grad.c = dc.transpose() * ((m - 1.0) / m);
        for (k, g) in grad.r.iter_mut().enumerate() {
            *g = self.coefficients.matrix(k as i64 + 1).adjoint() * Complex64::new(2.0, 0.0);
        }
        let constant = dc.sum() / m;

        let mut pair_set = Polytope::new(1 + 2 * kmax);
        let mut e0 = vec![0.0; 1 + 2 * kmax];
        e0[0] = 1.0;
        pair_set.push(e0.clone(), self.lower_bound());
        e0[0] = -1.0;
        pair_set.push(e0, -1.0);
        for g in uniform_grid(self.grid_size) {
            let mut normal = vec![0.0; 1 + 2 * kmax];
            normal[0] = m - 1.0;
            for k in 1..=kmax {
                let w = 2.0 * m * self.weight(k as i64);
                normal[2 * k - 1] = w * (k as f64 * g).cos();
                normal[2 * k] = w * (k as f64 * g).sin();
            }
            pair_set.push(normal, -1.0);
        }

        SplittingProblem {
            n,
            grad,
            constant,
            pair_set,
            balanced: self.balanced,
        }
    }
}

/// `C` (standing for every `X^(0,m)`, `m != 0`) and `R_1..R_K` (standing for
/// every `X^(k,m)`).
#[derive(Debug, Clone, PartialEq)]
pub struct NugSdpVariables {
    pub c: DMatrix<f64>,
    /// `r[k - 1] = R_k`.
    pub r: Vec<DMatrix<Complex64>>,
}

impl NugSdpVariables {
    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    /// `R_k` for any `k != 0`, using `R_{-k} = conj(R_k)`.
    pub fn alignment(&self, k: i64) -> DMatrix<Complex64> {
        assert!(k != 0, "R_0 is not a variable");
        let m = &self.r[k.unsigned_abs() as usize - 1];
        if k > 0 {
            m.clone()
        } else {
            m.conjugate()
        }
    }

    /// The lifted block `X^(k,m)` after symmetry reduction.
    pub fn lifted(&self, k: i64, m: usize) -> DMatrix<Complex64> {
        let n = self.n();
        match (k, m) {
            (0, 0) => DMatrix::from_element(n, n, Complex64::new(1.0, 0.0)),
            (0, _) => self.c.map(|x| Complex64::new(x, 0.0)),
            _ => self.alignment(k),
        }
    }

    /// Text dump in the coefficient-matrix layout: header `n K`, then lines
    /// `k i` followed by `re im` pairs, with `k = 0` holding `C`.
    pub fn format(&self) -> String {
        let n = self.n();
        let mut out = format!("{} {}\n", n, self.r.len());
        for i in 0..n {
            let _ = write!(out, "0 {i}");
            for j in 0..n {
                let _ = write!(out, " {} 0", self.c[(i, j)]);
            }
            out.push('\n');
        }
        for (k, m) in self.r.iter().enumerate() {
            for i in 0..n {
                let _ = write!(out, "{} {i}", k + 1);
                for j in 0..n {
                    let _ = write!(out, " {} {}", m[(i, j)].re, m[(i, j)].im);
                }
                out.push('\n');
            }
        }
        out
    }

    fn check(&self, problem: &NugSdpProblem) -> Result<()> {
        let n = problem.n();
        if self.c.shape() != (n, n) || self.r.len() != problem.bandwidth().0 || self.r.iter().any(|m| m.shape() != (n, n)) {
            return domain(format!(
                "variables do not match the problem (n = {n}, K = {})",
                problem.bandwidth().0
            ));
        }
        Ok(())
    }

    fn into_blocks(self) -> Blocks {
        Blocks { c: self.c, r: self.r }
    }

    fn from_blocks(b: Blocks) -> Self {
        Self { c: b.c, r: b.r }
    }
}

/// The reduced objective
/// `(1/M) tr(F̂^(0) J) + ((M-1)/M) tr(F̂^(0) C) + Σ_{k=1..K} 2 Re tr(F̂^(k) R_k)`.
pub fn reduced_objective(vars: &NugSdpVariables, problem: &NugSdpProblem) -> Result<f64> {
    vars.check(problem)?;
    let m = problem.num_classes as f64;
    let f = &problem.coefficients;
    let dc = f.dc_matrix();
    let mut total = dc.sum() / m + (m - 1.0) / m * (&dc * &vars.c).trace();
    for (k, r) in vars.r.iter().enumerate() {
        total += 2.0 * (f.matrix(k as i64 + 1) * r).trace().re;
    }
    Ok(total)
}

/// Evaluator of the sampled nonnegativity constraints `q_ij(g_t) >= 0`.
#[derive(Debug, Clone)]
pub struct NonnegativityRows<'a> {
    problem: &'a NugSdpProblem,
    grid: Vec<f64>,
}

pub fn nonnegativity_rows(problem: &NugSdpProblem) -> NonnegativityRows<'_> {
    NonnegativityRows {
        grid: uniform_grid(problem.grid_size),
        problem,
    }
}

impl NonnegativityRows<'_> {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `q_ij(g)` at an arbitrary angle.
    pub fn value_at(&self, vars: &NugSdpVariables, i: usize, j: usize, g: f64) -> f64 {
        let p = self.problem;
        let m = p.num_classes as f64;
        let harmonics: f64 = vars
            .r
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let k = k as i64 + 1;
                p.weight(k) * 2.0 * (Complex64::from_polar(1.0, -(k as f64) * g) * r[(i, j)]).re
            })
            .sum();
        1.0 + (m - 1.0) * vars.c[(i, j)] + m * harmonics
    }

    /// `q_ij(g_t)` at grid angle `t`.
    pub fn value(&self, vars: &NugSdpVariables, i: usize, j: usize, t: usize) -> f64 {
        self.value_at(vars, i, j, self.grid[t])
    }

    /// Smallest `q_ij(g_t)` over all pairs and grid angles.
    pub fn min_value(&self, vars: &NugSdpVariables) -> f64 {
        let n = vars.n();
        let mut worst = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                for &g in &self.grid {
                    worst = worst.min(self.value_at(vars, i, j, g));
                }
            }
        }
        worst
    }
}

/// Lifted variables of a labeling and alignment, averaged over label
/// permutations and inter-class rotations:
/// `C_ij = 1` or `-1/(M-1)`, `R_k(i,j) = exp(ik(g_i - g_j))` or `0`.
pub fn certify_physical(
    labels: &[usize],
    shifts: &[RotationAngle],
    problem: &NugSdpProblem,
) -> Result<NugSdpVariables> {
    let n = problem.n();
    if labels.len() != n || shifts.len() != n {
        return domain(format!("expected {n} labels and shifts"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= problem.num_classes) {
        return domain(format!("label {l} out of range for M = {}", problem.num_classes));
    }
    let lo = problem.lower_bound();
    let c = DMatrix::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { lo });
    let r = (1..=problem.bandwidth().0 as i64)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                if labels[i] == labels[j] {
                    Complex64::from_polar(1.0, k as f64 * (shifts[i].radians() - shifts[j].radians()))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Ok(NugSdpVariables { c, r })
}

/// Worst violation of each constraint family at `vars`.
pub fn constraint_residuals(vars: &NugSdpVariables, problem: &NugSdpProblem) -> Result<Residuals> {
    vars.check(problem)?;
    let n = problem.n();
    let mut res = Residuals {
        psd_classification: (-min_eigenvalue(&vars.c)?).max(0.0),
        ..Residuals::default()
    };
    for r in &vars.r {
        res.psd_alignment = res.psd_alignment.max((-min_eigenvalue(r)?).max(0.0));
    }
    for i in 0..n {
        res.diagonal = res.diagonal.max((vars.c[(i, i)] - 1.0).abs());
        for r in &vars.r {
            res.diagonal = res.diagonal.max((r[(i, i)] - Complex64::new(1.0, 0.0)).norm());
        }
    }
    let lo = problem.lower_bound();
    res.lower_bound = vars.c.iter().map(|&x| (lo - x).max(0.0)).fold(0.0, f64::max);
    res.nonnegativity = (-nonnegativity_rows(problem).min_value(vars)).max(0.0);
    if problem.balanced {
        res.balance = (0..n).map(|i| vars.c.row(i).sum().abs()).fold(0.0, f64::max);
    }
    Ok(res)
}

/// Smallest value of the full nonnegativity sum
/// `Σ_{k,m} w_k conj(ψ_{k,m}((g, a))) X^(k,m)_ij` over all pairs, `angles`
/// uniform rotations and every class shift `a != e`.
///
/// Under the reduced constraint set this is `1 - C_ij`, so it is nonnegative
/// whenever `C_ij <= 1`.
pub fn audit_class_shift_nonnegativity(
    vars: &NugSdpVariables,
    problem: &NugSdpProblem,
    angles: usize,
) -> Result<f64> {
    vars.check(problem)?;
    let n = problem.n();
    let modulus = problem.num_classes;
    let bw = problem.bandwidth();
    let lifted: Vec<Vec<DMatrix<Complex64>>> = bw
        .frequencies()
        .map(|k| (0..modulus).map(|m| vars.lifted(k, m)).collect())
        .collect();
    let mut worst = f64::INFINITY;
    for a in 1..modulus {
        for t in 0..angles {
            let x = ProductElement::new(
                RotationAngle::new(TAU * t as f64 / angles as f64),
                CyclicElement::new(a, modulus)?,
            );
            let phases: Vec<Vec<Complex64>> = bw
                .frequencies()
                .map(|k| {
                    (0..modulus)
                        .map(|m| irrep_product(k, m, x).map(|z| z.conj() * problem.weight(k)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            for i in 0..n {
                for j in 0..n {
                    let total: Complex64 = lifted
                        .iter()
                        .zip(&phases)
                        .flat_map(|(blocks, ph)| blocks.iter().zip(ph).map(move |(b, p)| p * b[(i, j)]))
                        .sum();
                    worst = worst.min(total.re);
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct NugSdpSolution {
    pub variables: NugSdpVariables,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// Solves the reduced relaxation with the splitting solver.
pub fn solve(problem: &NugSdpProblem, config: &SolverConfig) -> Result<NugSdpSolution> {
    config.validate()?;
    let result = problem.splitting().solve(config)?;
    if let Some(path) = &config.trace_path {
        write_trace(&result.trace, path)?;
    }
    let variables = NugSdpVariables::from_blocks(result.y);
    let mut residuals = constraint_residuals(&variables, problem)?;
    residuals.primal = result.primal_residual;
    residuals.dual = result.dual_residual;
    Ok(NugSdpSolution {
        objective: reduced_objective(&variables, problem)?,
        variables,
        residuals,
        iterations: result.iterations,
        converged: result.converged,
        trace: result.trace,
    })
}

impl NugSdpProblem {
    /// Objective of the splitting formulation at `vars`; equals
    /// [`reduced_objective`] and is used to cross-check the gradient.
    pub fn linear_objective(&self, vars: &NugSdpVariables) -> Result<f64> {
        vars.check(self)?;
        let s = self.splitting();
        Ok(s.objective(&vars.clone().into_blocks()))
    }
}
