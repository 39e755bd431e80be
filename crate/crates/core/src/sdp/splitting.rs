//! Proximal-point solver shared by the product-NUG and max-k-cut relaxations.
//!
//! The lifted variables `(C, R_1, ..., R_K)` are duplicated into a conic
//! copy `Z` (each block PSD; `C 1 = 0` when balanced) and a polyhedral copy
//! `Y` (unit diagonals and, for every off-diagonal pair, a small polyhedron
//! in the coordinates `(C_ij, R_1(i,j), ..., R_K(i,j))`). The iteration is
//!
//! ```text
//! Z <- Π_cone((ρ(Y - U) + X_c/t - G) / (ρ + 1/t))
//! Y <- Π_poly(Z + U)
//! U <- U + Z - Y
//! ```
//!
//! with `G` the gradient of the linear objective, `X_c` the current proximal
//! centre, `t` the proximal step and the penalty `ρ` adapted by residual
//! balancing. The polyhedral copy `Y` is reported: it satisfies
//! every linear constraint exactly and the PSD constraints up to the primal
//! residual.

use std::ops::{AddAssign, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::polytope::Polytope;
use super::psd::project_psd;
use super::{SolverConfig, TraceRow};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Blocks {
    pub c: DMatrix<f64>,
    pub r: Vec<DMatrix<Complex64>>,
}

impl Blocks {
    pub fn zeros(n: usize, kmax: usize) -> Self {
        Self {
            c: DMatrix::zeros(n, n),
            r: vec![DMatrix::zeros(n, n); kmax],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.norm_squared() + self.r.iter().map(|m| m.norm_squared()).sum::<f64>()
    }

    pub fn dist_sqr(&self, other: &Self) -> f64 {
        (&self.c - &other.c).norm_squared()
            + self
                .r
                .iter()
                .zip(&other.r)
                .map(|(a, b)| (a - b).norm_squared())
                .sum::<f64>()
    }

    /// Real inner product `Re Σ conj(a) b` summed over blocks.
    pub fn inner(&self, other: &Self) -> f64 {
        self.c.dot(&other.c)
            + self
                .r
                .iter()
                .zip(&other.r)
                .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>())
                .sum::<f64>()
    }

    fn scale(&mut self, s: f64) {
        self.c *= s;
        for m in &mut self.r {
            *m *= Complex64::new(s, 0.0);
        }
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        self.c += &x.c * a;
        for (m, xm) in self.r.iter_mut().zip(&x.r) {
            *m += xm * Complex64::new(a, 0.0);
        }
    }
}

impl AddAssign<&Blocks> for Blocks {
    fn add_assign(&mut self, rhs: &Blocks) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Blocks> for Blocks {
    fn sub_assign(&mut self, rhs: &Blocks) {
        self.axpy(-1.0, rhs);
    }
}

/// A linear objective `constant + <grad, X>` over the feasible set.
pub(crate) struct SplittingProblem {
    pub n: usize,
    pub grad: Blocks,
    pub constant: f64,
    /// Per-pair polyhedron in coordinates `(c, re_1, im_1, ..., re_K, im_K)`.
    pub pair_set: Polytope,
    pub balanced: bool,
}

pub(crate) struct SplittingResult {
    pub y: Blocks,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub trace: Vec<TraceRow>,
}

impl SplittingProblem {
    fn kmax(&self) -> usize {
        self.grad.r.len()
    }

    pub fn objective(&self, x: &Blocks) -> f64 {
        self.constant + self.grad.inner(x)
    }

    /// A point satisfying every constraint: `R_k = I` and `C = I`, or the
    /// centered `C = (nI - J)/(n - 1)` when balanced.
    pub fn feasible_start(&self) -> Blocks {
        let n = self.n;
        let mut start = Blocks::zeros(n, self.kmax());
        start.c = if self.balanced && n > 1 {
            DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { -1.0 / (n as f64 - 1.0) })
        } else {
            DMatrix::identity(n, n)
        };
        for m in &mut start.r {
            *m = DMatrix::identity(n, n);
        }
        start
    }

    fn project_cone(&self, x: &Blocks) -> Result<Blocks> {
        let n = self.n;
        let c_in = if self.balanced {
            // PSD matrices with C 1 = 0 are exactly P S P with S PSD, P the
            // centering projector; the Frobenius projection is Π_PSD(P X P).
            let mut centered = x.c.clone();
            let row_means: Vec<f64> = (0..n).map(|i| centered.row(i).mean()).collect();
            for i in 0..n {
                for j in 0..n {
                    centered[(i, j)] -= row_means[i];
                }
            }
            let col_means: Vec<f64> = (0..n).map(|j| centered.column(j).mean()).collect();
            for i in 0..n {
                for j in 0..n {
                    centered[(i, j)] -= col_means[j];
                }
            }
            centered
        } else {
            x.c.clone()
        };
        let c = project_psd(&c_in)?;
        let r = x.r.par_iter().map(project_psd).collect::<Result<Vec<_>>>()?;
        Ok(Blocks { c, r })
    }

    fn project_polyhedral(&self, x: &Blocks) -> Blocks {
        let n = self.n;
        let kmax = self.kmax();
        let dim = 1 + 2 * kmax;
        let projected: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut out = Vec::with_capacity((n - i - 1) * dim);
                let mut v = vec![0.0; dim];
                let mut p = vec![0.0; dim];
                for j in i + 1..n {
                    v[0] = x.c[(i, j)];
                    for (k, m) in x.r.iter().enumerate() {
                        v[1 + 2 * k] = m[(i, j)].re;
                        v[2 + 2 * k] = m[(i, j)].im;
                    }
                    self.pair_set.project(&v, &mut p);
                    out.extend_from_slice(&p);
                }
                out
            })
            .collect();

        let mut y = Blocks::zeros(n, kmax);
        for i in 0..n {
            y.c[(i, i)] = 1.0;
            for m in &mut y.r {
                m[(i, i)] = Complex64::new(1.0, 0.0);
            }
            for (offset, p) in projected[i].chunks(dim).enumerate() {
                let j = i + 1 + offset;
                y.c[(i, j)] = p[0];
                y.c[(j, i)] = p[0];
                for (k, m) in y.r.iter_mut().enumerate() {
                    let z = Complex64::new(p[1 + 2 * k], p[2 + 2 * k]);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
        }
        y
    }

    /// Inexact proximal point on the linear objective. Step `j` solves
    ///
    /// ```text
    /// X_{j+1} = argmin <G, X> + ‖X - X_j‖² / (2 t_j)   over the feasible set
    /// ```
    ///
    /// by ADMM warm-started from the previous step, with `t_j` growing
    /// geometrically. Each step cannot increase the objective, so the trace
    /// (one row per step) is non-increasing up to the inner tolerance.
    pub fn solve(&self, config: &SolverConfig) -> Result<SplittingResult> {
        let dims = (self.n * self.n * (1 + 2 * self.kmax())) as f64;
        let sqrt_dims = dims.sqrt();
        let grad_norm = self.grad.norm_sqr().sqrt();
        let mut x = self.feasible_start();
        let mut objective = self.objective(&x);
        let mut trace = vec![TraceRow {
            iteration: 0,
            objective,
            primal_residual: 0.0,
            dual_residual: 0.0,
            penalty: config.penalty,
        }];
        if grad_norm == 0.0 {
            return Ok(SplittingResult {
                y: x,
                iterations: 0,
                converged: true,
                primal_residual: 0.0,
                dual_residual: 0.0,
                trace,
            });
        }

        let mut state = AdmmState {
            y: x.clone(),
            u: Blocks::zeros(self.n, self.kmax()),
            rho: config.penalty,
            primal: 0.0,
            dual: 0.0,
        };
        // The first step moves at most `t ‖G‖`, a small fraction of the
        // feasible set's diameter.
        let mut step = config.initial_step * sqrt_dims / grad_norm;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < config.max_iterations {
            let budget = config.max_iterations - iterations;
            let (used, inner_converged) = self.admm(&x, step, &mut state, config, budget)?;
            iterations += used;
            let moved = state.y.dist_sqr(&x).sqrt();
            let previous = objective;
            x = state.y.clone();
            objective = self.objective(&x);
            trace.push(TraceRow {
                iteration: iterations,
                objective,
                primal_residual: state.primal,
                dual_residual: state.dual,
                penalty: state.rho,
            });
            // A fixed point of the proximal map with a long step is optimal.
            let settled = moved <= config.tolerance * (sqrt_dims + x.norm_sqr().sqrt())
                && (objective - previous).abs() <= config.tolerance * (1.0 + objective.abs());
            if inner_converged && settled && step * grad_norm >= config.final_step * sqrt_dims {
                converged = true;
                break;
            }
            step *= config.step_growth;
        }

        Ok(SplittingResult {
            y: x,
            iterations,
            converged,
            primal_residual: state.primal,
            dual_residual: state.dual,
            trace,
        })
    }

    /// ADMM on the proximal subproblem centred at `center` with step `t`.
    /// Returns the iterations used and whether the residuals met tolerance.
    fn admm(
        &self,
        center: &Blocks,
        t: f64,
        state: &mut AdmmState,
        config: &SolverConfig,
        budget: usize,
    ) -> Result<(usize, bool)> {
        let dims = (self.n * self.n * (1 + 2 * self.kmax())) as f64;
        let sqrt_dims = dims.sqrt();
        let mut last_adapt = 0;
        for it in 1..=budget {
            let rho = state.rho;
            // Z-step: minimize <G, Z> + ‖Z - X_c‖²/(2t) + ρ/2 ‖Z - (Y - U)‖²
            // over the cone.
            let weight = rho + 1.0 / t;
            let mut target = state.y.clone();
            target -= &state.u;
            target.scale(rho / weight);
            target.axpy(1.0 / (t * weight), center);
            target.axpy(-1.0 / weight, &self.grad);
            let z = self.project_cone(&target)?;

            // Over-relaxed copy α Z + (1 - α) Y feeds the Y- and U-steps.
            let mut relaxed = z.clone();
            relaxed.scale(config.relaxation);
            relaxed.axpy(1.0 - config.relaxation, &state.y);
            let mut shifted = relaxed.clone();
            shifted += &state.u;
            let y_next = self.project_polyhedral(&shifted);

            relaxed -= &y_next;
            state.u += &relaxed;

            let mut diff = z.clone();
            diff -= &y_next;
            state.primal = diff.norm_sqr().sqrt();
            state.dual = rho * y_next.dist_sqr(&state.y).sqrt();
            state.y = y_next;

            let eps_primal =
                config.tolerance * (sqrt_dims + z.norm_sqr().sqrt().max(state.y.norm_sqr().sqrt()));
            let eps_dual = config.tolerance * (sqrt_dims + rho * state.u.norm_sqr().sqrt());
            if state.primal <= eps_primal && state.dual <= eps_dual {
                return Ok((it, true));
            }

            if config.adapt_penalty && it - last_adapt >= config.adapt_interval {
                let ratio = config.residual_ratio;
                // Normalize so the comparison is scale-free.
                let rp = state.primal / eps_primal;
                let rd = state.dual / eps_dual;
                if rp > ratio * rd {
                    state.rho *= config.penalty_factor;
                    state.u.scale(1.0 / config.penalty_factor);
                    last_adapt = it;
                } else if rd > ratio * rp {
                    state.rho /= config.penalty_factor;
                    state.u.scale(config.penalty_factor);
                    last_adapt = it;
                }
            }
        }
        Ok((budget, false))
    }
}

struct AdmmState {
    y: Blocks,
    /// Scaled dual variable.
    u: Blocks,
    rho: f64,
    primal: f64,
    dual: f64,
}
