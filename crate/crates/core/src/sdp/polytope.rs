//! Euclidean projection onto a small polyhedron `{x : a_j·x >= b_j}`.
//!
//! Used for the per-pair constraint block of the splitting solver, where each
//! off-diagonal pair `(i, j)` owns the coordinates
//! `(C_ij, Re R_1(i,j), Im R_1(i,j), ..., Re R_K(i,j), Im R_K(i,j))`.
//! The projection is computed exactly with the Goldfarb–Idnani dual
//! active-set method specialized to an identity Hessian.

const VIOLATION_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    normals: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

/// Outcome of one projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionStats {
    pub active: usize,
    pub steps: usize,
    /// Worst remaining violation `max_j (b_j - a_j·x)^+` in normalized units.
    pub violation: f64,
}

impl Polytope {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            normals: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Adds `normal·x >= rhs`. The row is stored normalized.
    pub fn push(&mut self, normal: Vec<f64>, rhs: f64) {
        assert_eq!(normal.len(), self.dim);
        let norm = dot(&normal, &normal).sqrt();
        assert!(norm > 0.0, "zero constraint normal");
        self.normals.push(normal.iter().map(|a| a / norm).collect());
        self.rhs.push(rhs / norm);
    }

    pub fn slack(&self, j: usize, x: &[f64]) -> f64 {
        dot(&self.normals[j], x) - self.rhs[j]
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| (-self.slack(j, x)).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Projects `v` onto the polyhedron, writing the result into `x`.
    pub fn project(&self, v: &[f64], x: &mut [f64]) -> ProjectionStats {
        x.copy_from_slice(v);
        let mut active: Vec<usize> = Vec::with_capacity(self.dim);
        let mut mult: Vec<f64> = Vec::with_capacity(self.dim);
        let mut basis = Basis::new(self.dim);
        let mut steps = 0;
        let max_steps = 20 * (self.len() + self.dim) + 20;

        'outer: loop {
            let Some((p, slack)) = (0..self.len())
                .filter(|j| !active.contains(j))
                .map(|j| (j, self.slack(j, x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                break;
            };
            if slack >= -VIOLATION_TOL {
                break;
            }
            let normal = &self.normals[p];
            let mut mult_p = 0.0;
            loop {
                steps += 1;
                if steps > max_steps {
                    break 'outer;
                }
                basis.rebuild(active.iter().map(|&j| self.normals[j].as_slice()));
                let (z, r) = basis.split(normal);
                let z_sq = dot(&z, &z);

                // Largest dual step keeping active multipliers nonnegative.
                let mut partial = f64::INFINITY;
                let mut leaving = None;
                for (idx, (&ri, &ui)) in r.iter().zip(&mult).enumerate() {
                    if ri > PIVOT_TOL {
                        let t = ui / ri;
                        if t < partial {
                            partial = t;
                            leaving = Some(idx);
                        }
                    }
                }
                let full = if z_sq.sqrt() > DEPENDENCE_TOL {
                    -self.slack(p, x) / z_sq
                } else {
                    f64::INFINITY
                };

                if full.is_infinite() {
                    let Some(l) = leaving else {
                        // Infeasible polyhedron; cannot happen for the
                        // constraint sets built in this crate.
                        break 'outer;
                    };
                    for (u, ri) in mult.iter_mut().zip(&r) {
                        *u -= partial * ri;
                    }
                    mult_p += partial;
                    active.remove(l);
                    mult.remove(l);
                    continue;
                }

                let t = full.min(partial);
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
                for (u, ri) in mult.iter_mut().zip(&r) {
                    *u -= t * ri;
                }
                mult_p += t;
                if full <= partial {
                    active.push(p);
                    mult.push(mult_p);
                    break;
                }
                let l = leaving.expect("partial step without leaving constraint");
                active.remove(l);
                mult.remove(l);
            }
        }
        ProjectionStats {
            active: active.len(),
            steps,
            violation: self.max_violation(x),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis `Q` and triangular factor `R` of the active normals,
/// recomputed by modified Gram–Schmidt (the active set has at most `dim` rows).
struct Basis {
    dim: usize,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl Basis {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    fn rebuild<'a>(&mut self, rows: impl Iterator<Item = &'a [f64]>) {
        self.q.clear();
        self.r.clear();
        for (col, a) in rows.enumerate() {
            let mut v = a.to_vec();
            let mut rcol = vec![0.0; col + 1];
            for (i, qi) in self.q.iter().enumerate() {
                let c = dot(qi, &v);
                rcol[i] = c;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= c * qk;
                }
            }
            let norm = dot(&v, &v).sqrt();
            rcol[col] = norm;
            // Active normals are independent by construction, so norm > 0.
            let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            self.q.push(v.iter().map(|x| x * inv).collect());
            self.r.push(rcol);
        }
    }

    /// Splits `a` into its component `z` orthogonal to the active normals and
    /// the coefficients `r` with `a = N r + z`.
    fn split(&self, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut z = a.to_vec();
        let d: Vec<f64> = self
            .q
            .iter()
            .map(|qi| {
                let c = dot(qi, &z);
                for (zk, qk) in z.iter_mut().zip(qi) {
                    *zk -= c * qk;
                }
                c
            })
            .collect();
        // Back substitution R r = d with R stored by columns.
        let q = self.q.len();
        let mut r = vec![0.0; q];
        for i in (0..q).rev() {
            let mut s = d[i];
            for (j, rj) in r.iter().enumerate().skip(i + 1) {
                s -= self.r[j][i] * rj;
            }
            r[i] = s / self.r[i][i];
        }
        debug_assert_eq!(z.len(), self.dim);
        (z, r)
    }
}
