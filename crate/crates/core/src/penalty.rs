//! Pairwise alignment penalties `f_ij(g) = ‖s_i - g ∘ s_j‖²` and their
//! Fourier coefficient matrices.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::harmonics::{Bandwidth, RotationAngle};
use crate::signals::{Dataset, Signal};

fn check_bandwidths(a: &Signal, b: &Signal) -> Result<()> {
    if a.bandwidth() != b.bandwidth() {
        return domain(format!(
            "bandwidth mismatch: {} vs {}",
            a.bandwidth().0,
            b.bandwidth().0
        ));
    }
    Ok(())
}

/// `‖ŝ_i - exp(-ikg) ŝ_j‖²`, evaluated in the coefficient domain.
pub fn pairwise_penalty(si: &Signal, sj: &Signal, g: RotationAngle) -> Result<f64> {
    check_bandwidths(si, sj)?;
    Ok(si
        .bandwidth()
        .frequencies()
        .zip(si.coeffs().iter().zip(sj.coeffs()))
        .map(|(k, (a, b))| (a - b * Complex64::from_polar(1.0, -(k as f64) * g.radians())).norm_sqr())
        .sum())
}

/// Fourier coefficients `f̂_ij(k)`, `k = -K..=K`, with
/// `f_ij(g) = Σ_k f̂_ij(k) exp(ikg)`.
///
/// With `c_k = ŝ_i(k) conj(ŝ_j(k))`:
/// `f̂(0) = ‖ŝ_i‖² + ‖ŝ_j‖² - 2 Re c_0` and `f̂(k) = -(c_k + conj(c_{-k}))`.
pub fn penalty_fourier(si: &Signal, sj: &Signal) -> Result<Vec<Complex64>> {
    check_bandwidths(si, sj)?;
    let bw = si.bandwidth();
    let c = |k: i64| si.coeff(k) * sj.coeff(k).conj();
    Ok(bw
        .frequencies()
        .map(|k| {
            if k == 0 {
                Complex64::new(si.norm_sqr() + sj.norm_sqr() - 2.0 * c(0).re, 0.0)
            } else {
                -(c(k) + c(-k).conj())
            }
        })
        .collect())
}

/// Evaluates a truncated expansion `Σ_k f̂(k) exp(ikg)` (real part).
pub fn evaluate_expansion(coeffs: &[Complex64], bandwidth: Bandwidth, g: f64) -> f64 {
    bandwidth
        .frequencies()
        .zip(coeffs)
        .map(|(k, c)| (c * Complex64::from_polar(1.0, k as f64 * g)).re)
        .sum()
}

/// The coefficient matrices `F̂^(k)` for `k = -K..=K`; entry `(i, j)` of the
/// matrix for frequency `k` is `f̂_ji(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyCoefficients {
    n: usize,
    bandwidth: Bandwidth,
    mats: Vec<DMatrix<Complex64>>,
}

impl PenaltyCoefficients {
    /// Builds from explicit matrices ordered by frequency `-K..=K`.
    pub fn from_matrices(mats: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if mats.len() % 2 == 0 {
            return domain("need an odd number of coefficient matrices");
        }
        let n = mats[0].nrows();
        if mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return domain("coefficient matrices must all be n x n");
        }
        Ok(Self {
            n,
            bandwidth: Bandwidth(mats.len() / 2),
            mats,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    /// `F̂^(k)`; panics if `|k| > K`.
    pub fn matrix(&self, k: i64) -> &DMatrix<Complex64> {
        let idx = self
            .bandwidth
            .index(k)
            .unwrap_or_else(|| panic!("frequency {k} outside bandwidth {}", self.bandwidth.0));
        &self.mats[idx]
    }

    /// Real part of `F̂^(0)`; the DC matrix is real and symmetric.
    pub fn dc_matrix(&self) -> DMatrix<f64> {
        self.matrix(0).map(|c| c.re)
    }

    /// `Σ_k Σ_ij |F̂^(k)_ij|`: bounds the magnitude of any objective whose
    /// variables have entries of modulus at most one.
    pub fn magnitude(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| m.iter().map(|c| c.norm()).sum::<f64>())
            .sum()
    }

    /// Text dump: header `n K`, then one line per `(k, row)` holding `k i`
    /// followed by `re im` pairs for each column.
    pub fn format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.bandwidth.0);
        for (k, m) in self.bandwidth.frequencies().zip(&self.mats) {
            for i in 0..self.n {
                let _ = write!(out, "{k} {i}");
                for j in 0..self.n {
                    let c = m[(i, j)];
                    let _ = write!(out, " {} {}", c.re, c.im);
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.format()).map_err(|e| Error::io(path, e))
    }
}

/// Assembles `F̂^(k)` for every frequency from a dataset.
pub fn build_coefficient_matrices(d: &Dataset) -> Result<PenaltyCoefficients> {
    coefficient_matrices(&d.signals)
}

pub fn coefficient_matrices(signals: &[Signal]) -> Result<PenaltyCoefficients> {
    let n = signals.len();
    if n < 2 {
        return domain("need at least two signals");
    }
    let bw = signals[0].bandwidth();
    if signals.iter().any(|s| s.bandwidth() != bw) {
        return domain("signals have differing bandwidths");
    }
    // Row j of this table holds f̂_ji for every i; rows are independent.
    let rows: Vec<Vec<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| penalty_fourier(&signals[j], &signals[i]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mats = (0..bw.len())
        .map(|kidx| DMatrix::from_fn(n, n, |i, j| rows[j][i][kidx]))
        .collect();
    Ok(PenaltyCoefficients {
        n,
        bandwidth: bw,
        mats,
    })
}

/// Coefficients of the product problem on `SO(2) x Z_M`:
/// `F̂^(k,m) = F̂^(k) / M` for every `m`, stored as a single scale factor.
#[derive(Debug, Clone, Copy)]
pub struct ProductCoefficients<'a> {
    base: &'a PenaltyCoefficients,
    num_classes: usize,
}

impl<'a> ProductCoefficients<'a> {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn scale(&self) -> f64 {
        1.0 / self.num_classes as f64
    }

    pub fn base(&self) -> &'a PenaltyCoefficients {
        self.base
    }

    /// Entry `(i, j)` of `F̂^(k,m)`.
    pub fn entry(&self, k: i64, m: usize, i: usize, j: usize) -> Complex64 {
        debug_assert!(m < self.num_classes);
        self.base.matrix(k)[(i, j)] * self.scale()
    }

    /// Materializes `F̂^(k,m)`.
    pub fn matrix(&self, k: i64, m: usize) -> DMatrix<Complex64> {
        debug_assert!(m < self.num_classes);
        self.base.matrix(k) * Complex64::new(self.scale(), 0.0)
    }
}

pub fn product_coefficients(
    base: &PenaltyCoefficients,
    num_classes: usize,
) -> Result<ProductCoefficients<'_>> {
    if num_classes < 2 {
        return domain(format!("need at least two classes, got {num_classes}"));
    }
    Ok(ProductCoefficients { base, num_classes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{dft_cyclic, uniform_grid};
    use crate::signals::{generate_dataset, random_prototype};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    /// Numeric oracle: sample `f_ij` on `L = 4K + 4` angles and transform.
    fn numeric_coefficients(si: &Signal, sj: &Signal) -> Vec<Complex64> {
        let bw = si.bandwidth();
        let len = 4 * bw.0 + 4;
        let samples: Vec<Complex64> = uniform_grid(len)
            .into_iter()
            .map(|g| Complex64::new(pairwise_penalty(si, sj, RotationAngle::new(g)).unwrap(), 0.0))
            .collect();
        let dft = dft_cyclic(&samples).unwrap();
        bw.frequencies()
            .map(|k| dft[k.rem_euclid(len as i64) as usize])
            .collect()
    }

    #[test]
    fn penalty_zero_at_identity_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = random_prototype(Bandwidth(4), rng.random());
            let b = random_prototype(Bandwidth(4), rng.random());
            assert!(pairwise_penalty(&a, &a, RotationAngle::new(0.0)).unwrap() < 1e-15);
            let g = RotationAngle::new(rng.random_range(0.0..TAU));
            let lhs = pairwise_penalty(&a, &b, g).unwrap();
            let rhs = pairwise_penalty(&b, &a, g.inverse()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
        let c = random_prototype(Bandwidth(3), 1);
        assert!(pairwise_penalty(&random_prototype(Bandwidth(4), 1), &c, RotationAngle::new(0.0)).is_err());
    }

    #[test]
    fn shifted_copy_has_unique_zero() {
        let s = random_prototype(Bandwidth(5), 8);
        let g0 = RotationAngle::new(1.9);
        let t = s.shift(g0);
        assert!(pairwise_penalty(&t, &s, g0).unwrap() < 1e-24);
        for g in uniform_grid(512) {
            let g = RotationAngle::new(g);
            if !g.approx_eq(g0, 2.0 * TAU / 512.0) {
                assert!(pairwise_penalty(&t, &s, g).unwrap() > 1e-8);
            }
        }
    }

    #[test]
    fn single_harmonic_closed_form() {
        let s = Signal::single(Bandwidth(3), 1, Complex64::new(1.0, 0.0)).unwrap();
        let f = penalty_fourier(&s, &s).unwrap();
        let expected = [0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0];
        for (c, e) in f.iter().zip(expected) {
            assert!((c - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        let numeric = numeric_coefficients(&s, &s);
        for (a, b) in f.iter().zip(&numeric) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_numeric_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let bw = Bandwidth(rng.random_range(0..=8));
            let a = random_prototype(bw, rng.random()).add_noise(0.3, rng.random()).unwrap();
            let b = random_prototype(bw, rng.random());
            let analytic = penalty_fourier(&a, &b).unwrap();
            let numeric = numeric_coefficients(&a, &b);
            for (x, y) in analytic.iter().zip(&numeric) {
                assert!((x - y).norm() < 1e-10);
            }
            // Conjugate symmetry of a real function.
            for (x, y) in analytic.iter().zip(analytic.iter().rev()) {
                assert!((x - y.conj()).norm() < 1e-14);
            }
            for _ in 0..10 {
                let g = rng.random_range(0.0..TAU);
                let direct = pairwise_penalty(&a, &b, RotationAngle::new(g)).unwrap();
                assert!((evaluate_expansion(&analytic, bw, g) - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn coefficient_matrices_are_hermitian() {
        let d = generate_dataset(2, 3, Bandwidth(3), 0.2, 6).unwrap();
        let f = build_coefficient_matrices(&d).unwrap();
        assert_eq!(f.n(), 6);
        assert_eq!(f.bandwidth(), Bandwidth(3));
        for k in -3..=3 {
            let m = f.matrix(k);
            assert_eq!(m.shape(), (6, 6));
            assert!((m - m.adjoint()).norm() < 1e-13);
            let neg = f.matrix(-k);
            assert!((neg - m.conjugate()).norm() < 1e-13);
        }
        for i in 0..6 {
            for j in 0..6 {
                let direct = penalty_fourier(&d.signals[j], &d.signals[i]).unwrap();
                assert_eq!(f.matrix(1)[(i, j)], direct[4]);
            }
        }
    }

    #[test]
    fn dc_diagonal_is_twice_the_nonconstant_energy() {
        let d = generate_dataset(2, 2, Bandwidth(2), 0.0, 6).unwrap();
        let f = build_coefficient_matrices(&d).unwrap();
        for i in 0..4 {
            let want = 2.0 * (d.signals[i].norm_sqr() - d.signals[i].coeff(0).norm_sqr());
            assert!((f.matrix(0)[(i, i)].re - want).abs() < 1e-12);
            assert!(pairwise_penalty(&d.signals[i], &d.signals[i], RotationAngle::new(0.0)).unwrap() < 1e-15);
        }
    }

    #[test]
    fn product_coefficients_scale() {
        let d = generate_dataset(2, 2, Bandwidth(2), 0.1, 6).unwrap();
        let f = build_coefficient_matrices(&d).unwrap();
        let p = product_coefficients(&f, 2).unwrap();
        assert_eq!(p.entry(1, 0, 0, 1), f.matrix(1)[(0, 1)] * 0.5);
        assert_eq!(p.matrix(1, 0), p.matrix(1, 1));
        let p3 = product_coefficients(&f, 3).unwrap();
        let total: DMatrix<Complex64> = (0..3).map(|m| p3.matrix(-2, m)).fold(DMatrix::zeros(4, 4), |a, b| a + b);
        assert!((total - f.matrix(-2)).norm() < 1e-14);
        assert!(product_coefficients(&f, 1).is_err());
    }

    #[test]
    fn dump_has_one_line_per_frequency_row() {
        let d = generate_dataset(2, 2, Bandwidth(1), 0.1, 6).unwrap();
        let f = build_coefficient_matrices(&d).unwrap();
        let text = f.format();
        assert_eq!(text.lines().count(), 1 + 3 * 4);
        assert!(text.starts_with("4 1\n"));
    }
}
