//! Frobenius projection onto the positive semidefinite cone.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub(crate) fn hermitian_part<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> DMatrix<T> {
    (h + h.adjoint()) * T::from_real(0.5)
}

/// Symmetrizes `h` and clips its negative eigenvalues to zero.
pub fn project_psd<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    if n == 0 {
        return Ok(h.clone());
    }
    let sym = hermitian_part(h);
    let eig = sym
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "symmetric eigensolver did not converge on a {n}x{n} matrix (Frobenius norm {:.3e})",
                sym.norm()
            ))
        })?;
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(sym);
    }
    // Reassemble from whichever side of the spectrum needs fewer columns.
    let positive: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    if positive.len() <= n / 2 {
        Ok(low_rank(&eig.eigenvectors, &eig.eigenvalues, &positive, n))
    } else {
        let negative: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
        Ok(sym - low_rank(&eig.eigenvectors, &eig.eigenvalues, &negative, n))
    }
}

fn low_rank<T: ComplexField<RealField = f64>>(
    vectors: &DMatrix<T>,
    values: &nalgebra::DVector<f64>,
    cols: &[usize],
    n: usize,
) -> DMatrix<T> {
    let mut w = DMatrix::<T>::zeros(n, cols.len());
    for (out, &c) in cols.iter().enumerate() {
        let scale = T::from_real(values[c]);
        w.set_column(out, &(vectors.column(c) * scale));
    }
    let mut v = DMatrix::<T>::zeros(n, cols.len());
    for (out, &c) in cols.iter().enumerate() {
        v.set_column(out, &vectors.column(c));
    }
    w * v.adjoint()
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn min_eigenvalue<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> Result<f64> {
    if h.nrows() == 0 {
        return Ok(0.0);
    }
    let eig = hermitian_part(h)
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.min())
}
