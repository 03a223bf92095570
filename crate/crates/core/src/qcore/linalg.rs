use nalgebra::{DMatrix, SymmetricEigen};

use super::{c, max_abs, C64};

/// Eigen-decomposition of a Hermitian matrix. The input is symmetrized as
/// `(A + A†)/2` first. Eigenvalues are returned in ascending order with the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(a: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    if n == 1 {
        return (vec![a[(0, 0)].re], DMatrix::identity(1, 1));
    }
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Eigenvalues of a `dim`-dimensional PSD matrix below this are rounding
/// noise; their square roots would otherwise leak ~1e-8 into fidelities.
pub(crate) fn spectral_floor(dim: usize) -> f64 {
    64.0 * f64::EPSILON * dim.max(1) as f64
}

/// `√v` for an eigenvalue, with values inside the spectral floor mapped to 0.
pub(crate) fn floored_sqrt(v: f64, dim: usize) -> f64 {
    if v <= spectral_floor(dim) {
        0.0
    } else {
        v.sqrt()
    }
}

/// Principal square root of a PSD matrix; eigenvalues within rounding noise
/// of zero (including slightly negative ones) are set to zero.
pub fn sqrt_psd(a: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(a);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let s = floored_sqrt(v, n);
        for r in 0..n {
            scaled[(r, k)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// `U†U = I` within `tol` entrywise.
pub fn is_unitary(u: &DMatrix<C64>, tol: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n))) <= tol
}
