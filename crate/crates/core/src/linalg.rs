//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Orthonormal basis (as columns) of the null space of `a`.
///
/// Computed from the eigen-decomposition of `aᵀa`; eigenvalues below
/// `tol · max(1, λ_max)` count as zero.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max).max(1.0);
    let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= tol * lmax).collect();
    idx.sort_unstable();
    let mut out = DMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &eig.eigenvectors.column(i));
    }
    out
}

/// Least-norm least-squares solution of `a x = b` and the residual norm.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = 1e-12 * smax.max(1.0);
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let r = (a * &x - b).norm();
    (x, r)
}

/// Rank of `a` with relative tolerance.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    svd.singular_values.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}
