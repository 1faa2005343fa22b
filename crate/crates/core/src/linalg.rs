//! Small dense helpers over `nalgebra`: null spaces, ranks, spectra and
//! least squares for the ≤16-dimensional matrices used here.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Singular values of `a` (descending).
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank with threshold `rel_tol · σ_max`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Orthonormal basis (as columns) of `ker a`, using singular values below
/// `rel_tol · σ_max` as zero. Also returns the rank of `a`.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let n = a.ncols();
    // Pad to at least n rows so the SVD yields a full right basis.
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= rel_tol * smax)
        .collect();
    let rank = n - keep.len();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        for r in 0..n {
            basis[(r, col)] = v_t[(k, r)];
        }
    }
    (basis, rank)
}

/// Eigenvalues of a general real matrix via the real Schur form.
///
/// The unshifted QR iteration can stall on matrices with exact nilpotent
/// structure; on failure the iteration is retried on a shifted matrix and on
/// a fixed orthogonal similarity transform, both of which leave the spectrum
/// unchanged up to the known shift.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = |m: DMatrix<f64>| {
        Schur::try_new(m, f64::EPSILON, 10_000).map(|s| s.complex_eigenvalues())
    };
    if let Some(e) = schur(a.clone()) {
        return Ok(e.iter().copied().collect());
    }
    let shift = 0.37 * a.norm() / (n as f64).sqrt();
    let q = mixing_rotation(n);
    let rotated = &q * a * q.transpose();
    let attempts = [
        (a + DMatrix::identity(n, n) * shift, shift),
        (rotated.clone(), 0.0),
        (rotated + DMatrix::identity(n, n) * shift, shift),
    ];
    for (m, s) in attempts {
        if let Some(e) = schur(m) {
            return Ok(e.iter().map(|l| l - s).collect());
        }
    }
    Err(Error::EigenFailure)
}

/// A fixed dense orthogonal matrix (QR of a deterministic pseudo-random
/// matrix).
fn mixing_rotation(n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| ((1 + i * 7 + j * 13) as f64 * 0.618_033_988_75).fract() - 0.5);
    m.qr().q()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let sym = 0.5 * (a + a.transpose());
    let mut e: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Minimum-norm least-squares solution of `a x = b` and `‖a x - b‖₂`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v));
    let eps = (1e-13 * smax).max(f64::MIN_POSITIVE);
    let x = svd
        .solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Frobenius norm.
pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_stalling_matrix() {
        // nilpotent-like block pattern on which plain QR does not converge
        let (a, b) = (0.04595320925731928, 14.289153645027872);
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 3)] = -a;
        m[(1, 3)] = a;
        m[(3, 0)] = -b;
        m[(3, 1)] = b;
        let e = eigenvalues(&m).unwrap();
        let lam = (2.0 * a * b).sqrt();
        let mut re: Vec<f64> = e.iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + lam).abs() < 1e-12 && (re[3] - lam).abs() < 1e-12);
        assert!(e.iter().all(|l| l.im.abs() < 1e-12));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, -2.0, 0.0]);
        let (basis, rank) = null_space(&a, 1e-10);
        assert_eq!(rank, 2);
        assert_eq!(basis.ncols(), 2);
        assert!((&a * &basis).norm() < 1e-14);
        let gram = basis.transpose() * &basis;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let mut e = eigenvalues(&a).unwrap();
        e.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((e[0] - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        assert!((e[1] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_spectrum() {
        let e = eigenvalues(&DMatrix::zeros(3, 3)).unwrap();
        assert!(e.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn least_squares_consistent_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (x, res) = least_squares(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert!(res < 1e-14);
    }
}
