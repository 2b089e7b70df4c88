//! Thin wrappers around the LAPACK-backed dense routines used throughout.

use ndarray::Array2;
use ndarray_linalg::{Eigh, SVD, UPLO};
use num_complex::Complex64 as C64;

/// Largest singular value of a dense complex matrix (zero for empty input).
pub fn sigma_max(a: &Array2<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    // rebuild with canonical strides; LAPACK rejects zero-stride inputs, and
    // `as_standard_layout` leaves zero strides on size-1 axes in place
    let a = Array2::from_shape_vec(a.dim(), a.iter().cloned().collect())
        .expect("shape/vec mismatch");
    let (_, s, _) = a.svd(false, false).expect("SVD failed");
    s.iter().cloned().fold(0.0, f64::max)
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Hermitian eigendecomposition, eigenvalues ascending, eigenvectors in
/// columns satisfying `A v_k = λ_k v_k`.
pub fn eigh(a: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let (vals, vecs) = a.eigh(UPLO::Lower).expect("Hermitian eigensolve failed");
    // the backing solver hands back the complex-conjugated vector matrix
    // (eigenvectors of Aᵀ); undo that so the columns pair with `vals`
    (vals.to_vec(), vecs.mapv(|z| z.conj()))
}

/// Sorted (ascending) eigenvalues of a Hermitian matrix.
pub fn eigvalsh(a: &Array2<C64>) -> Vec<f64> {
    let (vals, _) = eigh(a);
    vals
}

/// `exp(A)` for antiselfadjoint `A`, via eigendecomposition of the Hermitian
/// matrix `iA`. The result is unitary up to eigensolver accuracy.
pub fn exp_skew(a: &Array2<C64>) -> Array2<C64> {
    let h = a.mapv(|z| z * C64::new(0.0, 1.0));
    let (vals, vecs) = eigh(&h);
    // exp(A) = exp(-i (iA)) = V diag(e^{-iλ}) V†
    let mut phases = Array2::<C64>::zeros((vals.len(), vals.len()));
    for (j, &l) in vals.iter().enumerate() {
        phases[[j, j]] = C64::new(0.0, -l).exp();
    }
    vecs.dot(&phases).dot(&adjoint(&vecs))
}

/// Max entrywise deviation from Hermiticity, `max |A - A†|`.
#[cfg_attr(not(test), allow(dead_code))]
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let d = a - &adjoint(a);
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖A†A - I‖` in operator norm; zero for a perfectly unitary `A`.
pub fn unitarity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut g = adjoint(a).dot(a);
    for j in 0..n {
        g[[j, j]] -= C64::new(1.0, 0.0);
    }
    sigma_max(&g)
}
