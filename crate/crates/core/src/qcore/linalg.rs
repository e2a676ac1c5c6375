//! Hermitian spectra and entropies of positive matrices.

use nalgebra::DMatrix;

use crate::qcore::special::xlog2x_neg;
use crate::{Error, Result, C64};

/// Eigenvalue floor below which a spectrum is considered corrupted.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-9;

/// Eigenvalues of a Hermitian matrix (ascending order not guaranteed).
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Eigen-decomposition of a Hermitian matrix: (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Von Neumann entropy (bits) of the spectrum `eig / trace`.
///
/// Eigenvalues above `-NEGATIVE_EIGEN_TOL * trace` are clamped to zero; anything
/// more negative is reported as a numerics error.
pub fn entropy_of_spectrum(eig: &[f64]) -> Result<f64> {
    let trace: f64 = eig.iter().sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::Numerics(format!("spectrum with trace {trace}")));
    }
    let mut s = 0.0;
    for &l in eig {
        let p = l / trace;
        if p < -NEGATIVE_EIGEN_TOL {
            return Err(Error::Numerics(format!(
                "eigenvalue {p:.3e} below clamp tolerance"
            )));
        }
        s += xlog2x_neg(p.max(0.0));
    }
    Ok(s.max(0.0))
}

/// Entropy (bits) of the normalised state whose (unnormalised) Gram or density
/// matrix is `m`.
pub fn entropy_of_psd(m: &DMatrix<C64>) -> Result<f64> {
    entropy_of_spectrum(&hermitian_eigenvalues(m))
}

/// Largest deviation from Hermiticity.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Trace as a real number.
pub fn real_trace(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}
