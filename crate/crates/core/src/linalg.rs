//! Small complex dense-matrix helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalue floor used when a Hermitian PD matrix fails Cholesky.
const EIGEN_FLOOR: f64 = 1e-12;

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Accumulate `acc += g g^H`.
pub fn add_gram(acc: &mut CMatrix, g: &CMatrix) {
    acc.gemm(Complex64::new(1.0, 0.0), g, &g.adjoint(), Complex64::new(1.0, 0.0));
}

/// `log2 det(I + V^{-1} S)` for Hermitian PD `V` and Hermitian PSD `S`.
///
/// Whitens with the Cholesky factor of `V` so the argument stays Hermitian:
/// `det(I + V^{-1} S) = det(I + L^{-1} S L^{-H})`. Returns `None` if `V` is
/// not positive definite.
pub fn log2_det_whitened(v: &CMatrix, s: &CMatrix) -> Option<f64> {
    let n = v.nrows();
    let l = cholesky_factor(v.clone())?;
    let y = l.solve_lower_triangular(s)?;
    let x = l.solve_lower_triangular(&y.adjoint())?.adjoint();
    let a = hermitian_part(&(CMatrix::identity(n, n) + x));
    Some(log2_det_pd(&a))
}

/// Lower Cholesky factor of the Hermitian part of `a`, or `None` unless it
/// is positive definite. nalgebra takes complex square roots of the pivots,
/// so an indefinite input factors without error; the pivots are checked here.
fn cholesky_factor(a: CMatrix) -> Option<CMatrix> {
    let l = Cholesky::new(hermitian_part(&a))?.unpack();
    let pd = l.diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= 1e-9 * d.re && d.re.is_finite());
    pd.then_some(l)
}

/// `log2 det(A)` for Hermitian PD `A`; eigenvalues are clipped at 1e-12 if
/// Cholesky fails on a nearly singular argument.
pub fn log2_det_pd(a: &CMatrix) -> f64 {
    match cholesky_factor(a.clone()) {
        Some(l) => l.diagonal().iter().map(|d| 2.0 * d.re.log2()).sum(),
        None => SymmetricEigen::new(a.clone())
            .eigenvalues
            .iter()
            .map(|&lambda| lambda.max(EIGEN_FLOOR).log2())
            .sum(),
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitian_part(a))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_case_is_shannon() {
        let v = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let s = CMatrix::from_element(1, 1, c(6.0, 0.0));
        let r = log2_det_whitened(&v, &s).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_determinant() {
        let v = CMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.5, 0.2), c(0.5, -0.2), c(2.0, 0.0)]);
        let g = CMatrix::from_row_slice(2, 1, &[c(1.0, 1.0), c(-0.3, 0.7)]);
        let s = &g * g.adjoint();
        let direct = (CMatrix::identity(2, 2) + v.clone().try_inverse().unwrap() * &s).determinant();
        let r = log2_det_whitened(&v, &s).unwrap();
        assert!((r - direct.re.log2()).abs() < 1e-12);
        assert!(direct.im.abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let v = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let s = CMatrix::identity(2, 2);
        assert!(log2_det_whitened(&v, &s).is_none());
    }

    #[test]
    fn eigen_fallback_clips_singular_argument() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let d = log2_det_pd(&a);
        assert!(d.is_finite() && d < -30.0);
    }
}
