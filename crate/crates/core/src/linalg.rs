//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `||A - A^H||_F / ||A||_F`, zero for the zero matrix.
pub fn hermitian_residual(a: &CMat) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / norm
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Real trace of a Hermitian matrix.
pub fn real_trace(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn hermitian_inverse(a: &CMat) -> Option<CMat> {
    if !is_finite(a) {
        return None;
    }
    a.clone().cholesky().map(|ch| ch.inverse())
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn hermitian_solve(a: CMat, b: &CMat) -> Option<CMat> {
    if !is_finite(&a) {
        return None;
    }
    a.cholesky().map(|ch| ch.solve(b))
}

/// Solves `A X = B` for a general square `A` via partial-pivot LU.
pub fn general_solve(a: CMat, b: &CMat) -> Option<CMat> {
    if !is_finite(&a) {
        return None;
    }
    let x = a.lu().solve(b)?;
    is_finite(&x).then_some(x)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Principal square root of a Hermitian positive semi-definite matrix.
///
/// Eigenvalues below zero are clipped. The clipping is only accepted for
/// eigenvalues within `1e-10 * tr(A) / n` of zero; anything more negative is
/// reported as an error string.
pub fn psd_sqrt(a: &CMat) -> Result<CMat, String> {
    if !is_finite(a) {
        return Err("non-finite entries".into());
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let tol = 1e-10 * real_trace(a).abs() / n as f64;
    let eig = hermitian_part(a).symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol {
            return Err(format!("negative eigenvalue {lambda:e}"));
        }
        let s = lambda.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Block-diagonal matrix from square blocks.
pub fn block_diagonal(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let s = b.nrows();
        out.view_mut((off, off), (s, s)).copy_from(b);
        off += s;
    }
    out
}

/// Stacks matrices with equal column counts vertically.
pub fn vstack(blocks: &[CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, 0), (b.nrows(), cols)).copy_from(b);
        off += b.nrows();
    }
    out
}

/// Relative Frobenius distance `||A - B|| / max(||A||, ||B||)`.
pub fn relative_error(a: &CMat, b: &CMat) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}
