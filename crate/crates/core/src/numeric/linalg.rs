//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub fn real_part(a: &DMatrix<C64>) -> DMatrix<f64> {
    a.map(|z| z.re)
}

pub fn imag_part(a: &DMatrix<C64>) -> DMatrix<f64> {
    a.map(|z| z.im)
}

pub fn complexify(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

/// Smallest eigenvalue of the symmetric part of a real matrix.
/// Complex product through four real products, which take the blocked
/// `f64` kernel instead of the generic one.
pub fn complex_mul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = (real_part(a), imag_part(a));
    let (br, bi) = (real_part(b), imag_part(b));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

pub fn min_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let s = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `√det A` for a complex symmetric `A = R + iS` with `R` positive definite,
/// on the branch continuous from `S = 0` (where it is the positive root).
///
/// Writing `A = R^{1/2}(1 + i R^{-1/2} S R^{-1/2}) R^{1/2}` gives
/// `√det A = √det R · Π_k √(1 + i μ_k)` with real `μ_k`, so the principal root
/// of every factor is the continuous one.
pub fn sqrt_det_sym(a: &DMatrix<C64>) -> Result<C64> {
    let d = a.nrows();
    if d == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let r = real_part(a);
    let s = imag_part(a);
    let eig = SymmetricEigen::new((&r + r.transpose()) * 0.5);
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidInput("real part of quadratic form is not positive definite".into()));
    }
    let inv_half = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let m = &inv_half * ((&s + s.transpose()) * 0.5) * &inv_half;
    let mu = SymmetricEigen::new((&m + m.transpose()) * 0.5).eigenvalues;
    let mut out = C64::new(eig.eigenvalues.iter().product::<f64>().sqrt(), 0.0);
    for &mk in mu.iter() {
        out *= C64::new(1.0, mk).sqrt();
    }
    Ok(out)
}

pub fn inverse(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    a.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular matrix".into()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Eigenvalues of a general complex matrix (diagonal of its Schur form).
pub fn eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = nalgebra::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn spectral_radius(m: &DMatrix<C64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
