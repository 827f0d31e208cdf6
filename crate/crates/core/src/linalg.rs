//! Thin wrappers over the dense kernels in `nalgebra`.
//!
//! Everything in the crate goes through these helpers so that singular
//! vectors are ordered and signed the same way everywhere; the recursions
//! are only reproducible if the SVD output is canonical.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, QR, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Thin SVD `a = u * diag(s) * v^T` with `s` nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Computes a thin SVD with singular values sorted descending and each
/// right singular vector signed so that its largest-magnitude entry is
/// positive (the matching left vector is flipped with it).
pub fn thin_svd(a: &DMatrix<f64>) -> Result<Svd> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "SVD of an empty {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::SvdFailure("input contains non-finite entries".into()));
    }
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::SvdFailure(format!("{}x{} matrix", a.nrows(), a.ncols())))?;
    let mut u = svd.u.expect("u requested");
    let mut v = svd.v_t.expect("v requested").transpose();
    let s = svd.singular_values;
    for j in 0..v.ncols() {
        let col = v.column(j);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.column_mut(j).neg_mut();
            u.column_mut(j).neg_mut();
        }
    }
    Ok(Svd { u, s, v })
}

/// Orthonormal basis of the column space of `a` by thin Householder QR.
///
/// Fails with `RankDeficient` when a diagonal entry of `R` drops below
/// `1e-12` times the largest one.
pub fn orthonormalize(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() == 0 || a.ncols() > a.nrows() {
        return Err(Error::RankDeficient);
    }
    let qr = QR::new(a.clone());
    let r = qr.r();
    let diag: Vec<f64> = (0..a.ncols()).map(|i| r[(i, i)].abs()).collect();
    let top = diag.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) || diag.iter().any(|&d| d <= 1e-12 * top) {
        return Err(Error::RankDeficient);
    }
    Ok(qr.q())
}

/// Matrix of i.i.d. standard normal entries.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// All eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000 + 100 * a.nrows())
        .ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().fold(0.0, |acc, z| acc.max(z.norm())))
}

/// Symmetric square-root factor `L` with `w = L L^T`; negative eigenvalues
/// (round-off on a semidefinite matrix) are clipped to zero.
pub fn psd_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut factor = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(scale);
    }
    factor
}

/// Symmetric eigendecomposition sorted by descending eigenvalue.
pub fn sorted_symmetric_eigen(w: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(w.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest singular value of a complex matrix.
pub fn sigma_max(a: &DMatrix<Complex64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.nrows() == 1 || a.ncols() == 1 {
        return a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Stacks `top` over `bottom`.
pub fn vstack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Places `left` beside `right`.
pub fn hstack(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(left.nrows(), right.nrows());
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    out
}

/// `[[a, b], [c, d]]` from four blocks.
pub fn block2x2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    vstack(&hstack(a, b), &hstack(c, d))
}
