//! Dense reference computations: discrete Gramians from the Stein
//! equations, square-root balanced truncation, and principal angles.
//!
//! These are O(n³) or worse and meant for verification at desk scale.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::linalg::{self, orthonormalize, psd_factor, thin_svd};
use crate::model::FirstOrderSystem;

/// Above this state dimension the Stein equations are solved by the
/// doubling iteration instead of the Kronecker-product system.
pub const KRONECKER_MAX_STATES: usize = 30;

#[derive(Debug, Clone)]
pub struct GramianPair {
    /// Controllability Gramian, `Wc = A Wc Aᵀ + B Bᵀ`.
    pub wc: DMatrix<f64>,
    /// Observability Gramian, `Wo = Aᵀ Wo A + Cᵀ C`.
    pub wo: DMatrix<f64>,
    /// Frobenius residuals of the two equations, relative to `‖BBᵀ‖` and `‖CᵀC‖`.
    pub residuals: (f64, f64),
}

pub fn stein_gramians(fos: &FirstOrderSystem) -> Result<GramianPair> {
    if !fos.domain.is_discrete() {
        return Err(crate::Error::DomainMismatch("Stein Gramians need a discrete system".into()));
    }
    let rho = linalg::spectral_radius(&fos.a)?;
    if rho >= 1.0 - 1e-10 {
        return Err(Error::UnstableSystem(rho));
    }
    let bbt = &fos.b * fos.b.transpose();
    let ctc = fos.c.transpose() * &fos.c;
    let at = fos.a.transpose();
    let wc = solve_stein(&fos.a, &bbt)?;
    let wo = solve_stein(&at, &ctc)?;
    let residuals = (
        stein_residual(&fos.a, &wc, &bbt),
        stein_residual(&at, &wo, &ctc),
    );
    Ok(GramianPair { wc, wo, residuals })
}

/// Solves `W = A W Aᵀ + Q` for a Schur-stable `A`.
pub fn solve_stein(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let w = if n <= KRONECKER_MAX_STATES {
        // vec(A W Aᵀ) = (A ⊗ A) vec(W) with column-major vec.
        let lhs = DMatrix::identity(n * n, n * n) - a.kronecker(a);
        let rhs = DVector::from_column_slice(q.as_slice());
        let sol = LU::new(lhs).solve(&rhs).ok_or(Error::UnstableSystem(1.0))?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    } else {
        smith_doubling(a, q)
    };
    Ok((&w + w.transpose()) * 0.5)
}

fn smith_doubling(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut w = q.clone();
    let mut power = a.clone();
    for _ in 0..64 {
        let term = &power * &w * power.transpose();
        let size = term.norm();
        w += term;
        if size <= 1e-18 * w.norm() {
            break;
        }
        power = &power * &power;
    }
    w
}

fn stein_residual(a: &DMatrix<f64>, w: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let r = w - a * w * a.transpose() - q;
    r.norm() / q.norm().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub struct BalancedTruncation {
    pub reduced: FirstOrderSystem,
    /// All Hankel singular values, nonincreasing.
    pub hankel_singular_values: Vec<f64>,
}

impl BalancedTruncation {
    /// Sum of the discarded Hankel singular values.
    pub fn truncated_tail(&self) -> f64 {
        self.hankel_singular_values[self.reduced.states()..].iter().sum()
    }
}

/// Square-root balanced truncation of a stable discrete system to `order`
/// states.
pub fn dense_balanced_truncation(fos: &FirstOrderSystem, order: usize) -> Result<BalancedTruncation> {
    let states = fos.states();
    if order == 0 || order > states {
        return Err(Error::OrderTooLarge { order, states });
    }
    let gram = stein_gramians(fos)?;
    let lc = psd_factor(&gram.wc);
    let lo = psd_factor(&gram.wo);
    let svd = thin_svd(&(lo.transpose() * &lc))?;
    let hsv: Vec<f64> = svd.s.iter().copied().collect();
    let kept = &svd.s.as_slice()[..order];
    if kept[order - 1] <= 1e-300 {
        return Err(Error::RankCollapse(format!(
            "Hankel singular value {order} is zero; the realization is not minimal"
        )));
    }
    let scale = DMatrix::from_diagonal(&DVector::from_iterator(
        order,
        kept.iter().map(|s| 1.0 / s.sqrt()),
    ));
    let right = &lc * svd.v.columns(0, order) * &scale;
    let left = &lo * svd.u.columns(0, order) * &scale;
    let reduced = FirstOrderSystem::new(
        left.transpose() * &fos.a * &right,
        left.transpose() * &fos.b,
        &fos.c * &right,
        fos.domain,
    )?;
    Ok(BalancedTruncation {
        reduced,
        hankel_singular_values: hsv,
    })
}

/// Principal angles between `span(p)` and `span(q)`, nondecreasing, in
/// `[0, π/2]`. Returns `min(cols(p), cols(q))` angles.
///
/// Small angles come from the sines (`(I - Q_p Q_pᵀ) Q_q`) and large ones
/// from the cosines (`Q_pᵀ Q_q`), so both ends are accurate.
pub fn subspace_angles(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Vec<f64>> {
    if p.nrows() != q.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces live in R^{} and R^{}",
            p.nrows(),
            q.nrows()
        )));
    }
    let (wide, narrow) = if p.ncols() >= q.ncols() { (p, q) } else { (q, p) };
    let qw = orthonormalize(wide)?;
    let qn = orthonormalize(narrow)?;
    let k = qn.ncols();
    let proj = qw.transpose() * &qn;
    let cosines = thin_svd(&proj)?.s;
    let residual = &qn - &qw * &proj;
    let mut sines: Vec<f64> = thin_svd(&residual)?.s.iter().copied().collect();
    sines.sort_by(|a, b| a.total_cmp(b));
    let angles = (0..k)
        .map(|i| {
            let c = cosines[i].clamp(-1.0, 1.0);
            let s = sines[i].clamp(0.0, 1.0);
            if s * s < 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect::<Vec<_>>();
    Ok(angles)
}

/// Largest principal angle.
pub fn max_subspace_angle(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    Ok(subspace_angles(p, q)?.into_iter().fold(0.0, f64::max))
}
