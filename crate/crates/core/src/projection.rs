//! Oblique projection `(X, Y)` built from the final subspaces and the
//! structure-preserving reduced quintuplet `{YᵀMX, YᵀDX, YᵀKX, YᵀF, GX}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, block2x2, max_abs, thin_svd};
use crate::model::SecondOrderSystem;

/// Default relative cut for the singular values of `SᵀR`.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Biorthogonal pair with `YᵀX = I`.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Retained singular values of `SᵀR`, nonincreasing and positive.
    pub sigma: DVector<f64>,
    pub warnings: Vec<String>,
}

impl ProjectionPair {
    pub fn order(&self) -> usize {
        self.x.ncols()
    }

    /// `max |YᵀX - I|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let k = self.order();
        max_abs(&(self.y.tr_mul(&self.x) - DMatrix::identity(k, k)))
    }
}

/// `SᵀR = UΣVᵀ`, `X = S U Σ^{-1/2}`, `Y = R V Σ^{-1/2}` over the singular
/// values above `rank_tol * σ_1`.
pub fn build_projection(s: &DMatrix<f64>, r: &DMatrix<f64>, rank_tol: f64) -> Result<ProjectionPair> {
    if s.shape() != r.shape() {
        return Err(Error::DimensionMismatch(format!(
            "S is {:?} but R is {:?}",
            s.shape(),
            r.shape()
        )));
    }
    let svd = thin_svd(&s.tr_mul(r))?;
    let top = svd.s[0];
    if !(top >= 1e-300) {
        return Err(Error::RankCollapse(format!(
            "largest singular value of SᵀR is {top:e}; the subspaces are numerically orthogonal"
        )));
    }
    let kept = svd.s.iter().take_while(|&&x| x > rank_tol * top).count();
    let mut warnings = Vec::new();
    if kept < s.ncols() {
        let msg = format!("rank shrunk from {} to {kept}", s.ncols());
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let sigma = svd.s.rows(0, kept).into_owned();
    let scale = DMatrix::from_diagonal(&sigma.map(|x| 1.0 / x.sqrt()));
    let x = s * svd.u.columns(0, kept) * &scale;
    let y = r * svd.v.columns(0, kept) * &scale;
    Ok(ProjectionPair { x, y, sigma, warnings })
}

pub fn reduce(sos: &SecondOrderSystem, proj: &ProjectionPair) -> Result<SecondOrderSystem> {
    if proj.x.nrows() != sos.states() || proj.y.shape() != proj.x.shape() {
        return Err(Error::DimensionMismatch(format!(
            "projection is {:?}/{:?}, system has N = {}",
            proj.x.shape(),
            proj.y.shape(),
            sos.states()
        )));
    }
    let (x, y) = (&proj.x, &proj.y);
    SecondOrderSystem::new(
        y.tr_mul(&(sos.mass() * x)),
        y.tr_mul(&(sos.damping() * x)),
        y.tr_mul(&(sos.stiffness() * x)),
        y.tr_mul(sos.input()),
        sos.output() * x,
        sos.domain(),
    )
}

/// Block pattern check of the lifted projection `blkdiag(X, X)`,
/// `blkdiag(Y, Y)` applied to the descriptor linearization
/// `E = blkdiag(I, M)`, `A = [[0, I], [-K, -D]]`, `B = [0; F]`.
#[derive(Debug, Clone)]
pub struct StructureReport {
    /// `max |T1 - I|` with `T1 = YᵀX`.
    pub t1_deviation: f64,
    /// 2-norm condition numbers of `T1` and `T2` (equal here).
    pub t1_condition: f64,
    pub t2_condition: f64,
    /// Off-diagonal blocks of `Y_blkᵀ E X_blk`.
    pub e_off_pattern: f64,
    /// Top-left block of `Y_blkᵀ A X_blk` (must be 0) and the deviation of
    /// its top-right block from `T2`.
    pub a_off_pattern: f64,
    /// Top block of `Y_blkᵀ B`.
    pub b_off_pattern: f64,
    /// Non-output block of `C X_blk`.
    pub c_off_pattern: f64,
    /// Relative gap between `(Y_blkᵀ E X_blk)⁻¹ Y_blkᵀ A X_blk` and the
    /// standardized linearization of the reduced quintuplet. `None` if the
    /// reduced mass matrix is singular.
    pub linearization_mismatch: Option<f64>,
}

impl StructureReport {
    /// Largest entry that should be structurally zero.
    pub fn max_off_pattern(&self) -> f64 {
        self.e_off_pattern
            .max(self.a_off_pattern)
            .max(self.b_off_pattern)
            .max(self.c_off_pattern)
    }
}

pub fn verify_structure_conditions(proj: &ProjectionPair, sos: &SecondOrderSystem) -> StructureReport {
    let n = sos.states();
    let k = proj.order();
    let (m, p) = (sos.input().ncols(), sos.output().nrows());
    let zn = DMatrix::<f64>::zeros(n, n);
    let zk = DMatrix::<f64>::zeros(n, k);
    let ident = DMatrix::<f64>::identity(n, n);

    let e = block2x2(&ident, &zn, &zn, sos.mass());
    let a = block2x2(&zn, &ident, &(-sos.stiffness()), &(-sos.damping()));
    let b = linalg::vstack(&DMatrix::zeros(n, m), sos.input());
    let c = if sos.domain().is_discrete() {
        linalg::hstack(&DMatrix::zeros(p, n), sos.output())
    } else {
        linalg::hstack(sos.output(), &DMatrix::zeros(p, n))
    };
    let x_blk = block2x2(&proj.x, &zk, &zk, &proj.x);
    let y_blk = block2x2(&proj.y, &zk, &zk, &proj.y);

    let er = y_blk.tr_mul(&(&e * &x_blk));
    let ar = y_blk.tr_mul(&(&a * &x_blk));
    let br = y_blk.tr_mul(&b);
    let cr = &c * &x_blk;

    let t1 = er.view((0, 0), (k, k)).into_owned();
    let t2 = ar.view((0, k), (k, k)).into_owned();
    let e_off = max_abs(&er.view((0, k), (k, k)).into_owned())
        .max(max_abs(&er.view((k, 0), (k, k)).into_owned()));
    let a_off = max_abs(&ar.view((0, 0), (k, k)).into_owned()).max(max_abs(&(&t2 - &t1)));
    let b_off = max_abs(&br.rows(0, k).into_owned());
    let c_off = if sos.domain().is_discrete() {
        max_abs(&cr.columns(0, k).into_owned())
    } else {
        max_abs(&cr.columns(k, k).into_owned())
    };

    let linearization_mismatch = reduce(sos, proj)
        .and_then(|red| red.linearize())
        .ok()
        .and_then(|lin| {
            let standardized = er.clone().lu().solve(&ar)?;
            let scale = max_abs(&lin.a).max(f64::MIN_POSITIVE);
            Some(max_abs(&(standardized - &lin.a)) / scale)
        });

    StructureReport {
        t1_deviation: max_abs(&(&t1 - DMatrix::identity(k, k))),
        t1_condition: condition(&t1),
        t2_condition: condition(&t2),
        e_off_pattern: e_off,
        a_off_pattern: a_off,
        b_off_pattern: b_off,
        c_off_pattern: c_off,
        linearization_mismatch,
    }
}

fn condition(a: &DMatrix<f64>) -> f64 {
    match thin_svd(a) {
        Ok(svd) => {
            let last = svd.s[svd.s.len() - 1];
            if last > 0.0 {
                svd.s[0] / last
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian, orthonormalize};
    use crate::model::{Domain, TransferFunction};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, domain: Domain, seed: u64) -> SecondOrderSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SecondOrderSystem::new(
            DMatrix::identity(n, n) * 2.0 + gaussian(n, n, &mut rng) * 0.1,
            gaussian(n, n, &mut rng),
            gaussian(n, n, &mut rng),
            gaussian(n, 2, &mut rng),
            gaussian(2, n, &mut rng),
            domain,
        )
        .unwrap()
    }

    #[test]
    fn identical_orthonormal_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = orthonormalize(&gaussian(8, 3, &mut rng)).unwrap();
        let proj = build_projection(&s, &s, DEFAULT_RANK_TOL).unwrap();
        assert!(proj.sigma.iter().all(|x| (x - 1.0).abs() < 1e-14));
        assert!(proj.biorthogonality_error() < 1e-14);
        assert!(linalg::max_abs(&(proj.x - proj.y)) < 1e-14);
    }

    #[test]
    fn random_pair_is_biorthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = gaussian(20, 5, &mut rng);
        let r = gaussian(20, 5, &mut rng);
        let proj = build_projection(&s, &r, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(proj.order(), 5);
        assert!(proj.biorthogonality_error() < 1e-10);
        for w in proj.sigma.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn duplicated_column_shrinks_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = gaussian(10, 4, &mut rng);
        let c0 = s.column(0).clone_owned();
        s.set_column(3, &c0);
        let r = gaussian(10, 4, &mut rng);
        let proj = build_projection(&s, &r, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(proj.order(), 3);
        assert_eq!(proj.warnings.len(), 1);
        assert!(proj.biorthogonality_error() < 1e-10);
    }

    #[test]
    fn orthogonal_subspaces_collapse() {
        let e = DMatrix::<f64>::identity(4, 4);
        let s = e.columns(0, 2).into_owned();
        let r = e.columns(2, 2).into_owned();
        assert!(matches!(build_projection(&s, &r, DEFAULT_RANK_TOL), Err(Error::RankCollapse(_))));
    }

    #[test]
    fn identity_projection_keeps_system() {
        let sys = random_system(4, Domain::Discrete { h: 0.1 }, 4);
        let eye = DMatrix::identity(4, 4);
        let proj = build_projection(&eye, &eye, DEFAULT_RANK_TOL).unwrap();
        let red = reduce(&sys, &proj).unwrap();
        assert_eq!(red.domain(), Domain::Discrete { h: 0.1 });
        assert!(max_abs(&(red.mass() - sys.mass())) < 1e-14);
        assert!(max_abs(&(red.stiffness() - sys.stiffness())) < 1e-14);
        assert!(max_abs(&(red.output() - sys.output())) < 1e-14);
    }

    #[test]
    fn structure_report_on_random_projection() {
        for domain in [Domain::Continuous, Domain::Discrete { h: 0.5 }] {
            let sys = random_system(9, domain, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let proj = build_projection(&gaussian(9, 3, &mut rng), &gaussian(9, 3, &mut rng), DEFAULT_RANK_TOL)
                .unwrap();
            let rep = verify_structure_conditions(&proj, &sys);
            assert!(rep.t1_deviation < 1e-10);
            assert!(rep.max_off_pattern() < 1e-10, "{rep:?}");
            assert!(rep.b_off_pattern < 1e-12);
            assert!(rep.linearization_mismatch.unwrap() < 1e-8, "{rep:?}");
        }
    }

    #[test]
    fn reduced_transfer_equals_block_projected_descriptor() {
        let sys = random_system(7, Domain::Continuous, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let proj = build_projection(&gaussian(7, 3, &mut rng), &gaussian(7, 3, &mut rng), DEFAULT_RANK_TOL)
            .unwrap();
        let red = reduce(&sys, &proj).unwrap();
        // (Y_blkᵀ E X_blk, Y_blkᵀ A X_blk, Y_blkᵀ B, C X_blk) collapses to
        // the blocks below; its transfer is G X (s² YᵀMX + s YᵀDX + YᵀKX)⁻¹ YᵀF.
        let (x, y) = (&proj.x, &proj.y);
        for w in [0.1, 1.0, 3.0] {
            let s = Complex64::new(0.2, w);
            let to_c = |a: &DMatrix<f64>| a.map(|v| Complex64::new(v, 0.0));
            let pencil = to_c(&y.tr_mul(&(sys.mass() * x))) * (s * s)
                + to_c(&y.tr_mul(&(sys.damping() * x))) * s
                + to_c(&y.tr_mul(&(sys.stiffness() * x)));
            let t = to_c(&(sys.output() * x))
                * pencil.lu().solve(&to_c(&y.tr_mul(sys.input()))).unwrap();
            let t_red = red.transfer(s).unwrap();
            let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = (t - t_red).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8 * scale);
        }
    }
}
