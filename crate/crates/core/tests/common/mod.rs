//! Reference computations shared by the integration and acceptance tests.
//! They deliberately avoid the crate's own linear-algebra helpers: the
//! first-order state matrix is formed with an explicit inverse and SVDs
//! are sorted and sign-fixed here.

#![allow(dead_code)]

use morso::linalg::gaussian;
use morso::model::{Domain, SecondOrderSystem};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Sorted {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// Thin SVD, singular values descending, each right singular vector
/// scaled so its entry of largest magnitude is positive.
pub fn sorted_svd(a: &DMatrix<f64>) -> Sorted {
    let svd = a.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let k = idx.len();
    let mut uu = DMatrix::zeros(u.nrows(), k);
    let mut vv = DMatrix::zeros(vt.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (col, &i) in idx.iter().enumerate() {
        let mut vc = vt.row(i).transpose();
        let mut uc = u.column(i).clone_owned();
        let mut big = 0.0f64;
        let mut sign = 1.0;
        for x in vc.iter() {
            if x.abs() > big {
                big = x.abs();
                sign = x.signum();
            }
        }
        vc *= sign;
        uc *= sign;
        uu.set_column(col, &uc);
        vv.set_column(col, &vc);
        s.push(svd.singular_values[i]);
    }
    Sorted { u: uu, s, v: vv }
}

/// `A`, `B`, `C` of the standardized linearization with state
/// `[q(i-1); q(i)]`, built from `M⁻¹` explicitly.
pub struct Linearized {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

pub fn linearize_explicit(sys: &SecondOrderSystem) -> Linearized {
    let n = sys.states();
    let m = sys.input().ncols();
    let p = sys.output().nrows();
    let minv = sys.mass().clone().try_inverse().expect("invertible mass");
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
    }
    a.view_mut((n, 0), (n, n)).copy_from(&(-(&minv * sys.stiffness())));
    a.view_mut((n, n), (n, n)).copy_from(&(-(&minv * sys.damping())));
    let mut b = DMatrix::zeros(2 * n, m);
    b.view_mut((n, 0), (n, m)).copy_from(&(&minv * sys.input()));
    let mut c = DMatrix::zeros(p, 2 * n);
    c.view_mut((0, n), (p, n)).copy_from(sys.output());
    Linearized { a, b, c }
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// First-order low-rank Gramian step: `S ← [A S, B] V(:, 1:n)`,
/// `R ← [Aᵀ R, Cᵀ] V_o(:, 1:n)`.
pub fn rlrg_step(lin: &Linearized, s: &DMatrix<f64>, r: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = s.ncols();
    let m1 = hcat(&(&lin.a * s), &lin.b);
    let m2 = hcat(&(lin.a.transpose() * r), &lin.c.transpose());
    let vc = sorted_svd(&m1).v.columns(0, n).into_owned();
    let vo = sorted_svd(&m2).v.columns(0, n).into_owned();
    (&m1 * vc, &m2 * vo)
}

/// First-order low-rank Hankel step from the SVD of `M2ᵀ M1 = U Σ Vᵀ`:
/// `S ← M1 V(:, 1:n)`, `R ← M2 U(:, 1:n)`.
pub fn rlrh_step(lin: &Linearized, s: &DMatrix<f64>, r: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = s.ncols();
    let m1 = hcat(&(&lin.a * s), &lin.b);
    let m2 = hcat(&(lin.a.transpose() * r), &lin.c.transpose());
    let svd = sorted_svd(&(m2.transpose() * &m1));
    (&m1 * svd.v.columns(0, n), &m2 * svd.u.columns(0, n))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest principal angle via `arccos` of the smallest cosine, with
/// Gram-Schmidt bases. Adequate away from zero angles.
pub fn largest_angle_acos(p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let qp = p.clone().qr().q();
    let qq = q.clone().qr().q();
    let s = (qp.transpose() * qq).singular_values();
    let smallest = s.iter().cloned().fold(f64::INFINITY, f64::min);
    smallest.clamp(-1.0, 1.0).acos()
}

pub fn symmetric(n: usize, rng: &mut ChaCha8Rng, shift: f64) -> DMatrix<f64> {
    let g = gaussian(n, n, rng);
    (&g * g.transpose()) / n as f64 + DMatrix::identity(n, n) * shift
}

/// Continuous system with symmetric positive definite `M`, `D`, `K`.
pub fn random_continuous(n: usize, io: usize, seed: u64) -> SecondOrderSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = symmetric(n, &mut rng, 1.0);
    let d = symmetric(n, &mut rng, 0.1) * 0.5;
    let k = symmetric(n, &mut rng, 0.5);
    let f = gaussian(n, io, &mut rng);
    let g = gaussian(io, n, &mut rng);
    SecondOrderSystem::new(m, d, k, f, g, Domain::Continuous).unwrap()
}
