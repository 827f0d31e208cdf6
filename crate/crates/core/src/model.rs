//! Second-order systems `M q'' + D q' + K q = F u, y = G q`, their
//! difference-equation counterparts `M q_{i+1} + D q_i + K q_{i-1} = F u_i`,
//! and the standardized first-order linearization of both.

use std::fmt;

use nalgebra::{DMatrix, Dyn, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Condition estimate of `M` above which a warning is attached to the system.
pub const MASS_CONDITION_WARNING: f64 = 1e12;

/// Eigenvalues within this distance of the stability boundary are marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Continuous,
    /// Difference system with step `h` (seconds).
    Discrete { h: f64 },
}

impl Domain {
    pub fn is_discrete(&self) -> bool {
        matches!(self, Domain::Discrete { .. })
    }

    pub fn step(&self) -> Option<f64> {
        match *self {
            Domain::Discrete { h } => Some(h),
            Domain::Continuous => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Continuous => write!(f, "continuous"),
            Domain::Discrete { h } => write!(f, "discrete(h={h:e})"),
        }
    }
}

/// Anything with a matrix-valued transfer function.
pub trait TransferFunction {
    fn domain(&self) -> Domain;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Transfer matrix (`p x m`) at `s` (continuous) or `z` (discrete).
    fn transfer(&self, point: Complex64) -> Result<DMatrix<Complex64>>;
}

/// The quintuplet `{M, D, K, F, G}` with a domain tag.
///
/// Immutable after construction; the LU factorization of `M` is computed
/// once and reused for every `M^{-1}` application.
#[derive(Clone)]
pub struct SecondOrderSystem {
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    input: DMatrix<f64>,
    output: DMatrix<f64>,
    domain: Domain,
    mass_lu: LU<f64, Dyn, Dyn>,
    mass_condition: f64,
    warnings: Vec<String>,
}

impl fmt::Debug for SecondOrderSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SecondOrderSystem")
            .field("states", &self.states())
            .field("inputs", &self.input_dim())
            .field("outputs", &self.output_dim())
            .field("domain", &self.domain)
            .field("mass_condition", &self.mass_condition)
            .finish()
    }
}

impl SecondOrderSystem {
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        input: DMatrix<f64>,
        output: DMatrix<f64>,
        domain: Domain,
    ) -> Result<Self> {
        let n = mass.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("N must be at least 1".into()));
        }
        for (name, mat) in [("M", &mass), ("D", &damping), ("K", &stiffness)] {
            if mat.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        if input.nrows() != n || input.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "F is {}x{}, expected {n}xm with m >= 1",
                input.nrows(),
                input.ncols()
            )));
        }
        if output.ncols() != n || output.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "G is {}x{}, expected px{n} with p >= 1",
                output.nrows(),
                output.ncols()
            )));
        }
        for (name, mat) in [("M", &mass), ("D", &damping), ("K", &stiffness), ("F", &input), ("G", &output)] {
            if mat.iter().any(|x| !x.is_finite()) {
                return Err(Error::BadParameters(format!("{name} has non-finite entries")));
            }
        }
        if let Domain::Discrete { h } = domain {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::NonPositiveStep(h));
            }
        }
        let (mass_lu, mass_condition) = factor_mass(&mass)?;
        let mut warnings = Vec::new();
        if mass_condition > MASS_CONDITION_WARNING {
            let msg = format!("mass matrix condition estimate {mass_condition:.3e} exceeds 1e12");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(Self {
            mass,
            damping,
            stiffness,
            input,
            output,
            domain,
            mass_lu,
            mass_condition,
            warnings,
        })
    }

    /// Single-degree-of-freedom SISO system, mostly for examples.
    pub fn scalar(m: f64, d: f64, k: f64, f: f64, g: f64, domain: Domain) -> Result<Self> {
        let s = |x: f64| DMatrix::from_element(1, 1, x);
        Self::new(s(m), s(d), s(k), s(f), s(g), domain)
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }
    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }
    pub fn input(&self) -> &DMatrix<f64> {
        &self.input
    }
    pub fn output(&self) -> &DMatrix<f64> {
        &self.output
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Number of generalized coordinates `N`.
    pub fn states(&self) -> usize {
        self.mass.nrows()
    }

    /// 1-norm condition estimate of `M`.
    pub fn mass_condition(&self) -> f64 {
        self.mass_condition
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `M^{-1} rhs` through the cached factorization.
    pub fn solve_mass(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.mass_lu.solve(rhs).ok_or(Error::SingularMass)
    }

    /// `P(s) = M s^2 + D s + K` or `P(z) = M z + D + K z^{-1}`.
    pub fn characteristic_matrix(&self, point: Complex64) -> Result<DMatrix<Complex64>> {
        let (a, b, c) = match self.domain {
            Domain::Continuous => (point * point, point, Complex64::new(1.0, 0.0)),
            Domain::Discrete { .. } => {
                if point.norm() == 0.0 {
                    return Err(Error::ZeroPoint);
                }
                (point, Complex64::new(1.0, 0.0), point.inv())
            }
        };
        let n = self.states();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            a * self.mass[(i, j)] + b * self.damping[(i, j)] + c * self.stiffness[(i, j)]
        }))
    }

    /// Standardized first-order form with `W = I`.
    ///
    /// Continuous: state `[q; q']`, `C = [G, 0]`. Discrete: state
    /// `[q_{i-1}; q_i]`, `C = [0, G]`, so that `C (zI - A)^{-1} B` equals
    /// `G P(z)^{-1} F` without an extra delay.
    pub fn linearize(&self) -> Result<FirstOrderSystem> {
        let n = self.states();
        let m = self.input_dim();
        let p = self.output_dim();
        let minv_k = self.solve_mass(&self.stiffness)?;
        let minv_d = self.solve_mass(&self.damping)?;
        let minv_f = self.solve_mass(&self.input)?;

        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        a.view_mut((n, 0), (n, n)).copy_from(&(-minv_k));
        a.view_mut((n, n), (n, n)).copy_from(&(-minv_d));

        let mut b = DMatrix::zeros(2 * n, m);
        b.view_mut((n, 0), (n, m)).copy_from(&minv_f);

        let mut c = DMatrix::zeros(p, 2 * n);
        let offset = if self.domain.is_discrete() { n } else { 0 };
        c.view_mut((0, offset), (p, n)).copy_from(&self.output);

        FirstOrderSystem::new(a, b, c, self.domain)
    }

    /// Spectrum of the linearization and its position relative to the
    /// stability region (open left half-plane or open unit disk).
    pub fn stability_report(&self) -> Result<StabilityReport> {
        let fos = self.linearize()?;
        StabilityReport::from_spectrum(linalg::eigenvalues(&fos.a)?, self.domain)
    }
}

impl TransferFunction for SecondOrderSystem {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn input_dim(&self) -> usize {
        self.input.ncols()
    }
    fn output_dim(&self) -> usize {
        self.output.nrows()
    }

    /// `G P(point)^{-1} F`.
    fn transfer(&self, point: Complex64) -> Result<DMatrix<Complex64>> {
        let p = self.characteristic_matrix(point)?;
        let rhs = self.input.map(|x| Complex64::new(x, 0.0));
        let sol = complex_solve(p, &rhs, point)?;
        Ok(self.output.map(|x| Complex64::new(x, 0.0)) * sol)
    }
}

/// Standardized state-space model `x' = A x + B u, y = C x` (or its
/// difference analogue).
#[derive(Debug, Clone)]
pub struct FirstOrderSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub domain: Domain,
}

impl FirstOrderSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, domain: Domain) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { a, b, c, domain })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn stability_report(&self) -> Result<StabilityReport> {
        StabilityReport::from_spectrum(linalg::eigenvalues(&self.a)?, self.domain)
    }
}

impl TransferFunction for FirstOrderSystem {
    fn domain(&self) -> Domain {
        self.domain
    }
    fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// `C (point I - A)^{-1} B`.
    fn transfer(&self, point: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.states();
        let resolvent = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { point } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = self.b.map(|x| Complex64::new(x, 0.0));
        let sol = complex_solve(resolvent, &rhs, point)?;
        Ok(self.c.map(|x| Complex64::new(x, 0.0)) * sol)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub is_stable: bool,
    /// Some eigenvalue lies within `MARGINAL_TOLERANCE` of the boundary.
    pub marginal: bool,
    /// `-max Re(λ)` (continuous) or `1 - max |λ|` (discrete).
    pub margin: f64,
    #[serde(skip)]
    pub spectrum: Vec<Complex64>,
}

impl StabilityReport {
    pub fn from_spectrum(spectrum: Vec<Complex64>, domain: Domain) -> Result<Self> {
        let margin = match domain {
            Domain::Continuous => -spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
            Domain::Discrete { .. } => {
                1.0 - spectrum.iter().map(|z| z.norm()).fold(f64::NEG_INFINITY, f64::max)
            }
        };
        let marginal = margin.abs() < MARGINAL_TOLERANCE;
        Ok(Self {
            is_stable: margin > 0.0 && !marginal,
            marginal,
            margin,
            spectrum,
        })
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn factor_mass(mass: &DMatrix<f64>) -> Result<(LU<f64, Dyn, Dyn>, f64)> {
    if mass.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularMass);
    }
    let lu = LU::new(mass.clone());
    let inv = lu.try_inverse().ok_or(Error::SingularMass)?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularMass);
    }
    let cond = one_norm(mass) * one_norm(&inv);
    if !cond.is_finite() {
        return Err(Error::SingularMass);
    }
    Ok((lu, cond))
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU solve that treats a pivot ratio below machine epsilon as singular.
fn complex_solve(
    lhs: DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    point: Complex64,
) -> Result<DMatrix<Complex64>> {
    let lu = LU::new(lhs);
    let u = lu.u();
    let pivots: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let largest = pivots.iter().copied().fold(0.0, f64::max);
    let smallest = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || smallest <= f64::EPSILON * largest {
        return Err(Error::SingularAtPoint(point));
    }
    let sol = lu.solve(rhs).ok_or(Error::SingularAtPoint(point))?;
    if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularAtPoint(point));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linearize_unit_oscillator() {
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 1.0, 1.0, 1.0, Domain::Continuous).unwrap();
        let fos = sys.linearize().unwrap();
        assert_eq!(fos.a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        assert_eq!(fos.b, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(fos.c, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    }

    #[test]
    fn linearize_scaled_mass() {
        let sys = SecondOrderSystem::scalar(2.0, 3.0, 4.0, 1.0, 1.0, Domain::Continuous).unwrap();
        let fos = sys.linearize().unwrap();
        assert_eq!(fos.a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -1.5]));
        assert_eq!(fos.b, DMatrix::from_row_slice(2, 1, &[0.0, 0.5]));
        assert_eq!(fos.c, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    }

    #[test]
    fn discrete_linearization_reads_current_position() {
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 0.25, 1.0, 1.0, Domain::Discrete { h: 0.1 })
            .unwrap();
        let fos = sys.linearize().unwrap();
        assert_eq!(fos.c, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
    }

    fn random_system(n: usize, m: usize, p: usize, domain: Domain, seed: u64) -> SecondOrderSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mass = DMatrix::identity(n, n) * 3.0 + gaussian(n, n, &mut rng) * 0.3;
        SecondOrderSystem::new(
            mass,
            gaussian(n, n, &mut rng),
            gaussian(n, n, &mut rng),
            gaussian(n, m, &mut rng),
            gaussian(p, n, &mut rng),
            domain,
        )
        .unwrap()
    }

    #[test]
    fn linearization_preserves_transfer() {
        for (seed, domain) in [(1, Domain::Continuous), (2, Domain::Discrete { h: 0.05 })] {
            let sys = random_system(5, 2, 3, domain, seed);
            let fos = sys.linearize().unwrap();
            assert_eq!(fos.a.shape(), (10, 10));
            assert_eq!(fos.b.shape(), (10, 2));
            assert_eq!(fos.c.shape(), (3, 10));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            for _ in 0..20 {
                let pt = c(rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0));
                let t2 = sys.transfer(pt).unwrap();
                let t1 = fos.transfer(pt).unwrap();
                let scale = t2.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let err = (t1 - t2).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err <= 1e-10 * scale, "err {err} scale {scale}");
            }
        }
    }

    #[test]
    fn transfer_examples() {
        let sys = SecondOrderSystem::scalar(1.0, 1.0, 1.0, 1.0, 1.0, Domain::Continuous).unwrap();
        assert!((sys.transfer(c(0.0, 0.0)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let t = sys.transfer(c(0.0, 1.0)).unwrap()[(0, 0)];
        assert!((t - c(0.0, -1.0)).norm() < 1e-15);
        assert!((t.norm() - 1.0).abs() < 1e-15);

        let disc = SecondOrderSystem::scalar(1.0, 0.0, 0.25, 1.0, 1.0, Domain::Discrete { h: 1.0 })
            .unwrap();
        assert!((disc.transfer(c(1.0, 0.0)).unwrap()[(0, 0)] - c(0.8, 0.0)).norm() < 1e-15);
        assert!(matches!(disc.transfer(c(0.0, 0.0)), Err(Error::ZeroPoint)));
    }

    #[test]
    fn transfer_at_characteristic_frequency_fails() {
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 1.0, 1.0, 1.0, Domain::Continuous).unwrap();
        assert!(matches!(sys.transfer(c(0.0, 1.0)), Err(Error::SingularAtPoint(_))));
    }

    #[test]
    fn singular_mass_rejected() {
        let z = DMatrix::zeros(2, 2);
        let err = SecondOrderSystem::new(
            z.clone(),
            z.clone(),
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(1, 2, 1.0),
            Domain::Continuous,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularMass));
    }

    #[test]
    fn ill_conditioned_mass_warns() {
        let mass = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-13]));
        let sys = SecondOrderSystem::new(
            mass,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(1, 2, 1.0),
            Domain::Continuous,
        )
        .unwrap();
        assert_eq!(sys.warnings().len(), 1);
    }

    #[test]
    fn dimension_checks() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let err = SecondOrderSystem::new(
            i2.clone(),
            i2.clone(),
            DMatrix::identity(3, 3),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(1, 2, 1.0),
            Domain::Continuous,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let err = SecondOrderSystem::scalar(1.0, 0.0, 1.0, 1.0, 1.0, Domain::Discrete { h: 0.0 });
        assert!(matches!(err, Err(Error::NonPositiveStep(_))));
    }

    #[test]
    fn stability_examples() {
        let damped = SecondOrderSystem::scalar(1.0, 1.0, 1.0, 1.0, 1.0, Domain::Continuous).unwrap();
        let r = damped.stability_report().unwrap();
        assert!(r.is_stable && !r.marginal);
        assert!((r.margin - 0.5).abs() < 1e-12);

        let undamped = SecondOrderSystem::scalar(1.0, 0.0, 1.0, 1.0, 1.0, Domain::Continuous).unwrap();
        let r = undamped.stability_report().unwrap();
        assert!(!r.is_stable && r.marginal);

        let disc = SecondOrderSystem::scalar(1.0, 0.0, 0.25, 1.0, 1.0, Domain::Discrete { h: 1.0 })
            .unwrap();
        let r = disc.stability_report().unwrap();
        assert!(r.is_stable);
        assert!((r.margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stability_matches_closed_form_roots() {
        // Scalar systems: roots of m s^2 + d s + k by the quadratic formula.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.random_range(0.5..2.0);
            let d = rng.random_range(-1.0..2.0);
            let k = rng.random_range(0.1..3.0);
            let disc = Complex64::new(d * d - 4.0 * m * k, 0.0).sqrt();
            let r1 = (-d + disc) / (2.0 * m);
            let r2 = (-d - disc) / (2.0 * m);
            let max_re = r1.re.max(r2.re);
            let sys = SecondOrderSystem::scalar(m, d, k, 1.0, 1.0, Domain::Continuous).unwrap();
            let rep = sys.stability_report().unwrap();
            assert!((rep.margin + max_re).abs() < 1e-10);
            assert_eq!(rep.is_stable, max_re < -MARGINAL_TOLERANCE);
        }
    }
}
