mod common;

use common::{linearize_explicit, random_continuous};
use morso::bench::random_stable_discrete;
use morso::model::{Domain, SecondOrderSystem, TransferFunction};
use morso::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn resolvent(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, z: Complex64) -> DMatrix<Complex64> {
    let n = a.nrows();
    let zi = DMatrix::<Complex64>::identity(n, n) * z;
    let lhs = zi - a.map(|x| Complex64::new(x, 0.0));
    let x = lhs.lu().solve(&b.map(|x| Complex64::new(x, 0.0))).unwrap();
    c.map(|x| Complex64::new(x, 0.0)) * x
}

fn rel_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let num = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let den = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    num / den.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn discrete_transfer_matches_first_order_resolvent(
        n in 2usize..8, io in 1usize..3, rho in 0.3f64..0.95, seed in 0u64..5000, theta in 0.01f64..3.1,
    ) {
        let sys = random_stable_discrete(n, io, io + 1, rho, 0.1, seed).unwrap();
        let lin = linearize_explicit(&sys);
        let z = Complex64::from_polar(1.0, theta);
        let direct = sys.transfer(z).unwrap();
        prop_assert_eq!(direct.shape(), (io + 1, io));
        prop_assert!(rel_diff(&direct, &resolvent(&lin.a, &lin.b, &lin.c, z)) < 1e-10);
        let fos = sys.linearize().unwrap();
        prop_assert!(rel_diff(&direct, &fos.transfer(z).unwrap()) < 1e-10);
    }

    #[test]
    fn continuous_transfer_matches_first_order_resolvent(
        n in 2usize..8, io in 1usize..3, seed in 0u64..5000, lw in -2.0f64..2.0,
    ) {
        let sys = random_continuous(n, io, seed);
        let minv = sys.mass().clone().try_inverse().unwrap();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        a.view_mut((n, 0), (n, n)).copy_from(&(-(&minv * sys.stiffness())));
        a.view_mut((n, n), (n, n)).copy_from(&(-(&minv * sys.damping())));
        let mut b = DMatrix::zeros(2 * n, io);
        b.view_mut((n, 0), (n, io)).copy_from(&(&minv * sys.input()));
        let mut c = DMatrix::zeros(io, 2 * n);
        c.view_mut((0, 0), (io, n)).copy_from(sys.output());
        let s = Complex64::new(0.0, 10f64.powf(lw));
        prop_assert!(rel_diff(&sys.transfer(s).unwrap(), &resolvent(&a, &b, &c, s)) < 1e-10);
    }
}

#[test]
fn stability_agrees_with_linearization() {
    for seed in 0..10 {
        let sys = random_stable_discrete(6, 1, 1, 0.9, 0.1, seed).unwrap();
        let rep = sys.stability_report().unwrap();
        assert!(rep.is_stable);
        assert!((rep.spectral_radius() - 0.9).abs() < 1e-8, "{}", rep.spectral_radius());
        let lin = linearize_explicit(&sys);
        let eig = lin.a.complex_eigenvalues();
        let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((rho - rep.spectral_radius()).abs() < 1e-8);
    }
    // z² + 1.44 = 0 has roots of modulus 1.2.
    let unstable = SecondOrderSystem::scalar(1.0, 0.0, 1.44, 1.0, 1.0, Domain::Discrete { h: 1.0 }).unwrap();
    let rep = unstable.stability_report().unwrap();
    assert!(!rep.is_stable);
    assert!((rep.spectral_radius() - 1.2).abs() < 1e-12);
}

#[test]
fn construction_checks_shapes_and_values() {
    let i3 = DMatrix::<f64>::identity(3, 3);
    let f = DMatrix::zeros(3, 1);
    let g = DMatrix::zeros(1, 3);
    let bad_k = DMatrix::zeros(2, 2);
    assert!(matches!(
        SecondOrderSystem::new(i3.clone(), i3.clone(), bad_k, f.clone(), g.clone(), Domain::Continuous),
        Err(Error::DimensionMismatch(_))
    ));
    let mut nan = i3.clone();
    nan[(0, 1)] = f64::NAN;
    assert!(matches!(
        SecondOrderSystem::new(i3.clone(), nan, i3.clone(), f.clone(), g.clone(), Domain::Continuous),
        Err(Error::BadParameters(_))
    ));
    assert!(matches!(
        SecondOrderSystem::new(DMatrix::zeros(3, 3), i3.clone(), i3.clone(), f, g, Domain::Continuous),
        Err(Error::SingularMass)
    ));
}

#[test]
fn scalar_oscillator_matches_closed_form() {
    let sys = SecondOrderSystem::scalar(2.0, 0.5, 8.0, 1.0, 3.0, Domain::Continuous).unwrap();
    let s = Complex64::new(0.0, 1.7);
    let expect = 3.0 / (s * s * 2.0 + s * 0.5 + 8.0);
    assert!((sys.transfer(s).unwrap()[(0, 0)] - expect).norm() < 1e-14);
}
