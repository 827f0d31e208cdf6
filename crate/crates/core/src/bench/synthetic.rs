//! Self-contained test systems.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::gaussian;
use crate::model::{Domain, SecondOrderSystem};

/// Fixed-fixed mass-spring-damper chain with proportional damping
/// `D = (c/k) K`, force on the first mass and the last position as output.
/// With a seed, each mass is scaled by an independent factor in `[0.9, 1.1]`.
pub fn generate_msd_chain(n: usize, k: f64, c: f64, m0: f64, seed: Option<u64>) -> Result<SecondOrderSystem> {
    if n < 2 {
        return Err(Error::BadParameters(format!("chain needs N >= 2 masses, got {n}")));
    }
    if !(k > 0.0 && k.is_finite()) || !(c >= 0.0 && c.is_finite()) || !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::BadParameters(format!(
            "need k > 0, c >= 0, m0 > 0; got k = {k}, c = {c}, m0 = {m0}"
        )));
    }
    let mut mass = DMatrix::identity(n, n) * m0;
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n {
            mass[(i, i)] *= rng.random_range(0.9..=1.1);
        }
    }
    let mut stiff = DMatrix::zeros(n, n);
    for i in 0..n {
        stiff[(i, i)] = 2.0 * k;
        if i + 1 < n {
            stiff[(i, i + 1)] = -k;
            stiff[(i + 1, i)] = -k;
        }
    }
    let damp = &stiff * (c / k);
    let mut f = DMatrix::zeros(n, 1);
    f[(0, 0)] = 1.0;
    let mut g = DMatrix::zeros(1, n);
    g[(0, n - 1)] = 1.0;
    SecondOrderSystem::new(mass, damp, stiff, f, g, Domain::Continuous)
}

/// Random discrete system whose characteristic roots have modulus at most
/// `rho` (the largest exactly `rho`, up to rounding).
///
/// Scaling `D` by `c` and `K` by `c²` scales every root of
/// `det(M z² + D z + K)` by `c`.
pub fn random_stable_discrete(
    states: usize,
    inputs: usize,
    outputs: usize,
    rho: f64,
    h: f64,
    seed: u64,
) -> Result<SecondOrderSystem> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::BadParameters(format!("spectral radius {rho} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (states as f64).sqrt();
    let mass = DMatrix::identity(states, states) + gaussian(states, states, &mut rng) * (0.2 * scale);
    let damp = gaussian(states, states, &mut rng) * scale;
    let stiff = gaussian(states, states, &mut rng) * scale;
    let f = gaussian(states, inputs, &mut rng);
    let g = gaussian(outputs, states, &mut rng);
    let domain = Domain::Discrete { h };
    let probe = SecondOrderSystem::new(mass.clone(), damp.clone(), stiff.clone(), f.clone(), g.clone(), domain)?;
    let radius = probe.stability_report()?.spectral_radius();
    if !(radius > 0.0) {
        return Err(Error::BadParameters("degenerate random system".into()));
    }
    let c = rho / radius;
    SecondOrderSystem::new(mass, damp * c, stiff * (c * c), f, g, domain)
}
