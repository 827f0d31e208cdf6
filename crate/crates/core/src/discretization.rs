//! Difference schemes turning `M q'' + D q' + K q = F u` into
//! `M̄ q_{i+1} + D̄ q_i + K̄ q_{i-1} = F u_i`.
//!
//! All three schemes use the central second difference
//! `(q_{i+1} - 2 q_i + q_{i-1}) / h²` and differ in the velocity stencil:
//!
//! | scheme     | velocity                       | M̄                 | D̄                      | K̄                 |
//! |------------|--------------------------------|--------------------|-------------------------|--------------------|
//! | `Forward`  | `(q_{i+1} - q_i) / h`          | `(M + hD) / h²`    | `(h²K - 2M - hD) / h²`  | `M / h²`           |
//! | `Backward` | `(q_i - q_{i-1}) / h`          | `M / h²`           | `(h²K - 2M + hD) / h²`  | `(M - hD) / h²`    |
//! | `Central`  | `(q_{i+1} - q_{i-1}) / (2h)`   | `(2M + hD) / 2h²`  | `(h²K - 2M) / h²`       | `(2M - hD) / 2h²`  |
//!
//! In every row `M̄ + D̄ + K̄ = K`, so the DC gain is preserved exactly.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, SecondOrderSystem, TransferFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    ForwardVelocity,
    BackwardVelocity,
    CentralVelocity,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::ForwardVelocity,
        Scheme::BackwardVelocity,
        Scheme::CentralVelocity,
    ];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ForwardVelocity => "forward",
            Scheme::BackwardVelocity => "backward",
            Scheme::CentralVelocity => "central",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward" | "forwardvelocity" => Ok(Scheme::ForwardVelocity),
            "backward" | "backwardvelocity" => Ok(Scheme::BackwardVelocity),
            "central" | "centralvelocity" => Ok(Scheme::CentralVelocity),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Difference-system coefficients `(M̄, D̄, K̄)` for one scheme.
pub fn difference_coefficients(
    mass: &DMatrix<f64>,
    damping: &DMatrix<f64>,
    stiffness: &DMatrix<f64>,
    h: f64,
    scheme: Scheme,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let h2 = h * h;
    match scheme {
        Scheme::ForwardVelocity => (
            (mass + damping * h) / h2,
            (stiffness * h2 - mass * 2.0 - damping * h) / h2,
            mass / h2,
        ),
        Scheme::BackwardVelocity => (
            mass / h2,
            (stiffness * h2 - mass * 2.0 + damping * h) / h2,
            (mass - damping * h) / h2,
        ),
        Scheme::CentralVelocity => (
            (mass * 2.0 + damping * h) / (2.0 * h2),
            (stiffness * h2 - mass * 2.0) / h2,
            (mass * 2.0 - damping * h) / (2.0 * h2),
        ),
    }
}

pub fn discretize(sos: &SecondOrderSystem, h: f64, scheme: Scheme) -> Result<SecondOrderSystem> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::NonPositiveStep(h));
    }
    if sos.domain().is_discrete() {
        return Err(Error::DomainMismatch("discretize expects a continuous system".into()));
    }
    let (mb, db, kb) = difference_coefficients(sos.mass(), sos.damping(), sos.stiffness(), h, scheme);
    SecondOrderSystem::new(
        mb,
        db,
        kb,
        sos.input().clone(),
        sos.output().clone(),
        Domain::Discrete { h },
    )
}

/// Recovers the continuous quintuplet from a difference system produced
/// by `scheme`.
pub fn inverse_discretize(dsos: &SecondOrderSystem, scheme: Scheme) -> Result<SecondOrderSystem> {
    let h = dsos
        .domain()
        .step()
        .ok_or_else(|| Error::DomainMismatch("inverse_discretize expects a discrete system".into()))?;
    let (mb, db, kb) = (dsos.mass(), dsos.damping(), dsos.stiffness());
    let h2 = h * h;
    let mass = match scheme {
        Scheme::ForwardVelocity => kb * h2,
        Scheme::BackwardVelocity => mb * h2,
        Scheme::CentralVelocity => (mb + kb) * (h2 / 2.0),
    };
    let damping = (mb - kb) * h;
    let stiffness = mb + db + kb;
    SecondOrderSystem::new(
        mass,
        damping,
        stiffness,
        dsos.input().clone(),
        dsos.output().clone(),
        Domain::Continuous,
    )
}

/// Default step `0.1 / max(1, ‖M⁻¹K‖_F^{1/2})`.
pub fn default_step(sos: &SecondOrderSystem) -> Result<f64> {
    let minv_k = sos.solve_mass(sos.stiffness())?;
    Ok(0.1 / minv_k.norm().sqrt().max(1.0))
}

/// Discretizes and checks that stability survived the conversion.
///
/// Returns the difference system plus a warning when the continuous
/// system was stable but the difference system is not.
pub fn discretize_checked(
    sos: &SecondOrderSystem,
    h: f64,
    scheme: Scheme,
) -> Result<(SecondOrderSystem, Option<String>)> {
    let dsos = discretize(sos, h, scheme)?;
    let before = sos.stability_report()?;
    let after = dsos.stability_report()?;
    let warning = (before.is_stable && !after.is_stable).then(|| {
        let msg = format!(
            "{scheme} scheme with h = {h:e} turns a stable system unstable (discrete margin {:.3e}); reduce h",
            after.margin
        );
        log::warn!("{msg}");
        msg
    });
    Ok((dsos, warning))
}

/// `max_s ‖T_d(e^{sh}) - T_c(s)‖ / ‖T_c(s)‖` over the given points, with
/// the largest-entry norm.
pub fn consistency_error(
    sos: &SecondOrderSystem,
    h: f64,
    scheme: Scheme,
    s_points: &[Complex64],
) -> Result<f64> {
    let dsos = discretize(sos, h, scheme)?;
    let mut worst = 0.0_f64;
    for &s in s_points {
        let tc = sos.transfer(s)?;
        let td = dsos.transfer((s * h).exp())?;
        let denom = tc.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let num = (td - &tc).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(if denom > 0.0 { num / denom } else { num });
    }
    Ok(worst)
}

/// CSV (`h,deviation`) of the consistency error over a list of steps.
pub fn consistency_curve_csv(
    sos: &SecondOrderSystem,
    steps: &[f64],
    scheme: Scheme,
    s_points: &[Complex64],
) -> Result<String> {
    let mut out = String::from("h,deviation\n");
    for &h in steps {
        let dev = consistency_error(sos, h, scheme, s_points)?;
        out.push_str(&format!("{h:.16e},{dev:.16e}\n"));
    }
    Ok(out)
}
