//! Frequency sampling, grid-refined H∞ estimates and the relative
//! reduction error `rre = ‖S - S_n‖_∞ / ‖S‖_∞`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discretization::{discretize, inverse_discretize, Scheme};
use crate::error::{Error, Result};
use crate::linalg::sigma_max;
use crate::model::{Domain, SecondOrderSystem, TransferFunction};

pub const REFINEMENT_ROUNDS: usize = 3;
pub const REFINEMENT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FrequencyGrid {
    /// `count` points `s = iω`, `ω` log-spaced over `[w_min, w_max]`.
    LogContinuous { w_min: f64, w_max: f64, count: usize },
    /// `z = e^{iθ}` with `θ_j = πj/count`, `j = 1..count`.
    UnitCircle { count: usize },
}

impl FrequencyGrid {
    pub fn default_continuous() -> Self {
        FrequencyGrid::LogContinuous {
            w_min: 1e-2,
            w_max: 1e4,
            count: 400,
        }
    }

    pub fn default_discrete() -> Self {
        FrequencyGrid::UnitCircle { count: 400 }
    }

    pub fn default_for(domain: Domain) -> Self {
        if domain.is_discrete() {
            Self::default_discrete()
        } else {
            Self::default_continuous()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FrequencyGrid::LogContinuous { w_min, w_max, count } => {
                if count < 2 || !(w_min > 0.0) || !(w_max > w_min) || !w_max.is_finite() {
                    return Err(Error::BadParameters(format!(
                        "log grid needs count >= 2 and 0 < w_min < w_max, got {count} over [{w_min}, {w_max}]"
                    )));
                }
            }
            FrequencyGrid::UnitCircle { count } => {
                if count < 2 {
                    return Err(Error::BadParameters(format!("unit-circle grid needs count >= 2, got {count}")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FrequencyGrid::LogContinuous { .. } => "log_continuous",
            FrequencyGrid::UnitCircle { .. } => "unit_circle",
        }
    }

    pub fn count(&self) -> usize {
        match *self {
            FrequencyGrid::LogContinuous { count, .. } | FrequencyGrid::UnitCircle { count } => count,
        }
    }

    pub fn matches(&self, domain: Domain) -> bool {
        matches!(
            (self, domain.is_discrete()),
            (FrequencyGrid::LogContinuous { .. }, false) | (FrequencyGrid::UnitCircle { .. }, true)
        )
    }

    /// Sampling parameter: `log10 ω` or `θ`. Refinement works in this
    /// coordinate.
    fn parameters(&self) -> Vec<f64> {
        match *self {
            FrequencyGrid::LogContinuous { w_min, w_max, count } => {
                let (a, b) = (w_min.log10(), w_max.log10());
                (0..count)
                    .map(|j| a + (b - a) * j as f64 / (count - 1) as f64)
                    .collect()
            }
            FrequencyGrid::UnitCircle { count } => (1..=count).map(|j| PI * j as f64 / count as f64).collect(),
        }
    }

    fn abscissa(&self, t: f64) -> f64 {
        match self {
            FrequencyGrid::LogContinuous { .. } => 10f64.powf(t),
            FrequencyGrid::UnitCircle { .. } => t,
        }
    }

    fn point(&self, t: f64) -> Complex64 {
        match self {
            FrequencyGrid::LogContinuous { .. } => Complex64::new(0.0, 10f64.powf(t)),
            FrequencyGrid::UnitCircle { .. } => Complex64::from_polar(1.0, t),
        }
    }

    /// Evaluation points in grid order.
    pub fn points(&self) -> Vec<Complex64> {
        self.parameters().into_iter().map(|t| self.point(t)).collect()
    }

    /// `ω` (continuous) or `θ` (discrete) for each grid point.
    pub fn abscissae(&self) -> Vec<f64> {
        self.parameters().into_iter().map(|t| self.abscissa(t)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    pub grid: FrequencyGrid,
    /// `ω` or `θ` per grid point.
    pub abscissa: Vec<f64>,
    pub sigma_max: Vec<f64>,
    /// Grid maximum after local refinement; never below `max(sigma_max)`.
    pub hinf_estimate: f64,
    pub argmax_point: Complex64,
    pub refinement_rounds: usize,
}

#[derive(Serialize)]
struct Summary {
    hinf: f64,
    argmax: [f64; 2],
    grid_kind: &'static str,
    refinement_rounds: usize,
}

impl FrequencyResponse {
    pub fn to_csv(&self) -> String {
        let head = match self.grid {
            FrequencyGrid::LogContinuous { .. } => "frequency",
            FrequencyGrid::UnitCircle { .. } => "angle",
        };
        let mut out = format!("{head},sigma_max\n");
        for (x, s) in self.abscissa.iter().zip(&self.sigma_max) {
            out.push_str(&format!("{x:.16e},{s:.16e}\n"));
        }
        out
    }

    /// `{hinf, argmax, grid_kind, refinement_rounds}` as JSON, `argmax`
    /// given as `[re, im]`.
    pub fn summary_json(&self) -> String {
        let summary = Summary {
            hinf: self.hinf_estimate,
            argmax: [self.argmax_point.re, self.argmax_point.im],
            grid_kind: self.grid.kind(),
            refinement_rounds: self.refinement_rounds,
        };
        serde_json::to_string(&summary).expect("plain struct serializes")
    }
}

/// Samples `eval` on the grid and refines the peak.
pub fn sample_response<F>(grid: FrequencyGrid, eval: F) -> Result<FrequencyResponse>
where
    F: Fn(Complex64) -> Result<f64>,
{
    grid.validate()?;
    let params = grid.parameters();
    let sigma = params
        .iter()
        .map(|&t| eval(grid.point(t)))
        .collect::<Result<Vec<_>>>()?;
    let j = argmax(&sigma);
    let mut best = (params[j], sigma[j]);
    let upper_limit = *params.last().unwrap();
    let mut lo = if j > 0 { params[j - 1] } else { params[0] };
    let mut hi = if j + 1 < params.len() { params[j + 1] } else { upper_limit };
    for _ in 0..REFINEMENT_ROUNDS {
        let step = (hi - lo) / (REFINEMENT_POINTS + 1) as f64;
        if !(step > 0.0) {
            break;
        }
        let mut cand = Vec::with_capacity(REFINEMENT_POINTS + 2);
        cand.push((lo, f64::NEG_INFINITY));
        for i in 1..=REFINEMENT_POINTS {
            let t = lo + step * i as f64;
            cand.push((t, eval(grid.point(t))?));
        }
        cand.push((hi, f64::NEG_INFINITY));
        let inner = argmax(&cand.iter().map(|c| c.1).collect::<Vec<_>>());
        if cand[inner].1 > best.1 {
            best = cand[inner];
        }
        // Bracket the best interior point, or the previous best if the
        // refinement did not improve on it.
        let centre = best.0;
        lo = (centre - step).max(lo);
        hi = (centre + step).min(hi);
    }
    Ok(FrequencyResponse {
        abscissa: params.iter().map(|&t| grid.abscissa(t)).collect(),
        sigma_max: sigma,
        hinf_estimate: best.1,
        argmax_point: grid.point(best.0),
        refinement_rounds: REFINEMENT_ROUNDS,
        grid,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut j = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[j] {
            j = i;
        }
    }
    j
}

fn check_grid(domain: Domain, grid: &FrequencyGrid) -> Result<()> {
    if grid.matches(domain) {
        Ok(())
    } else {
        Err(Error::DomainMismatch(format!(
            "{} grid used on a {domain} system",
            grid.kind()
        )))
    }
}

pub fn frequency_response<T: TransferFunction + ?Sized>(sys: &T, grid: FrequencyGrid) -> Result<FrequencyResponse> {
    check_grid(sys.domain(), &grid)?;
    sample_response(grid, |p| Ok(sigma_max(&sys.transfer(p)?)))
}

fn check_pair<A, B>(full: &A, reduced: &B) -> Result<()>
where
    A: TransferFunction + ?Sized,
    B: TransferFunction + ?Sized,
{
    if full.input_dim() != reduced.input_dim() || full.output_dim() != reduced.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "full is {}x{}, reduced is {}x{}",
            full.output_dim(),
            full.input_dim(),
            reduced.output_dim(),
            reduced.input_dim()
        )));
    }
    if full.domain() != reduced.domain() {
        return Err(Error::DomainMismatch(format!(
            "full is {}, reduced is {}",
            full.domain(),
            reduced.domain()
        )));
    }
    Ok(())
}

/// `σ_max(T(p) - T_n(p))` over the grid, evaluated pointwise.
pub fn error_response<A, B>(full: &A, reduced: &B, grid: FrequencyGrid) -> Result<FrequencyResponse>
where
    A: TransferFunction + ?Sized,
    B: TransferFunction + ?Sized,
{
    check_pair(full, reduced)?;
    check_grid(full.domain(), &grid)?;
    sample_response(grid, |p| {
        let diff: DMatrix<Complex64> = full.transfer(p)? - reduced.transfer(p)?;
        Ok(sigma_max(&diff))
    })
}

#[derive(Debug, Clone)]
pub struct RreReport {
    pub rre: f64,
    pub full: FrequencyResponse,
    pub error: FrequencyResponse,
}

pub fn rre_report<A, B>(full: &A, reduced: &B, grid: FrequencyGrid) -> Result<RreReport>
where
    A: TransferFunction + ?Sized,
    B: TransferFunction + ?Sized,
{
    let error = error_response(full, reduced, grid)?;
    let full_resp = frequency_response(full, grid)?;
    if !(full_resp.hinf_estimate > 0.0) {
        return Err(Error::BadParameters("full system has zero response on the grid".into()));
    }
    Ok(RreReport {
        rre: error.hinf_estimate / full_resp.hinf_estimate,
        full: full_resp,
        error,
    })
}

pub fn rre<A, B>(full: &A, reduced: &B, grid: FrequencyGrid) -> Result<f64>
where
    A: TransferFunction + ?Sized,
    B: TransferFunction + ?Sized,
{
    Ok(rre_report(full, reduced, grid)?.rre)
}

/// How a continuous full model is compared with a reduced model that was
/// computed on its discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RreMode {
    /// Discretize the full model with the same `(h, scheme)`; compare on
    /// the unit circle.
    #[default]
    DiscretizeFull,
    /// Map the reduced model back with `inverse_discretize`; compare on the
    /// imaginary axis.
    ContinuousReduced,
}

impl std::fmt::Display for RreMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RreMode::DiscretizeFull => "discretize_full",
            RreMode::ContinuousReduced => "continuous_reduced",
        })
    }
}

impl std::str::FromStr for RreMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "discretize_full" => Ok(RreMode::DiscretizeFull),
            "b" | "continuous_reduced" => Ok(RreMode::ContinuousReduced),
            other => Err(Error::Config(format!("unknown rre mode '{other}'"))),
        }
    }
}

/// `rre` for a continuous `full` and a discrete `reduced`. The grid is
/// chosen by `grid_for` from the comparison domain.
pub fn rre_mixed(
    full: &SecondOrderSystem,
    reduced: &SecondOrderSystem,
    scheme: Scheme,
    mode: RreMode,
    grid_for: impl Fn(Domain) -> FrequencyGrid,
) -> Result<RreReport> {
    let h = match (full.domain(), reduced.domain()) {
        (Domain::Continuous, Domain::Discrete { h }) => h,
        (a, b) if a == b => return rre_report(full, reduced, grid_for(a)),
        (a, b) => {
            return Err(Error::DomainMismatch(format!(
                "cannot compare a {a} full model with a {b} reduced model"
            )))
        }
    };
    match mode {
        RreMode::DiscretizeFull => {
            let dfull = discretize(full, h, scheme)?;
            rre_report(&dfull, reduced, grid_for(dfull.domain()))
        }
        RreMode::ContinuousReduced => {
            let cred = inverse_discretize(reduced, scheme)?;
            rre_report(full, &cred, grid_for(Domain::Continuous))
        }
    }
}
