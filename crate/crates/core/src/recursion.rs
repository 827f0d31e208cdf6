//! Second-order recursive low-rank Gramian (SRLRG) and Hankel (SRLRH)
//! iterations.
//!
//! Both track an `n`-dimensional dominant subspace of the linearized
//! difference system without ever forming the `2N x 2N` state matrix.
//! The first-order iterate `[S(i-1); S(i)]` is kept as a
//! [`SubspaceWindow`] of two `N x n` blocks and updated by
//!
//! ```text
//! S(i)'   = S(i) V1
//! S(i+1)  = -M⁻¹K S(i-1) V1 - M⁻¹D S(i) V1 + M⁻¹F V2
//! R(i)'   = -KᵀM⁻ᵀ R(i) U1
//! R(i+1)  = R(i-1) U1 - DᵀM⁻ᵀ R(i) U1 + Gᵀ U2
//! ```
//!
//! where `(V1; V2)` and `(U1; U2)` are the leading `n` right singular
//! vectors of `M1 = [A S | B]` and `M2 = [Aᵀ R | Cᵀ]` (SRLRG), or the
//! leading singular vectors of `M2ᵀ M1` (SRLRH). The primed `prev` blocks
//! only influence the iterate two steps later.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, gaussian, orthonormalize, thin_svd};
use crate::model::SecondOrderSystem;
use crate::oracle::max_subspace_angle;

/// Ratio `Σ_n / Σ_1` below which an SRLRH step reports a rank collapse.
pub const RANK_COLLAPSE_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Srlrg,
    Srlrh,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Srlrg => "srlrg",
            Algorithm::Srlrh => "srlrh",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srlrg" | "sorlrg" => Ok(Algorithm::Srlrg),
            "srlrh" | "sorlrh" => Ok(Algorithm::Srlrh),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Two consecutive `N x n` iterates `(X(i-1), X(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceWindow {
    pub prev: DMatrix<f64>,
    pub curr: DMatrix<f64>,
}

impl SubspaceWindow {
    pub fn new(prev: DMatrix<f64>, curr: DMatrix<f64>) -> Result<Self> {
        if prev.shape() != curr.shape() || prev.ncols() > prev.nrows() || prev.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "window blocks {:?} and {:?}",
                prev.shape(),
                curr.shape()
            )));
        }
        Ok(Self { prev, curr })
    }

    pub fn zeros(states: usize, order: usize) -> Self {
        Self {
            prev: DMatrix::zeros(states, order),
            curr: DMatrix::zeros(states, order),
        }
    }

    /// `[prev; curr]`, the first-order iterate.
    pub fn stacked(&self) -> DMatrix<f64> {
        linalg::vstack(&self.prev, &self.curr)
    }

    pub fn order(&self) -> usize {
        self.curr.ncols()
    }

    fn is_finite(&self) -> bool {
        self.prev.iter().chain(self.curr.iter()).all(|x| x.is_finite())
    }
}

/// The products with `M⁻¹` the recursion needs, formed once per run from
/// the cached factorization of `M`.
#[derive(Debug, Clone)]
pub struct RecursionOperators {
    minv_k: DMatrix<f64>,
    minv_d: DMatrix<f64>,
    minv_f: DMatrix<f64>,
    g_t: DMatrix<f64>,
}

impl RecursionOperators {
    pub fn new(dsos: &SecondOrderSystem) -> Result<Self> {
        if !dsos.domain().is_discrete() {
            return Err(Error::DomainMismatch(
                "the recursions run on a discrete (difference) system".into(),
            ));
        }
        Ok(Self {
            minv_k: dsos.solve_mass(dsos.stiffness())?,
            minv_d: dsos.solve_mass(dsos.damping())?,
            minv_f: dsos.solve_mass(dsos.input())?,
            g_t: dsos.output().transpose(),
        })
    }

    pub fn states(&self) -> usize {
        self.minv_k.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.minv_f.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.g_t.ncols()
    }

    fn check(&self, w: &SubspaceWindow) -> Result<()> {
        if w.prev.nrows() != self.states() {
            return Err(Error::DimensionMismatch(format!(
                "window has {} rows, system has N = {}",
                w.prev.nrows(),
                self.states()
            )));
        }
        Ok(())
    }
}

/// `M1(i) = [[0, I], [-M⁻¹K, -M⁻¹D]] [S(i-1); S(i)] | [0; M⁻¹F]`.
pub fn assemble_m1(ops: &RecursionOperators, ws: &SubspaceWindow) -> Result<DMatrix<f64>> {
    ops.check(ws)?;
    let (n, k, m) = (ops.states(), ws.order(), ops.inputs());
    let mut out = DMatrix::zeros(2 * n, k + m);
    out.view_mut((0, 0), (n, k)).copy_from(&ws.curr);
    out.view_mut((n, 0), (n, k))
        .copy_from(&(-(&ops.minv_k * &ws.prev) - &ops.minv_d * &ws.curr));
    out.view_mut((n, k), (n, m)).copy_from(&ops.minv_f);
    Ok(out)
}

/// `M2(i) = [[0, -KᵀM⁻ᵀ], [I, -DᵀM⁻ᵀ]] [R(i-1); R(i)] | [0; Gᵀ]`.
pub fn assemble_m2(ops: &RecursionOperators, wr: &SubspaceWindow) -> Result<DMatrix<f64>> {
    ops.check(wr)?;
    let (n, k, p) = (ops.states(), wr.order(), ops.outputs());
    let mut out = DMatrix::zeros(2 * n, k + p);
    out.view_mut((0, 0), (n, k))
        .copy_from(&(-(ops.minv_k.tr_mul(&wr.curr))));
    out.view_mut((n, 0), (n, k))
        .copy_from(&(&wr.prev - ops.minv_d.tr_mul(&wr.curr)));
    out.view_mut((n, k), (n, p)).copy_from(&ops.g_t);
    Ok(out)
}

/// Singular values retained in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// `Σ_c(1:n)` for SRLRG, the Hankel-side `Σ(1:n)` for SRLRH.
    pub sigma: DVector<f64>,
    /// `Σ_o(1:n)` for SRLRG; `None` for SRLRH.
    pub sigma_observability: Option<DVector<f64>>,
    pub rank_collapse: bool,
}

fn update_controllability(
    ops: &RecursionOperators,
    ws: &SubspaceWindow,
    v1: &DMatrix<f64>,
    v2: &DMatrix<f64>,
) -> SubspaceWindow {
    let curr_v1 = &ws.curr * v1;
    let next = -(&ops.minv_k * (&ws.prev * v1)) - &ops.minv_d * &curr_v1 + &ops.minv_f * v2;
    SubspaceWindow {
        prev: curr_v1,
        curr: next,
    }
}

fn update_observability(
    ops: &RecursionOperators,
    wr: &SubspaceWindow,
    u1: &DMatrix<f64>,
    u2: &DMatrix<f64>,
) -> SubspaceWindow {
    let curr_u1 = &wr.curr * u1;
    let prev = -(ops.minv_k.tr_mul(&curr_u1));
    let next = &wr.prev * u1 - ops.minv_d.tr_mul(&curr_u1) + &ops.g_t * u2;
    SubspaceWindow { prev, curr: next }
}

/// Splits the leading `k` columns of `v` into the top `k x k` block and
/// the remaining rows.
fn split_leading(v: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let lead = v.columns(0, k);
    (
        lead.rows(0, k).into_owned(),
        lead.rows(k, v.nrows() - k).into_owned(),
    )
}

fn check_finite(ws: &SubspaceWindow, wr: &SubspaceWindow) -> Result<()> {
    if !ws.is_finite() {
        return Err(Error::NonFiniteIterate { step: 0, side: "S" });
    }
    if !wr.is_finite() {
        return Err(Error::NonFiniteIterate { step: 0, side: "R" });
    }
    Ok(())
}

fn finite(a: DMatrix<f64>, side: &'static str) -> Result<DMatrix<f64>> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(a)
    } else {
        Err(Error::NonFiniteIterate { step: 0, side })
    }
}

type StepOutput = (SubspaceWindow, SubspaceWindow, StepDiagnostics);

/// One SRLRG step: separate SVDs of `M1` and `M2`.
pub fn srlrg_step(
    ops: &RecursionOperators,
    ws: &SubspaceWindow,
    wr: &SubspaceWindow,
) -> Result<StepOutput> {
    let k = ws.order();
    if wr.order() != k {
        return Err(Error::DimensionMismatch("S and R windows differ in order".into()));
    }
    let svd_c = thin_svd(&finite(assemble_m1(ops, ws)?, "S")?)?;
    let svd_o = thin_svd(&finite(assemble_m2(ops, wr)?, "R")?)?;
    let (vc1, vc2) = split_leading(&svd_c.v, k);
    let (vo1, vo2) = split_leading(&svd_o.v, k);
    let ws_next = update_controllability(ops, ws, &vc1, &vc2);
    let wr_next = update_observability(ops, wr, &vo1, &vo2);
    check_finite(&ws_next, &wr_next)?;
    let diag = StepDiagnostics {
        sigma: svd_c.s.rows(0, k).into_owned(),
        sigma_observability: Some(svd_o.s.rows(0, k).into_owned()),
        rank_collapse: false,
    };
    Ok((ws_next, wr_next, diag))
}

/// One SRLRH step: a single SVD of `M2ᵀ M1`.
pub fn srlrh_step(
    ops: &RecursionOperators,
    ws: &SubspaceWindow,
    wr: &SubspaceWindow,
) -> Result<StepOutput> {
    let k = ws.order();
    if wr.order() != k {
        return Err(Error::DimensionMismatch("S and R windows differ in order".into()));
    }
    let m1 = finite(assemble_m1(ops, ws)?, "S")?;
    let m2 = finite(assemble_m2(ops, wr)?, "R")?;
    let svd = thin_svd(&finite(m2.tr_mul(&m1), "S")?)?;
    let (v1, v2) = split_leading(&svd.v, k);
    let (u1, u2) = split_leading(&svd.u, k);
    let ws_next = update_controllability(ops, ws, &v1, &v2);
    let wr_next = update_observability(ops, wr, &u1, &u2);
    check_finite(&ws_next, &wr_next)?;
    let sigma = svd.s.rows(0, k).into_owned();
    let rank_collapse = !(sigma[k - 1] / sigma[0] >= RANK_COLLAPSE_RATIO);
    Ok((
        ws_next,
        wr_next,
        StepDiagnostics {
            sigma,
            sigma_observability: None,
            rank_collapse,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Exactly `tau` steps.
    FixedSteps(usize),
    /// Stop once the largest principal angle between consecutive `curr`
    /// blocks is below `tol` on both sides for two steps in a row.
    /// SRLRH can settle into a two-step cycle, in which case this never
    /// fires and the run ends with `MaxStepsExceeded`.
    AngleTolerance { tol: f64, max_steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionConfig {
    /// Reduced half-order `n` (columns of every window block).
    pub order: usize,
    /// `None` means `FixedSteps(3 * 2N)`.
    pub stop: Option<StopRule>,
    pub seed: u64,
}

impl RecursionConfig {
    pub fn new(order: usize, seed: u64) -> Self {
        Self {
            order,
            stop: None,
            seed,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = Some(stop);
        self
    }

    /// Stop rule with the default resolved against `N`.
    pub fn resolved_stop(&self, states: usize) -> StopRule {
        self.stop.unwrap_or(StopRule::FixedSteps(default_steps(states)))
    }

    pub fn validate(&self, states: usize) -> Result<()> {
        if self.order == 0 || self.order > states {
            return Err(Error::BadParameters(format!(
                "order n = {} must satisfy 1 <= n <= N = {states}",
                self.order
            )));
        }
        match self.resolved_stop(states) {
            StopRule::FixedSteps(0) => Err(Error::BadParameters("tau must be at least 1".into())),
            StopRule::AngleTolerance { tol, max_steps } => {
                if !(tol > 0.0 && tol < 1.0) {
                    Err(Error::BadParameters(format!("angle tolerance {tol} not in (0, 1)")))
                } else if max_steps == 0 {
                    Err(Error::BadParameters("max_steps must be at least 1".into()))
                } else {
                    Ok(())
                }
            }
            StopRule::FixedSteps(_) => Ok(()),
        }
    }
}

/// Three times the first-order dimension `2N`.
pub fn default_steps(states: usize) -> usize {
    3 * 2 * states
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    FixedSteps,
    AngleConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionDiagnostics {
    pub algorithm: Algorithm,
    pub steps_taken: usize,
    pub steps: Vec<StepDiagnostics>,
    /// Largest principal angle between consecutive `curr` blocks, S side.
    /// `NaN` where a block was rank deficient.
    pub angles_s: Vec<f64>,
    /// Same for the R side.
    pub angles_r: Vec<f64>,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

impl RecursionDiagnostics {
    /// One row per step: `step, sigma_1..sigma_n[, obs_1..obs_n], angle_s, angle_r`.
    pub fn to_csv(&self) -> String {
        let k = self.steps.first().map_or(0, |s| s.sigma.len());
        let mut out = String::from("step");
        let label = match self.algorithm {
            Algorithm::Srlrg => "sigma_c",
            Algorithm::Srlrh => "sigma_h",
        };
        for j in 1..=k {
            out.push_str(&format!(",{label}_{j}"));
        }
        if self.algorithm == Algorithm::Srlrg {
            for j in 1..=k {
                out.push_str(&format!(",sigma_o_{j}"));
            }
        }
        out.push_str(",angle_s,angle_r\n");
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&format!("{}", i + 1));
            let obs = step.sigma_observability.iter().flat_map(|v| v.iter());
            for x in step.sigma.iter().chain(obs) {
                out.push_str(&format!(",{x:.16e}"));
            }
            out.push_str(&format!(",{:.16e},{:.16e}\n", self.angles_s[i], self.angles_r[i]));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RecursionOutcome {
    /// `S_n(τ)`.
    pub s: DMatrix<f64>,
    /// `R_n(τ)`.
    pub r: DMatrix<f64>,
    pub window_s: SubspaceWindow,
    pub window_r: SubspaceWindow,
    pub diagnostics: RecursionDiagnostics,
}

/// Seeded Gaussian windows, each block orthonormalized.
pub fn initial_windows(states: usize, order: usize, seed: u64) -> Result<(SubspaceWindow, SubspaceWindow)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = || orthonormalize(&gaussian(states, order, &mut rng));
    let s_prev = block()?;
    let s_curr = block()?;
    let r_prev = block()?;
    let r_curr = block()?;
    Ok((
        SubspaceWindow::new(s_prev, s_curr)?,
        SubspaceWindow::new(r_prev, r_curr)?,
    ))
}

pub fn run_recursion(
    dsos: &SecondOrderSystem,
    config: &RecursionConfig,
    algorithm: Algorithm,
) -> Result<RecursionOutcome> {
    let states = dsos.states();
    config.validate(states)?;
    let (ws, wr) = initial_windows(states, config.order, config.seed)?;
    run_from(dsos, ws, wr, config.resolved_stop(states), algorithm)
}

/// Runs the recursion from caller-supplied initial windows.
pub fn run_from(
    dsos: &SecondOrderSystem,
    mut ws: SubspaceWindow,
    mut wr: SubspaceWindow,
    stop: StopRule,
    algorithm: Algorithm,
) -> Result<RecursionOutcome> {
    let ops = RecursionOperators::new(dsos)?;
    let step_fn = match algorithm {
        Algorithm::Srlrg => srlrg_step,
        Algorithm::Srlrh => srlrh_step,
    };
    let (limit, tol) = match stop {
        StopRule::FixedSteps(tau) => (tau, None),
        StopRule::AngleTolerance { tol, max_steps } => (max_steps, Some(tol)),
    };
    let mut diagnostics = RecursionDiagnostics {
        algorithm,
        steps_taken: 0,
        steps: Vec::with_capacity(limit.min(100_000)),
        angles_s: Vec::new(),
        angles_r: Vec::new(),
        termination: Termination::FixedSteps,
        warnings: Vec::new(),
    };
    let mut below = 0;
    for i in 1..=limit {
        let (ws_next, wr_next, step) = step_fn(&ops, &ws, &wr).map_err(|e| match e {
            Error::NonFiniteIterate { side, .. } => Error::NonFiniteIterate { step: i, side },
            other => other,
        })?;
        if step.rank_collapse {
            let msg = format!("step {i}: Σ_n/Σ_1 below {RANK_COLLAPSE_RATIO:e}");
            log::warn!("{msg}");
            diagnostics.warnings.push(msg);
        }
        let angle_s = max_subspace_angle(&ws.curr, &ws_next.curr).unwrap_or(f64::NAN);
        let angle_r = max_subspace_angle(&wr.curr, &wr_next.curr).unwrap_or(f64::NAN);
        diagnostics.steps.push(step);
        diagnostics.angles_s.push(angle_s);
        diagnostics.angles_r.push(angle_r);
        diagnostics.steps_taken = i;
        ws = ws_next;
        wr = wr_next;
        if let Some(tol) = tol {
            below = if angle_s < tol && angle_r < tol { below + 1 } else { 0 };
            if below >= 2 {
                diagnostics.termination = Termination::AngleConverged;
                break;
            }
        }
    }
    if tol.is_some() && diagnostics.termination != Termination::AngleConverged {
        return Err(Error::MaxStepsExceeded(limit));
    }
    Ok(RecursionOutcome {
        s: ws.curr.clone(),
        r: wr.curr.clone(),
        window_s: ws,
        window_r: wr,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn scalar_disc() -> SecondOrderSystem {
        SecondOrderSystem::new(
            DMatrix::identity(4, 4),
            DMatrix::identity(4, 4) * 0.1,
            DMatrix::identity(4, 4) * 0.2,
            DMatrix::from_element(4, 1, 1.0),
            DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            Domain::Discrete { h: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn zero_windows_give_input_blocks() {
        let sys = scalar_disc();
        let ops = RecursionOperators::new(&sys).unwrap();
        let w = SubspaceWindow::zeros(4, 2);
        let m1 = assemble_m1(&ops, &w).unwrap();
        assert_eq!(m1.shape(), (8, 3));
        assert!(m1.columns(0, 2).iter().all(|&x| x == 0.0));
        assert!(m1.view((0, 2), (4, 1)).iter().all(|&x| x == 0.0));
        assert!(m1.view((4, 2), (4, 1)).iter().all(|&x| x == 1.0));
        let m2 = assemble_m2(&ops, &w).unwrap();
        assert_eq!(m2.shape(), (8, 4));
        assert_eq!(m2.view((4, 2), (4, 2)).into_owned(), sys.output().transpose());
    }

    #[test]
    fn zero_input_keeps_zero_iterates() {
        let sys = SecondOrderSystem::new(
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3) * 0.1,
            DMatrix::identity(3, 3) * 0.2,
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 3),
            Domain::Discrete { h: 1.0 },
        )
        .unwrap();
        let ops = RecursionOperators::new(&sys).unwrap();
        let mut ws = SubspaceWindow::zeros(3, 2);
        let mut wr = SubspaceWindow::zeros(3, 2);
        for _ in 0..5 {
            let (a, b, _) = srlrg_step(&ops, &ws, &wr).unwrap();
            ws = a;
            wr = b;
        }
        assert!(ws.stacked().iter().chain(wr.stacked().iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn continuous_system_is_rejected() {
        let sys = SecondOrderSystem::scalar(1.0, 1.0, 1.0, 1.0, 1.0, Domain::Continuous).unwrap();
        assert!(matches!(RecursionOperators::new(&sys), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn default_tau_is_three_times_first_order_dimension() {
        assert_eq!(default_steps(24), 144);
        assert_eq!(RecursionConfig::new(5, 0).resolved_stop(24), StopRule::FixedSteps(144));
    }

    #[test]
    fn config_validation() {
        assert!(RecursionConfig::new(0, 0).validate(4).is_err());
        assert!(RecursionConfig::new(5, 0).validate(4).is_err());
        let bad_tol = RecursionConfig::new(2, 0).with_stop(StopRule::AngleTolerance { tol: 1.5, max_steps: 10 });
        assert!(bad_tol.validate(4).is_err());
        assert!(RecursionConfig::new(2, 0).with_stop(StopRule::FixedSteps(0)).validate(4).is_err());
    }

    #[test]
    fn unstable_system_diverges_loudly() {
        let sys = SecondOrderSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2) * -3.0,
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(1, 2, 1.0),
            Domain::Discrete { h: 1.0 },
        )
        .unwrap();
        let cfg = RecursionConfig::new(1, 1).with_stop(StopRule::FixedSteps(5000));
        let err = run_recursion(&sys, &cfg, Algorithm::Srlrg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteIterate { step, .. } if step > 1), "{err}");
    }

    #[test]
    fn csv_layout() {
        let sys = scalar_disc();
        let cfg = RecursionConfig::new(2, 3).with_stop(StopRule::FixedSteps(4));
        let out = run_recursion(&sys, &cfg, Algorithm::Srlrg).unwrap();
        let csv = out.diagnostics.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "step,sigma_c_1,sigma_c_2,sigma_o_1,sigma_o_2,angle_s,angle_r");
        assert_eq!(lines.len(), 5);
        let out = run_recursion(&sys, &cfg, Algorithm::Srlrh).unwrap();
        assert!(out.diagnostics.to_csv().starts_with("step,sigma_h_1,sigma_h_2,angle_s"));
    }
}
