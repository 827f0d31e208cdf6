//! End-to-end reduction runs and comparison reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::spec::write_quintuplet;
use crate::discretization::{default_step, discretize_checked, inverse_discretize};
use crate::error::{Error, Result};
use crate::metrics::{frequency_response, rre_mixed, rre_report, FrequencyResponse, RreMode, RreReport};
use crate::model::{Domain, SecondOrderSystem};
use crate::oracle::dense_balanced_truncation;
use crate::projection::{build_projection, reduce, verify_structure_conditions, ProjectionPair, StructureReport, DEFAULT_RANK_TOL};
use crate::recursion::{run_recursion, Algorithm, RecursionOutcome};

#[derive(Debug, Clone)]
pub struct ReductionRun {
    /// The difference system the recursion ran on.
    pub discrete_full: SecondOrderSystem,
    /// Step used, `None` if the input was already discrete.
    pub h: Option<f64>,
    pub recursion: RecursionOutcome,
    pub projection: ProjectionPair,
    pub reduced: SecondOrderSystem,
    /// `inverse_discretize(reduced)` when the input was continuous.
    pub reduced_continuous: Option<SecondOrderSystem>,
    pub structure: StructureReport,
    pub warnings: Vec<String>,
}

/// Discretize (if needed), recurse, project.
pub fn run_reduction(full: &SecondOrderSystem, cfg: &RunConfig) -> Result<ReductionRun> {
    cfg.validate(full.states())?;
    let mut warnings: Vec<String> = full.warnings().to_vec();
    let (dsys, h) = match full.domain() {
        Domain::Continuous => {
            let h = match cfg.h {
                Some(h) => h,
                None => default_step(full)?,
            };
            let (d, warn) = discretize_checked(full, h, cfg.scheme)?;
            warnings.extend(warn);
            (d, Some(h))
        }
        Domain::Discrete { .. } => (full.clone(), None),
    };
    let recursion = run_recursion(&dsys, &cfg.recursion_config()?, cfg.algorithm)?;
    warnings.extend(recursion.diagnostics.warnings.iter().cloned());
    let projection = build_projection(&recursion.s, &recursion.r, DEFAULT_RANK_TOL)?;
    warnings.extend(projection.warnings.iter().cloned());
    let reduced = reduce(&dsys, &projection)?;
    let structure = verify_structure_conditions(&projection, &dsys);
    let reduced_continuous = match full.domain() {
        Domain::Continuous => Some(inverse_discretize(&reduced, cfg.scheme)?),
        Domain::Discrete { .. } => None,
    };
    Ok(ReductionRun {
        discrete_full: dsys,
        h,
        recursion,
        projection,
        reduced,
        reduced_continuous,
        structure,
        warnings,
    })
}

/// `rre` of a reduction run against the original model in the configured mode.
pub fn run_rre(full: &SecondOrderSystem, run: &ReductionRun, cfg: &RunConfig) -> Result<RreReport> {
    match full.domain() {
        Domain::Continuous => rre_mixed(full, &run.reduced, cfg.scheme, cfg.rre_mode, |d| cfg.grid(d)),
        Domain::Discrete { .. } => rre_report(full, &run.reduced, cfg.grid(full.domain())),
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    algorithm: String,
    order: usize,
    h: Option<f64>,
    steps_taken: usize,
    projection_rank: usize,
    hinf_full: f64,
    rre: f64,
    rre_mode: String,
    stable_reduced: bool,
    biorthogonality_error: f64,
    max_off_pattern: f64,
    warnings: &'a [String],
}

/// The files `reduce` writes: reduced matrices, diagnostics, manifest and
/// a JSON summary.
pub fn write_reduction(dir: &Path, full: &SecondOrderSystem, run: &ReductionRun, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_quintuplet(dir, "reduced", &run.reduced)?;
    if let Some(cont) = &run.reduced_continuous {
        write_quintuplet(dir, "reduced_continuous", cont)?;
    }
    fs::write(dir.join("diagnostics.csv"), run.recursion.diagnostics.to_csv())?;
    let mut resolved = cfg.clone();
    resolved.h = run.h;
    fs::write(dir.join("run.conf"), resolved.manifest())?;
    let report = run_rre(full, run, cfg)?;
    let hinf_full = hinf_of(full, cfg)?;
    let mode = effective_mode(full, cfg.rre_mode);
    let summary = RunSummary {
        algorithm: cfg.algorithm.to_string(),
        order: cfg.order,
        h: run.h,
        steps_taken: run.recursion.diagnostics.steps_taken,
        projection_rank: run.projection.order(),
        hinf_full,
        rre: report.rre,
        rre_mode: mode,
        stable_reduced: run.reduced.stability_report()?.is_stable,
        biorthogonality_error: run.projection.biorthogonality_error(),
        max_off_pattern: run.structure.max_off_pattern(),
        warnings: &run.warnings,
    };
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    Ok(())
}

fn effective_mode(full: &SecondOrderSystem, mode: RreMode) -> String {
    if full.domain().is_discrete() {
        "discrete".into()
    } else {
        mode.to_string()
    }
}

/// H∞ estimate of the model on its own domain's grid.
pub fn hinf_of(sys: &SecondOrderSystem, cfg: &RunConfig) -> Result<f64> {
    Ok(frequency_response(sys, cfg.grid(sys.domain()))?.hinf_estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Recursive(Algorithm),
    BalancedTruncation,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Recursive(a) => a.to_string(),
            Method::BalancedTruncation => "bt".into(),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bt" => Ok(Method::BalancedTruncation),
            other => Ok(Method::Recursive(other.parse()?)),
        }
    }
}

#[derive(Debug)]
pub struct CompareRow {
    pub model: String,
    pub method: String,
    pub order: usize,
    pub hinf_full: f64,
    /// `Ok((rre, rre_mode, stable_reduced, error response))` or the failure.
    pub outcome: std::result::Result<(f64, String, bool, FrequencyResponse), Error>,
}

pub const COMPARE_HEADER: &str = "model,method,order,hinf_full,rre,rre_mode,stable_reduced,status";

impl CompareRow {
    pub fn csv_line(&self) -> String {
        match &self.outcome {
            Ok((rre, mode, stable, _)) => format!(
                "{},{},{},{:.6e},{:.6e},{},{},ok",
                self.model, self.method, self.order, self.hinf_full, rre, mode, stable
            ),
            Err(e) => format!(
                "{},{},{},{:.6e},,,,{}",
                self.model,
                self.method,
                self.order,
                self.hinf_full,
                e.class()
            ),
        }
    }
}

#[derive(Debug)]
pub struct Comparison {
    pub full_response: FrequencyResponse,
    pub rows: Vec<CompareRow>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(COMPARE_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.csv_line());
        }
        s
    }
}

/// Balanced truncation of the linearized discretized model at first-order
/// size `2n`; always compared on the unit circle.
fn bt_cell(full: &SecondOrderSystem, order: usize, cfg: &RunConfig) -> Result<(f64, String, bool, FrequencyResponse)> {
    cfg.validate(full.states())?;
    let dsys = match full.domain() {
        Domain::Continuous => {
            let h = match cfg.h {
                Some(h) => h,
                None => default_step(full)?,
            };
            discretize_checked(full, h, cfg.scheme)?.0
        }
        Domain::Discrete { .. } => full.clone(),
    };
    let fos = dsys.linearize()?;
    let bt = dense_balanced_truncation(&fos, 2 * order)?;
    let report = rre_report(&dsys, &bt.reduced, cfg.grid(dsys.domain()))?;
    let stable = bt.reduced.stability_report()?.is_stable;
    let mode = if full.domain().is_discrete() { "discrete" } else { "discretize_full" };
    Ok((report.rre, mode.into(), stable, report.error))
}

fn recursive_cell(full: &SecondOrderSystem, cfg: &RunConfig) -> Result<(f64, String, bool, FrequencyResponse)> {
    let run = run_reduction(full, cfg)?;
    let report = run_rre(full, &run, cfg)?;
    let stable = run.reduced.stability_report()?.is_stable;
    Ok((report.rre, effective_mode(full, cfg.rre_mode), stable, report.error))
}

/// One row per `(method, order)`; failures become rows with the error class.
pub fn compare(
    name: &str,
    full: &SecondOrderSystem,
    methods: &[Method],
    orders: &[usize],
    base: &RunConfig,
) -> Result<Comparison> {
    let full_response = frequency_response(full, base.grid(full.domain()))?;
    let hinf_full = full_response.hinf_estimate;
    let mut rows = Vec::new();
    for &method in methods {
        for &order in orders {
            let mut cfg = base.clone();
            cfg.order = order;
            let outcome = match method {
                Method::Recursive(a) => {
                    cfg.algorithm = a;
                    recursive_cell(full, &cfg)
                }
                Method::BalancedTruncation => bt_cell(full, order, &cfg),
            };
            if let Err(e) = &outcome {
                log::warn!("{} n={order}: {e}", method.label());
            }
            rows.push(CompareRow {
                model: name.to_string(),
                method: method.label(),
                order,
                hinf_full,
                outcome,
            });
        }
    }
    Ok(Comparison { full_response, rows })
}

/// `table.csv`, `sigma_full.csv` and one `sigma_error_<method>_n<order>.csv`
/// per successful cell.
pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("table.csv"), cmp.to_csv())?;
    fs::write(dir.join("sigma_full.csv"), cmp.full_response.to_csv())?;
    fs::write(dir.join("hinf_full.json"), cmp.full_response.summary_json() + "\n")?;
    for row in &cmp.rows {
        if let Ok((_, _, _, err)) = &row.outcome {
            fs::write(
                dir.join(format!("sigma_error_{}_n{}.csv", row.method, row.order)),
                err.to_csv(),
            )?;
        }
    }
    Ok(())
}
