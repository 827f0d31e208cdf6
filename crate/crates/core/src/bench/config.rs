//! Run configuration in a flat `key = value` text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! algorithm = srlrh
//! order = 5
//! scheme = forward
//! h = 0.05
//! tau = 144
//! seed = 7
//! grid_count = 400
//! w_min = 0.01
//! w_max = 10000
//! rre_mode = discretize_full
//! out = runs/building
//! ```
//!
//! `h` is only used when the model is continuous and defaults to
//! [`default_step`](crate::discretization::default_step). Give either
//! `tau` or `angle_tol` (with optional `max_steps`); with neither the
//! recursion runs `3·2N` steps.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::discretization::Scheme;
use crate::error::{Error, Result};
use crate::metrics::{FrequencyGrid, RreMode};
use crate::model::Domain;
use crate::recursion::{Algorithm, RecursionConfig, StopRule};

pub const SEED_ENV: &str = "MORSO_SEED";
pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub order: usize,
    pub scheme: Scheme,
    pub h: Option<f64>,
    pub tau: Option<usize>,
    pub angle_tol: Option<f64>,
    pub max_steps: Option<usize>,
    pub seed: u64,
    pub grid_count: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub rre_mode: RreMode,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, order: usize) -> Self {
        Self {
            algorithm,
            order,
            scheme: Scheme::default(),
            h: None,
            tau: None,
            angle_tol: None,
            max_steps: None,
            seed: 0,
            grid_count: 400,
            w_min: 1e-2,
            w_max: 1e4,
            rre_mode: RreMode::default(),
            out: None,
        }
    }

    /// `MORSO_SEED` if set and parseable.
    pub fn seed_from_env() -> Result<Option<u64>> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
            Err(_) => Ok(None),
        }
    }

    pub fn stop_rule(&self) -> Result<Option<StopRule>> {
        match (self.tau, self.angle_tol) {
            (Some(_), Some(_)) => Err(Error::Config("give either tau or angle_tol, not both".into())),
            (Some(t), None) => Ok(Some(StopRule::FixedSteps(t))),
            (None, Some(tol)) => Ok(Some(StopRule::AngleTolerance {
                tol,
                max_steps: self.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
            })),
            (None, None) => Ok(None),
        }
    }

    pub fn recursion_config(&self) -> Result<RecursionConfig> {
        Ok(RecursionConfig {
            order: self.order,
            stop: self.stop_rule()?,
            seed: self.seed,
        })
    }

    /// Comparison grid for a domain.
    pub fn grid(&self, domain: Domain) -> FrequencyGrid {
        if domain.is_discrete() {
            FrequencyGrid::UnitCircle { count: self.grid_count }
        } else {
            FrequencyGrid::LogContinuous {
                w_min: self.w_min,
                w_max: self.w_max,
                count: self.grid_count,
            }
        }
    }

    /// Checks against a model with `states` = N.
    pub fn validate(&self, states: usize) -> Result<()> {
        if self.order == 0 {
            return Err(Error::BadParameters("order n must be at least 1".into()));
        }
        if self.order >= states {
            return Err(Error::OrderTooLarge { order: self.order, states });
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositiveStep(h));
            }
        }
        self.grid(Domain::Continuous).validate()?;
        self.recursion_config()?.validate(states)
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "algorithm = {}", self.algorithm);
        let _ = writeln!(s, "order = {}", self.order);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        if let Some(h) = self.h {
            let _ = writeln!(s, "h = {h:.16e}");
        }
        if let Some(t) = self.tau {
            let _ = writeln!(s, "tau = {t}");
        }
        if let Some(t) = self.angle_tol {
            let _ = writeln!(s, "angle_tol = {t:.16e}");
        }
        if let Some(m) = self.max_steps {
            let _ = writeln!(s, "max_steps = {m}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "grid_count = {}", self.grid_count);
        let _ = writeln!(s, "w_min = {:.16e}", self.w_min);
        let _ = writeln!(s, "w_max = {:.16e}", self.w_max);
        let _ = writeln!(s, "rre_mode = {}", self.rre_mode);
        if let Some(o) = &self.out {
            let _ = writeln!(s, "out = {}", o.display());
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut algorithm = None;
        let mut order = None;
        let mut cfg = RunConfig::new(Algorithm::Srlrg, 1);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} '{value}'", i + 1));
            match key {
                "algorithm" => algorithm = Some(value.parse()?),
                "order" => order = Some(value.parse().map_err(|_| bad("order"))?),
                "scheme" => cfg.scheme = value.parse()?,
                "h" => cfg.h = Some(value.parse().map_err(|_| bad("h"))?),
                "tau" => cfg.tau = Some(value.parse().map_err(|_| bad("tau"))?),
                "angle_tol" => cfg.angle_tol = Some(value.parse().map_err(|_| bad("angle_tol"))?),
                "max_steps" => cfg.max_steps = Some(value.parse().map_err(|_| bad("max_steps"))?),
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "grid_count" => cfg.grid_count = value.parse().map_err(|_| bad("grid_count"))?,
                "w_min" => cfg.w_min = value.parse().map_err(|_| bad("w_min"))?,
                "w_max" => cfg.w_max = value.parse().map_err(|_| bad("w_max"))?,
                "rre_mode" => cfg.rre_mode = value.parse()?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "tool_version" => {}
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", i + 1))),
            }
        }
        cfg.algorithm = algorithm.ok_or_else(|| Error::Config("missing key 'algorithm'".into()))?;
        cfg.order = order.ok_or_else(|| Error::Config("missing key 'order'".into()))?;
        Ok(cfg)
    }

    /// Key-value text plus the tool version.
    pub fn manifest(&self) -> String {
        format!("tool_version = {}\n{}", env!("CARGO_PKG_VERSION"), self.to_key_value())
    }
}
