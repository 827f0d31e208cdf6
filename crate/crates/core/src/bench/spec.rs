//! Benchmark descriptions: a TOML file naming the five Matrix Market files.
//!
//! ```toml
//! name = "building"
//! domain = "continuous"        # or "discrete" together with h = ...
//!
//! [paths]                      # relative to this file
//! M = "build_M.mtx"
//! D = "build_D.mtx"
//! K = "build_K.mtx"
//! F = "build_F.mtx"
//! G = "build_G.mtx"
//!
//! [expected_dims]              # optional, each key optional
//! first_order = 48
//! inputs = 1
//! outputs = 1
//! reduced_first_order = 10
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mtx::{read_matrix_market, write_matrix_market};
use crate::error::{Error, Result};
use crate::model::{Domain, SecondOrderSystem};

pub const ROLES: [&str; 5] = ["M", "D", "K", "F", "G"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedDims {
    /// `2N`.
    pub first_order: Option<usize>,
    pub inputs: Option<usize>,
    pub outputs: Option<usize>,
    /// `2n`, checked to be even and below `2N`.
    pub reduced_first_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    #[serde(default = "continuous")]
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub paths: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_dims: Option<ExpectedDims>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn continuous() -> String {
    "continuous".into()
}

impl BenchmarkSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingFile(path.display().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let mut spec: BenchmarkSpec =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn domain(&self) -> Result<Domain> {
        match (self.domain.as_str(), self.h) {
            ("continuous", None) => Ok(Domain::Continuous),
            ("discrete", Some(h)) if h > 0.0 && h.is_finite() => Ok(Domain::Discrete { h }),
            ("discrete", Some(h)) => Err(Error::NonPositiveStep(h)),
            ("discrete", None) => Err(Error::Config("discrete domain needs h".into())),
            ("continuous", Some(_)) => Err(Error::Config("h given for a continuous domain".into())),
            (other, _) => Err(Error::Config(format!("unknown domain '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for role in ROLES {
            if !self.paths.contains_key(role) {
                return Err(Error::Config(format!("benchmark '{}' has no path for {role}", self.name)));
            }
        }
        if let Some(extra) = self.paths.keys().find(|k| !ROLES.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown matrix role '{extra}'")));
        }
        self.domain()?;
        Ok(())
    }

    pub fn resolve(&self, role: &str) -> PathBuf {
        let p = &self.paths[role];
        if p.is_absolute() {
            p.clone()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn mismatch(role: &str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimMismatch {
        role: role.to_string(),
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Reads the quintuplet and checks it against itself and `expected_dims`.
pub fn load_matrix_market(spec: &BenchmarkSpec) -> Result<SecondOrderSystem> {
    spec.validate()?;
    let read = |role: &str| read_matrix_market(&spec.resolve(role));
    let (m, d, k, f, g) = (read("M")?, read("D")?, read("K")?, read("F")?, read("G")?);
    let n = m.nrows();
    if m.ncols() != n {
        return Err(mismatch("M", format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
    }
    for (role, a) in [("D", &d), ("K", &k)] {
        if a.shape() != (n, n) {
            return Err(mismatch(role, format!("{n}x{n}"), format!("{}x{}", a.nrows(), a.ncols())));
        }
    }
    if f.nrows() != n {
        return Err(mismatch("F", format!("{n} rows"), format!("{} rows", f.nrows())));
    }
    if g.ncols() != n {
        return Err(mismatch("G", format!("{n} columns"), format!("{} columns", g.ncols())));
    }
    if let Some(exp) = &spec.expected_dims {
        if let Some(two_n) = exp.first_order {
            if two_n != 2 * n {
                return Err(mismatch("2N", two_n, 2 * n));
            }
        }
        if let Some(mi) = exp.inputs {
            if mi != f.ncols() {
                return Err(mismatch("m", mi, f.ncols()));
            }
        }
        if let Some(p) = exp.outputs {
            if p != g.nrows() {
                return Err(mismatch("p", p, g.nrows()));
            }
        }
        if let Some(r) = exp.reduced_first_order {
            if r % 2 != 0 || r == 0 || r >= 2 * n {
                return Err(mismatch("2n", format!("even and in [2, {})", 2 * n), r));
            }
        }
    }
    SecondOrderSystem::new(m, d, k, f, g, spec.domain()?)
}

pub fn load_benchmark(path: &Path) -> Result<(BenchmarkSpec, SecondOrderSystem)> {
    let spec = BenchmarkSpec::from_file(path)?;
    let sys = load_matrix_market(&spec)?;
    Ok((spec, sys))
}

/// Writes `<prefix>_M.mtx` ... `<prefix>_G.mtx` into `dir`.
pub fn write_quintuplet(dir: &Path, prefix: &str, sys: &SecondOrderSystem) -> Result<BTreeMap<String, PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = BTreeMap::new();
    for (role, a) in ROLES.iter().zip([sys.mass(), sys.damping(), sys.stiffness(), sys.input(), sys.output()]) {
        let file = format!("{prefix}_{role}.mtx");
        write_matrix_market(&dir.join(&file), a)?;
        paths.insert(role.to_string(), PathBuf::from(file));
    }
    Ok(paths)
}

/// Writes the five matrices plus `<prefix>.toml` and returns the path of the TOML file.
pub fn write_benchmark(dir: &Path, name: &str, sys: &SecondOrderSystem) -> Result<PathBuf> {
    let paths = write_quintuplet(dir, name, sys)?;
    let (domain, h) = match sys.domain() {
        Domain::Continuous => ("continuous".to_string(), None),
        Domain::Discrete { h } => ("discrete".to_string(), Some(h)),
    };
    let spec = BenchmarkSpec {
        name: name.to_string(),
        domain,
        h,
        paths,
        expected_dims: Some(ExpectedDims {
            first_order: Some(2 * sys.states()),
            inputs: Some(sys.input().ncols()),
            outputs: Some(sys.output().nrows()),
            reduced_first_order: None,
        }),
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, spec.to_toml())?;
    Ok(path)
}
