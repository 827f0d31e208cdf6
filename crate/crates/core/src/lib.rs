//! Structure-preserving model order reduction of second-order systems
//! `M q̈ + D q̇ + K q = F u`, `y = G q` by the second-order recursive
//! low-rank Gramian (SRLRG) and Hankel (SRLRH) iterations.
//!
//! Pipeline: [`discretization::discretize`] the model, run
//! [`recursion::run_recursion`] to get dominant subspaces `S` and `R`,
//! build a biorthogonal pair with [`projection::build_projection`] and
//! project with [`projection::reduce`]. [`metrics`] measures the result,
//! [`oracle`] holds dense reference computations and [`bench`] handles
//! file formats, synthetic models and the command-line pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod projection;
pub mod recursion;

pub use discretization::{discretize, inverse_discretize, Scheme};
pub use error::{Error, Result};
pub use metrics::{frequency_response, rre, FrequencyGrid, FrequencyResponse, RreMode};
pub use model::{Domain, FirstOrderSystem, SecondOrderSystem, StabilityReport, TransferFunction};
pub use projection::{build_projection, reduce, verify_structure_conditions, ProjectionPair};
pub use recursion::{run_recursion, Algorithm, RecursionConfig, StopRule, SubspaceWindow};
