//! Benchmark data, synthetic models, run configuration and the
//! command-line pipeline.

pub mod cli;
pub mod config;
pub mod mtx;
pub mod pipeline;
pub mod spec;
pub mod synthetic;

pub use config::RunConfig;
pub use mtx::{read_matrix_market, write_matrix_market};
pub use spec::{load_benchmark, load_matrix_market, BenchmarkSpec};
pub use synthetic::{generate_msd_chain, random_stable_discrete};
