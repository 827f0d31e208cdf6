//! Runs the code blocks of the book in `book/src` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/discretization.md")]
pub mod discretization {}
#[doc = include_str!("../../../book/src/recursion.md")]
pub mod recursion {}
#[doc = include_str!("../../../book/src/projection.md")]
pub mod projection {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
