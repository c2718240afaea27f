//! Double sparse linear regression by adaptive iterative hard thresholding.
//!
//! The estimator targets coefficient vectors that are sparse at two levels at
//! once: few active groups, and few active entries inside each active group.
//! The solver alternates a gradient step with a two-stage hard-thresholding
//! operator, refits by least squares on the surviving support, and walks a
//! geometrically decaying threshold schedule; a complexity-penalized criterion
//! picks the final iterate. An adaptive wrapper sweeps the within-group
//! sparsity level and selects it by an information criterion.
//!
//! The crate is `no_std` (with `alloc`); all I/O lives in the companion CLI
//! crate. Exhaustive tiny-scale oracles (best-subset search, restricted
//! isometry constants) are included for validation.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adaptive;
pub mod complexity;
pub mod data;
pub mod error;
pub mod groups;
mod linalg;
pub mod matrix;
pub mod operator;
pub mod oracle;
pub mod simulate;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
