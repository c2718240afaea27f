//! Sparsity-level bookkeeping: the combined group norm, the model-complexity
//! penalty used by the solver's selection criterion, and the rate constants
//! that drive the threshold schedule's stopping guards.
//!
//! All logarithms are natural; the constants only cohere in base `e`.

use alloc::format;

use crate::error::{Error, Result};
use crate::sparse::SparseCoefficients;

/// `max(group nonzeros, element nonzeros / s0)`: the effective number of
/// active groups once the per-group budget `s0` is accounted for. Fractional
/// values are kept exact.
pub fn double_sparse_norm(beta: &SparseCoefficients, s0: usize) -> Result<f64> {
    if s0 == 0 {
        return Err(Error::InvalidArgument("s0 must be at least 1".into()));
    }
    Ok(combined_group_norm(beta.nnz(), beta.group_nnz(), s0))
}

pub(crate) fn combined_group_norm(nnz: usize, group_nnz: usize, s0: usize) -> f64 {
    let by_budget = nnz as f64 / s0 as f64;
    (group_nnz as f64).max(by_budget)
}

/// `ln(e * a / b) = 1 + ln(a / b)` for positive `a, b`.
pub(crate) fn ln_e_ratio(a: f64, b: f64) -> f64 {
    1.0 + libm::log(a / b)
}

/// Model-complexity penalty of a coefficient vector at within-group level
/// `s0`, for a layout of `m` groups with maximum size `d`:
/// `g * ln(e*m/g) + s0 * g * ln(e*d/s0)` where `g` is the combined group
/// norm; defined as 0 at `g = 0` (the continuous limit).
pub fn omega(beta: &SparseCoefficients, s0: usize, m: usize, d: usize) -> Result<f64> {
    omega_from_counts(beta.nnz(), beta.group_nnz(), s0, m, d)
}

pub(crate) fn omega_from_counts(
    nnz: usize,
    group_nnz: usize,
    s0: usize,
    m: usize,
    d: usize,
) -> Result<f64> {
    if s0 == 0 || d == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "omega needs s0 >= 1, m >= 1, d >= 1".into(),
        ));
    }
    if s0 > d {
        return Err(Error::InvalidArgument(format!(
            "s0 = {} exceeds the maximum group size {}",
            s0, d
        )));
    }
    let g = combined_group_norm(nnz, group_nnz, s0);
    if g == 0.0 {
        return Ok(0.0);
    }
    if g > m as f64 {
        return Err(Error::InvalidState(format!(
            "combined group norm {} exceeds the group count {}",
            g, m
        )));
    }
    Ok(g * ln_e_ratio(m as f64, g) + s0 as f64 * g * ln_e_ratio(d as f64, s0 as f64))
}

/// The pair of rate constants for a sparsity shape. `delta` needs the true
/// group sparsity `s` and is only available when `s` is supplied; the
/// adaptive procedure runs on `delta_prime`, which does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaConstants {
    /// `(1/s0) ln(e*m/s) + ln(e*d/s0)`; `None` when `s` was not supplied.
    pub delta: Option<f64>,
    /// `(1/s0) ln(e*m) + ln(e*d/s0)`.
    pub delta_prime: f64,
}

/// Compute the rate constants for `m` groups of maximum size `d` at
/// within-group level `s0`, optionally with the group sparsity `s`.
pub fn delta_constants(s: Option<usize>, s0: usize, m: usize, d: usize) -> Result<DeltaConstants> {
    if s0 == 0 || s0 > d {
        return Err(Error::InvalidArgument(format!(
            "s0 = {} must lie in [1, {}]",
            s0, d
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let tail = ln_e_ratio(d as f64, s0 as f64);
    let delta_prime = ln_e_ratio(m as f64, 1.0) / s0 as f64 + tail;
    let delta = match s {
        None => None,
        Some(s) => {
            if s == 0 || s > m {
                return Err(Error::InvalidArgument(format!(
                    "s = {} must lie in [1, {}]",
                    s, m
                )));
            }
            Some(ln_e_ratio(m as f64, s as f64) / s0 as f64 + tail)
        }
    };
    Ok(DeltaConstants { delta, delta_prime })
}
