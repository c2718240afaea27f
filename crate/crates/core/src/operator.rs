//! The two-stage hard-thresholding operator: an element-wise cut at `lambda`
//! followed by a group-wise cut at squared norm `s0 * lambda^2`, with the
//! group norms taken on the element-thresholded vector. Survivors pass
//! through unchanged; ties are kept at both stages (`>=` comparisons, no
//! epsilon adjustment).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::sparse::SparseCoefficients;

/// Threshold level and within-group sparsity scale for one application of the
/// operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    /// Element threshold, in coefficient units.
    pub lambda: f64,
    /// Within-group sparsity scale; the group cut is at `s0 * lambda^2`.
    pub s0: usize,
}

impl ThresholdParams {
    /// Validated constructor.
    pub fn new(lambda: f64, s0: usize) -> Result<Self> {
        let params = ThresholdParams { lambda, s0 };
        params.validate()?;
        Ok(params)
    }

    /// Check `lambda >= 0` (finite) and `s0 >= 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold must be a finite nonnegative number, got {}",
                self.lambda
            )));
        }
        if self.s0 == 0 {
            return Err(Error::InvalidArgument("s0 must be at least 1".into()));
        }
        Ok(())
    }
}

/// Keep entries with `|v_i| >= lambda`, zero the rest.
pub fn hard_threshold_elementwise(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be a finite nonnegative number, got {}",
            lambda
        )));
    }
    Ok(v.iter()
        .map(|&x| if x.abs() >= lambda { x } else { 0.0 })
        .collect())
}

/// Keep whole groups whose squared norm reaches `s0 * lambda^2`, zero the
/// rest. Applied directly to `v` (no element-wise cut).
pub fn hard_threshold_groupwise(
    v: &[f64],
    params: ThresholdParams,
    groups: &GroupStructure,
) -> Result<Vec<f64>> {
    params.validate()?;
    if v.len() != groups.n_coefficients() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} does not match {} coefficients",
            v.len(),
            groups.n_coefficients()
        )));
    }
    let cut = params.s0 as f64 * params.lambda * params.lambda;
    let mut out = alloc::vec![0.0; v.len()];
    for (_, range) in groups.iter() {
        let norm_sq: f64 = v[range.clone()].iter().map(|x| x * x).sum();
        if norm_sq >= cut {
            out[range.clone()].copy_from_slice(&v[range]);
        }
    }
    Ok(out)
}

/// The composed operator: element-wise cut first, then the group-wise cut on
/// the element-thresholded vector. The result carries exact support
/// bookkeeping.
pub fn double_sparse_threshold(
    v: &[f64],
    params: ThresholdParams,
    groups: &GroupStructure,
) -> Result<SparseCoefficients> {
    let stage_one = hard_threshold_elementwise(v, params.lambda)?;
    let stage_two = hard_threshold_groupwise(&stage_one, params, groups)?;
    SparseCoefficients::from_dense(stage_two, groups)
}
