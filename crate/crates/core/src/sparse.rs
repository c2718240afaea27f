//! Coefficient vectors with exact element- and group-support bookkeeping.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::groups::GroupStructure;

/// A dense coefficient vector together with its exact support at both levels.
///
/// Invariants, guaranteed by construction: `support` is exactly the sorted set
/// of positions with a nonzero value, and `group_support` is exactly the
/// sorted set of groups containing at least one such position. The two counts
/// are the element-wise and group-wise sparsity levels of the vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    values: Vec<f64>,
    support: Vec<usize>,
    group_support: Vec<usize>,
}

impl SparseCoefficients {
    /// The zero vector of length `p`.
    pub fn zeros(p: usize) -> Self {
        SparseCoefficients {
            values: alloc::vec![0.0; p],
            support: Vec::new(),
            group_support: Vec::new(),
        }
    }

    /// Wrap a dense vector, deriving both supports from its nonzero pattern.
    pub fn from_dense(values: Vec<f64>, groups: &GroupStructure) -> Result<Self> {
        if values.len() != groups.n_coefficients() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match {} coefficients",
                values.len(),
                groups.n_coefficients()
            )));
        }
        let mut support = Vec::new();
        let mut group_support = Vec::new();
        for (g, range) in groups.iter() {
            let before = support.len();
            for i in range {
                if values[i] != 0.0 {
                    support.push(i);
                }
            }
            if support.len() > before {
                group_support.push(g);
            }
        }
        Ok(SparseCoefficients {
            values,
            support,
            group_support,
        })
    }

    /// Build from `(support, values_on_support)` pairs; indices must be unique
    /// and in range. Exact zero values are dropped so the invariant holds.
    pub fn from_support(
        p: usize,
        support: &[usize],
        values_on_support: &[f64],
        groups: &GroupStructure,
    ) -> Result<Self> {
        if p != groups.n_coefficients() {
            return Err(Error::DimensionMismatch(format!(
                "length {} does not match {} coefficients",
                p,
                groups.n_coefficients()
            )));
        }
        if support.len() != values_on_support.len() {
            return Err(Error::DimensionMismatch(format!(
                "support has {} indices but {} values were supplied",
                support.len(),
                values_on_support.len()
            )));
        }
        let mut dense = alloc::vec![0.0; p];
        for (&i, &v) in support.iter().zip(values_on_support) {
            if i >= p {
                return Err(Error::InvalidArgument(format!(
                    "support index {} out of range for length {}",
                    i, p
                )));
            }
            if dense[i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "support index {} appears more than once",
                    i
                )));
            }
            dense[i] = v;
        }
        Self::from_dense(dense, groups)
    }

    /// Dense values, length `p`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sorted indices of nonzero entries.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Sorted indices of groups with at least one nonzero entry.
    pub fn group_support(&self) -> &[usize] {
        &self.group_support
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    /// Number of groups with at least one nonzero entry.
    pub fn group_nnz(&self) -> usize {
        self.group_support.len()
    }

    /// Vector length `p`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when every entry is zero.
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Entry at position `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Values gathered on the support, parallel to [`Self::support`].
    pub fn support_values(&self) -> Vec<f64> {
        self.support.iter().map(|&i| self.values[i]).collect()
    }

    /// Euclidean norm.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for &i in &self.support {
            acc += self.values[i] * self.values[i];
        }
        libm::sqrt(acc)
    }
}
