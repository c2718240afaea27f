//! Partition of predictor indices into non-overlapping groups.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Contiguous partition of `p` coefficients into `m` groups.
///
/// Group `j` owns the index range `offsets[j] .. offsets[j] + sizes[j]`; the
/// ranges tile `0..p` exactly. Non-contiguous layouts are handled at ingestion
/// by [`GroupLayout`], which permutes columns into this canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    p: usize,
    max_size: usize,
}

impl GroupStructure {
    /// Build from per-group sizes. Errors on an empty list or a zero size.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidArgument("group size list is empty".into()));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut p = 0usize;
        let mut max_size = 0usize;
        for (j, &sz) in sizes.iter().enumerate() {
            if sz == 0 {
                return Err(Error::InvalidArgument(format!("group {} has size 0", j)));
            }
            offsets.push(p);
            p += sz;
            max_size = max_size.max(sz);
        }
        Ok(GroupStructure {
            sizes: sizes.to_vec(),
            offsets,
            p,
            max_size,
        })
    }

    /// `m` groups of identical size `d` (the layout used by the synthetic
    /// experiments).
    pub fn equal_sized(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::InvalidArgument(
                "equal-sized structure needs m >= 1 and d >= 1".into(),
            ));
        }
        let sizes = alloc::vec![d; m];
        Self::from_sizes(&sizes)
    }

    /// Number of groups `m`.
    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of coefficients `p`.
    pub fn n_coefficients(&self) -> usize {
        self.p
    }

    /// Largest group size `d`.
    pub fn max_group_size(&self) -> usize {
        self.max_size
    }

    /// Size of group `g`.
    pub fn size(&self, g: usize) -> usize {
        self.sizes[g]
    }

    /// Index range owned by group `g`.
    pub fn range(&self, g: usize) -> core::ops::Range<usize> {
        let start = self.offsets[g];
        start..start + self.sizes[g]
    }

    /// Group owning coefficient `i`.
    pub fn group_of(&self, i: usize) -> usize {
        debug_assert!(i < self.p);
        match self.offsets.binary_search(&i) {
            Ok(g) => g,
            Err(ins) => ins - 1,
        }
    }

    /// Iterate `(group index, index range)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, core::ops::Range<usize>)> + '_ {
        (0..self.sizes.len()).map(move |g| (g, self.range(g)))
    }
}

/// Group specification as read from a JSON file: either per-group sizes
/// (columns already contiguous) or a per-column group id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupSpec {
    /// `{"sizes": [..]}` — group `j` owns the next `sizes[j]` columns.
    Sizes(Vec<usize>),
    /// `{"membership": [..]}` — entry `i` is the group id of column `i`.
    Membership(Vec<usize>),
}

/// A [`GroupStructure`] plus the column permutation that maps the canonical
/// contiguous layout back to the caller's original column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    structure: GroupStructure,
    /// `order[k]` = original column index of layout column `k`; `None` when
    /// the original order is already contiguous.
    order: Option<Vec<usize>>,
    /// Original group label per layout group (ascending). Identity `0..m`
    /// for the sizes form.
    group_ids: Vec<usize>,
}

impl GroupLayout {
    /// Resolve a [`GroupSpec`]. The membership form sorts columns stably by
    /// (group id, original position) and records the permutation; group ids
    /// may be arbitrary non-negative integers and appear in ascending order.
    pub fn from_spec(spec: &GroupSpec) -> Result<Self> {
        match spec {
            GroupSpec::Sizes(sizes) => {
                let structure = GroupStructure::from_sizes(sizes)?;
                let group_ids = (0..structure.n_groups()).collect();
                Ok(GroupLayout {
                    structure,
                    order: None,
                    group_ids,
                })
            }
            GroupSpec::Membership(membership) => {
                if membership.is_empty() {
                    return Err(Error::InvalidArgument("membership list is empty".into()));
                }
                let mut order: Vec<usize> = (0..membership.len()).collect();
                order.sort_by_key(|&i| (membership[i], i));
                let mut group_ids = Vec::new();
                let mut sizes = Vec::new();
                for &col in &order {
                    let id = membership[col];
                    if group_ids.last() == Some(&id) {
                        *sizes.last_mut().expect("non-empty") += 1;
                    } else {
                        group_ids.push(id);
                        sizes.push(1);
                    }
                }
                let structure = GroupStructure::from_sizes(&sizes)?;
                let identity = order.iter().enumerate().all(|(k, &orig)| k == orig);
                Ok(GroupLayout {
                    structure,
                    order: if identity { None } else { Some(order) },
                    group_ids,
                })
            }
        }
    }

    /// The canonical contiguous structure.
    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    /// Column permutation (layout position -> original column), if any.
    pub fn order(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    /// Original group label of layout group `g`.
    pub fn group_id(&self, g: usize) -> usize {
        self.group_ids[g]
    }

    /// Original column index of layout column `k`.
    pub fn original_column(&self, k: usize) -> usize {
        match &self.order {
            Some(order) => order[k],
            None => k,
        }
    }

    /// Reorder design columns from original order into layout order.
    pub fn arrange_columns(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.structure.n_coefficients() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} columns but the group layout covers {}",
                x.cols(),
                self.structure.n_coefficients()
            )));
        }
        match &self.order {
            None => Ok(x.clone()),
            Some(order) => {
                let mut out = Matrix::zeros(x.rows(), x.cols());
                for (k, &orig) in order.iter().enumerate() {
                    let src = x.column(orig);
                    for i in 0..x.rows() {
                        out.set(i, k, src[i]);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Scatter a dense layout-order vector back to original column order.
    pub fn scatter_to_original(&self, layout_values: &[f64]) -> Result<Vec<f64>> {
        if layout_values.len() != self.structure.n_coefficients() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match {} columns",
                layout_values.len(),
                self.structure.n_coefficients()
            )));
        }
        match &self.order {
            None => Ok(layout_values.to_vec()),
            Some(order) => {
                let mut out = alloc::vec![0.0; layout_values.len()];
                for (k, &orig) in order.iter().enumerate() {
                    out[orig] = layout_values[k];
                }
                Ok(out)
            }
        }
    }
}
