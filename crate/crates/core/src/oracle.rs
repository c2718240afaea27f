//! Exhaustive ground-truth engines for small problems: enumerate every
//! support a double-sparse vector can have, find the best-subset least
//! squares fit over that family, and compute the restricted eigenvalue
//! extremes of the design over it.
//!
//! Everything here is deliberately brute force and guarded by a hard cap on
//! the enumeration size; the point is independent verification, not speed.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::linalg::symmetric_eigen_extremes;
use crate::solver::project_least_squares;
use crate::sparse::SparseCoefficients;

/// Refuse to enumerate families larger than this.
pub const ENUMERATION_GUARD: u64 = 10_000_000;

/// Shape of a double-sparse support family: at most `s` nonempty groups, at
/// most `s0` elements inside each, at most `s * s0` elements overall.
///
/// `s = 0` (or `s0 = 0`) is the degenerate family containing only the empty
/// support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeSpec {
    /// Maximum number of nonempty groups.
    pub s: usize,
    /// Maximum number of elements per group.
    pub s0: usize,
}

impl ShapeSpec {
    /// Construct a shape after checking it fits the group structure.
    pub fn new(s: usize, s0: usize, groups: &GroupStructure) -> Result<Self> {
        if s > groups.n_groups() {
            return Err(Error::InvalidArgument(
                "shape allows more active groups than exist".into(),
            ));
        }
        if s0 > groups.max_group_size() {
            return Err(Error::InvalidArgument(
                "per-group budget exceeds the largest group".into(),
            ));
        }
        Ok(ShapeSpec { s, s0 })
    }

    /// Total element budget `s * s0`.
    pub fn budget(&self) -> usize {
        self.s * self.s0
    }
}

/// `C(n, k)` with saturation, exact for every value the guard can admit.
fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.saturating_mul((n - k + i) as u128) / i as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of supports in the family, computed by dynamic programming over
/// groups (saturating, so oversized families still compare against the
/// guard correctly).
pub fn count_supports(groups: &GroupStructure, shape: &ShapeSpec) -> u64 {
    let m = groups.n_groups();
    // ways[a] = number of ways to fill the groups seen so far using exactly
    // `a` active groups, ignoring the total-budget cap within each column
    // (the per-group cap makes totals automatically <= a * s0 <= budget).
    let mut ways: Vec<u64> = vec![0; shape.s + 1];
    ways[0] = 1;
    for g in 0..m {
        let dg = groups.size(g);
        let mut active_options: u64 = 0;
        for j in 1..=shape.s0.min(dg) {
            active_options = active_options.saturating_add(binomial(dg, j));
        }
        for a in (1..=shape.s).rev() {
            let add = ways[a - 1].saturating_mul(active_options);
            ways[a] = ways[a].saturating_add(add);
        }
    }
    ways.iter().fold(0u64, |acc, &w| acc.saturating_add(w))
}

/// Lazy lexicographic enumeration of every support in the family, starting
/// from the empty set.
pub struct SupportEnumerator<'a> {
    groups: &'a GroupStructure,
    shape: ShapeSpec,
    current: Vec<usize>,
    group_counts: Vec<usize>,
    active: usize,
    next_candidate: usize,
    started: bool,
    done: bool,
}

impl<'a> SupportEnumerator<'a> {
    fn new(groups: &'a GroupStructure, shape: ShapeSpec) -> Self {
        SupportEnumerator {
            groups,
            shape,
            current: Vec::new(),
            group_counts: vec![0; groups.n_groups()],
            active: 0,
            next_candidate: 0,
            started: false,
            done: false,
        }
    }

    fn can_take(&self, index: usize) -> bool {
        if self.current.len() >= self.shape.budget() {
            return false;
        }
        let g = self.groups.group_of(index);
        if self.group_counts[g] >= self.shape.s0 {
            return false;
        }
        self.group_counts[g] > 0 || self.active < self.shape.s
    }
}

impl<'a> Iterator for SupportEnumerator<'a> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Vec::new());
        }
        let p = self.groups.n_coefficients();
        loop {
            // Depth-first: extend the current set with the smallest feasible
            // index not yet tried, which visits supports in lexicographic
            // order with each set preceding its supersets.
            let mut extended = false;
            for j in self.next_candidate..p {
                if self.can_take(j) {
                    let g = self.groups.group_of(j);
                    if self.group_counts[g] == 0 {
                        self.active += 1;
                    }
                    self.group_counts[g] += 1;
                    self.current.push(j);
                    self.next_candidate = j + 1;
                    extended = true;
                    break;
                }
            }
            if extended {
                return Some(self.current.clone());
            }
            // Dead end: backtrack one element and resume after it.
            match self.current.pop() {
                Some(k) => {
                    let g = self.groups.group_of(k);
                    self.group_counts[g] -= 1;
                    if self.group_counts[g] == 0 {
                        self.active -= 1;
                    }
                    self.next_candidate = k + 1;
                }
                None => {
                    self.done = true;
                    return None;
                }
            }
        }
    }
}

/// Lazy iterator over the whole family, refusing to start when the family
/// exceeds [`ENUMERATION_GUARD`].
pub fn enumerate_supports<'a>(
    groups: &'a GroupStructure,
    shape: &ShapeSpec,
) -> Result<SupportEnumerator<'a>> {
    let count = count_supports(groups, shape);
    if count > ENUMERATION_GUARD {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_GUARD,
        });
    }
    Ok(SupportEnumerator::new(groups, *shape))
}

/// Largest support size the family actually admits (the budget, unless small
/// groups cut it down).
fn max_support_size(groups: &GroupStructure, shape: &ShapeSpec) -> usize {
    let mut per_group: Vec<usize> = (0..groups.n_groups())
        .map(|g| groups.size(g).min(shape.s0))
        .collect();
    per_group.sort_unstable_by(|a, b| b.cmp(a));
    per_group
        .iter()
        .take(shape.s)
        .sum::<usize>()
        .min(shape.budget())
}

/// Exhaustive best-subset least squares over the family: the support
/// minimizing the residual sum of squares, ties broken by the
/// lexicographically smallest support.
pub fn best_subset_oracle(
    data: &Dataset,
    groups: &GroupStructure,
    shape: &ShapeSpec,
) -> Result<SparseCoefficients> {
    if groups.n_coefficients() != data.p() {
        return Err(Error::DimensionMismatch(
            "group structure does not match the design width".into(),
        ));
    }
    if max_support_size(groups, shape) > data.n() {
        return Err(Error::InvalidArgument(
            "shape admits supports larger than the sample size".into(),
        ));
    }
    let ridge = 1e-10 * data.n() as f64;
    let mut best: Option<(f64, SparseCoefficients)> = None;
    for support in enumerate_supports(groups, shape)? {
        let projection = project_least_squares(data, groups, &support, ridge)?;
        let better = match &best {
            None => true,
            // Strict improvement keeps the earliest (lexicographically
            // smallest) support on exact ties.
            Some((best_rss, _)) => projection.rss < *best_rss,
        };
        if better {
            best = Some((projection.rss, projection.coefficients));
        }
    }
    Ok(best.expect("enumeration always yields the empty support").1)
}

/// Extreme restricted eigenvalues of the design over the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsripConstants {
    /// Smallest eigenvalue of `X_S' X_S` over maximal supports.
    pub lower: f64,
    /// Largest eigenvalue of `X_S' X_S` over maximal supports.
    pub upper: f64,
    /// The isometry defect `1 - lower/upper`.
    pub ratio: f64,
}

/// Exact eigenvalue extremes of `X_S' X_S` over every maximal-size support
/// in the family. Extremes over the whole family are attained on maximal
/// supports (adding a row and column to a symmetric matrix widens its
/// spectrum), so sub-maximal supports are skipped.
pub fn dsrip_constants(
    data: &Dataset,
    groups: &GroupStructure,
    shape: &ShapeSpec,
) -> Result<DsripConstants> {
    if groups.n_coefficients() != data.p() {
        return Err(Error::DimensionMismatch(
            "group structure does not match the design width".into(),
        ));
    }
    let k = max_support_size(groups, shape);
    if k == 0 {
        return Err(Error::InvalidArgument(
            "shape admits only the empty support".into(),
        ));
    }
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut gram = vec![0.0; k * k];
    let mut seen = false;
    for support in enumerate_supports(groups, shape)? {
        if support.len() != k {
            continue;
        }
        seen = true;
        for (a, &ja) in support.iter().enumerate() {
            let col_a = data.design().column(ja);
            for (b, &jb) in support.iter().enumerate().take(a + 1) {
                let col_b = data.design().column(jb);
                let dot: f64 = col_a.iter().zip(col_b).map(|(x, y)| x * y).sum();
                gram[a * k + b] = dot;
                gram[b * k + a] = dot;
            }
        }
        let (lo, hi) = symmetric_eigen_extremes(&gram, k);
        if lo < lower {
            lower = lo;
        }
        if hi > upper {
            upper = hi;
        }
    }
    if !seen {
        return Err(Error::InvalidState(
            "no maximal support was enumerated".into(),
        ));
    }
    Ok(DsripConstants {
        lower,
        upper,
        ratio: 1.0 - lower / upper,
    })
}
