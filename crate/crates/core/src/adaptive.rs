//! The adaptive layer: run the fitting pass once per candidate within-group
//! sparsity level `s0`, score each candidate with an information criterion,
//! and keep the winner.
//!
//! Two criteria are available. The default reuses each candidate's own
//! complexity-penalized objective at its selected iterate, evaluated with the
//! candidate's `s0`. The alternative is an extended BIC that penalizes the
//! number of models of the same size, which makes candidates comparable on a
//! common scale.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::solver::{dsiht_fit, FitResult, SolverConfig};

/// Which information criterion ranks the grid candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcKind {
    /// Each candidate's own selection objective at its chosen iterate.
    #[serde(rename = "sgc")]
    SparseGroupCriterion,
    /// Extended BIC: `n ln(RSS/n) + k ln n + 2 gamma ln C(p, k)`.
    Ebic,
}

/// Diagnostics for one grid candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSummary {
    /// The candidate's within-group sparsity level.
    pub s0: usize,
    /// Its information-criterion value (negative infinity for an
    /// interpolating fit under the extended BIC).
    pub ic_value: f64,
    /// Number of nonzero coefficients in the candidate's fit.
    pub support_size: usize,
    /// Number of active groups in the candidate's fit.
    pub group_support_size: usize,
    /// The iterate index the candidate's pass selected.
    pub selected_iteration: usize,
    /// The candidate's noise proxy from its phase boundary.
    pub sigma_bar: f64,
    /// Residual sum of squares of the candidate's fit.
    pub rss: f64,
    /// True when the fit interpolates (zero residual), which sends the
    /// extended BIC to its sentinel value.
    pub interpolating: bool,
}

/// Outcome of the grid sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    /// The winning fit.
    pub best: FitResult,
    /// One summary per grid candidate, in ascending `s0` order.
    pub per_candidate: Vec<CandidateSummary>,
    /// The criterion that ranked the candidates.
    pub ic_kind: IcKind,
}

impl AdaptiveResult {
    /// The `s0` the sweep settled on.
    pub fn selected_s0(&self) -> usize {
        self.best.s0_used
    }
}

/// Candidate levels tried when the caller does not supply a grid: every
/// integer up to the maximum group size when that is small, otherwise powers
/// of two plus the maximum itself.
pub fn default_s0_grid(d: usize) -> Vec<usize> {
    if d == 0 {
        return Vec::new();
    }
    if d <= 20 {
        return (1..=d).collect();
    }
    let mut grid = Vec::new();
    let mut v = 1;
    while v < d {
        grid.push(v);
        v *= 2;
    }
    grid.push(d);
    grid
}

/// Natural log of the binomial coefficient C(p, k), summed term by term so
/// large `p` cannot overflow.
fn ln_binomial(p: usize, k: usize) -> f64 {
    let k = k.min(p - k.min(p));
    let mut acc = 0.0;
    for i in 1..=k {
        acc += libm::log((p - k + i) as f64 / i as f64);
    }
    acc
}

/// Extended BIC of a fitted model:
/// `n ln(RSS/n) + k ln n + 2 gamma ln C(p, k)` with `k` the number of nonzero
/// coefficients. An interpolating fit (RSS = 0) returns negative infinity;
/// callers should treat that as "model explains everything" and flag it.
pub fn ebic(fit: &FitResult, data: &Dataset, gamma: f64) -> f64 {
    ebic_from_parts(fit.rss(), fit.coefficients.nnz(), data.n(), data.p(), gamma)
}

/// The extended BIC formula on raw ingredients.
pub fn ebic_from_parts(rss: f64, k: usize, n: usize, p: usize, gamma: f64) -> f64 {
    if rss <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n_f = n as f64;
    n_f * libm::log(rss / n_f) + k as f64 * libm::log(n_f) + 2.0 * gamma * ln_binomial(p, k)
}

/// Sweep `s0` over a grid, fit each level independently, and return the
/// candidate minimizing the chosen criterion. Ties go to the smaller `s0`.
///
/// `s0_grid = None` uses [`default_s0_grid`]. The `s0` field of `config` is
/// ignored; every other field applies to every candidate.
pub fn adsiht_fit(
    data: &Dataset,
    groups: &GroupStructure,
    s0_grid: Option<&[usize]>,
    ic_kind: IcKind,
    config: &SolverConfig,
) -> Result<AdaptiveResult> {
    let d = groups.max_group_size();
    let mut grid: Vec<usize> = match s0_grid {
        Some(g) => {
            for &s0 in g {
                if s0 == 0 || s0 > d {
                    return Err(Error::InvalidArgument(format!(
                        "grid entry {} outside [1, {}]",
                        s0, d
                    )));
                }
            }
            g.to_vec()
        }
        None => default_s0_grid(d),
    };
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "the s0 grid is empty after validation".into(),
        ));
    }

    let mut best: Option<(f64, FitResult)> = None;
    let mut per_candidate = Vec::with_capacity(grid.len());
    for &s0 in &grid {
        let candidate_config = SolverConfig {
            s0,
            ..config.clone()
        };
        let fit = dsiht_fit(data, groups, &candidate_config)?;
        let rss = fit.rss();
        let ic_value = match ic_kind {
            IcKind::SparseGroupCriterion => fit.criterion(),
            IcKind::Ebic => ebic(&fit, data, 1.0),
        };
        per_candidate.push(CandidateSummary {
            s0,
            ic_value,
            support_size: fit.coefficients.nnz(),
            group_support_size: fit.coefficients.group_nnz(),
            selected_iteration: fit.trace.selected,
            sigma_bar: fit.sigma_bar,
            rss,
            interpolating: rss <= 0.0,
        });
        // Strict improvement keeps the first (smallest-s0) minimizer on ties.
        let improves = match &best {
            None => true,
            Some((best_ic, _)) => ic_value < *best_ic,
        };
        if improves {
            best = Some((ic_value, fit));
        }
    }
    let (_, best_fit) = best.expect("grid is nonempty, so at least one candidate was fitted");
    Ok(AdaptiveResult {
        best: best_fit,
        per_candidate,
        ic_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::solver::dsiht_fit;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn orthogonal_instance(
        n: usize,
        groups: &GroupStructure,
        signal: &[(usize, f64)],
        noise: f64,
        seed: u64,
    ) -> Dataset {
        let p = groups.n_coefficients();
        assert!(p <= n);
        let mut x = Matrix::zeros(n, p);
        let v = libm::sqrt(n as f64);
        for j in 0..p {
            x.set(j, j, v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![0.0; n];
        for i in 0..n {
            for &(j, b) in signal {
                y[i] += x.get(i, j) * b;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            y[i] += noise * z;
        }
        Dataset::standardize(x, y).unwrap()
    }

    #[test]
    fn default_grid_shapes() {
        assert_eq!(default_s0_grid(1), vec![1]);
        assert_eq!(default_s0_grid(3), vec![1, 2, 3]);
        assert_eq!(default_s0_grid(20), (1..=20).collect::<Vec<_>>());
        assert_eq!(default_s0_grid(21), vec![1, 2, 4, 8, 16, 21]);
        assert_eq!(default_s0_grid(64), vec![1, 2, 4, 8, 16, 32, 64]);
        assert!(default_s0_grid(0).is_empty());
    }

    #[test]
    fn ln_binomial_hand_values() {
        assert!(close(ln_binomial(10, 2), libm::log(45.0), 1e-13));
        assert!(close(ln_binomial(10, 8), libm::log(45.0), 1e-13));
        assert_eq!(ln_binomial(7, 0), 0.0);
        assert_eq!(ln_binomial(7, 7), 0.0);
        assert!(close(ln_binomial(5000, 3), libm::log(5000.0 * 4999.0 * 4998.0 / 6.0), 1e-12));
    }

    #[test]
    fn ebic_formula_hand_value() {
        // k=2, n=100, p=10, gamma=1, RSS/n = 1:
        // 100*ln(1) + 2*ln(100) + 2*ln(45) = 9.2103 + 7.6133 = 16.8237.
        let got = ebic_from_parts(100.0, 2, 100, 10, 1.0);
        assert!(close(got, 16.823665351516827, 1e-12));
        // gamma = 0 drops the combinatorial term.
        let got0 = ebic_from_parts(100.0, 2, 100, 10, 0.0);
        assert!(close(got0, 2.0 * libm::log(100.0), 1e-12));
    }

    #[test]
    fn ebic_zero_fit_and_interpolation() {
        // Empty model: value reduces to n*ln(||y||^2/n).
        let g = GroupStructure::from_sizes(&[2, 2]).unwrap();
        let data = orthogonal_instance(40, &g, &[], 1.0, 3);
        let fit = dsiht_fit(&data, &g, &SolverConfig::default()).unwrap();
        assert!(fit.coefficients.is_empty());
        let want = 40.0 * libm::log(fit.rss() / 40.0);
        assert!(close(ebic(&fit, &data, 1.0), want, 1e-12));
        // Interpolating fit hits the sentinel.
        assert_eq!(ebic_from_parts(0.0, 3, 10, 5, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn singleton_grid_matches_plain_fit() {
        let g = GroupStructure::from_sizes(&[3, 3]).unwrap();
        let data = orthogonal_instance(120, &g, &[(0, 4.0), (1, 4.0)], 0.2, 17);
        let config = SolverConfig {
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        let direct = dsiht_fit(
            &data,
            &g,
            &SolverConfig {
                s0: 2,
                ..config.clone()
            },
        )
        .unwrap();
        let adaptive =
            adsiht_fit(&data, &g, Some(&[2]), IcKind::SparseGroupCriterion, &config).unwrap();
        assert_eq!(adaptive.best, direct);
        assert_eq!(adaptive.per_candidate.len(), 1);
        assert_eq!(adaptive.per_candidate[0].s0, 2);
        assert_eq!(adaptive.selected_s0(), 2);
    }

    #[test]
    fn grid_validation() {
        let g = GroupStructure::from_sizes(&[3, 3]).unwrap();
        let data = orthogonal_instance(20, &g, &[(0, 2.0)], 0.5, 5);
        let config = SolverConfig::default();
        assert!(adsiht_fit(&data, &g, Some(&[]), IcKind::Ebic, &config).is_err());
        assert!(adsiht_fit(&data, &g, Some(&[0]), IcKind::Ebic, &config).is_err());
        assert!(adsiht_fit(&data, &g, Some(&[4]), IcKind::Ebic, &config).is_err());
        // Duplicates collapse.
        let r = adsiht_fit(&data, &g, Some(&[2, 2, 1]), IcKind::Ebic, &config).unwrap();
        assert_eq!(r.per_candidate.len(), 2);
        assert_eq!(r.per_candidate[0].s0, 1);
        assert_eq!(r.per_candidate[1].s0, 2);
    }

    #[test]
    fn sweep_is_deterministic() {
        let g = GroupStructure::from_sizes(&[3, 3, 3]).unwrap();
        let data = orthogonal_instance(150, &g, &[(0, 3.0), (1, 3.0), (4, 2.0)], 0.5, 29);
        let config = SolverConfig {
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        let a = adsiht_fit(&data, &g, None, IcKind::SparseGroupCriterion, &config).unwrap();
        let b = adsiht_fit(&data, &g, None, IcKind::SparseGroupCriterion, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recovery_on_orthogonal_design_with_default_grid() {
        let g = GroupStructure::from_sizes(&[3, 3, 3, 3]).unwrap();
        let data = orthogonal_instance(
            240,
            &g,
            &[(0, 5.0), (1, 5.0), (6, 5.0), (7, 5.0)],
            0.1,
            99,
        );
        let config = SolverConfig {
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        for ic in [IcKind::SparseGroupCriterion, IcKind::Ebic] {
            let r = adsiht_fit(&data, &g, None, ic, &config).unwrap();
            assert_eq!(r.best.coefficients.support(), &[0, 1, 6, 7]);
            assert_eq!(r.per_candidate.len(), 3);
        }
    }

    #[test]
    fn response_scaling_preserves_selection_for_both_criteria() {
        let g = GroupStructure::from_sizes(&[3, 3, 3]).unwrap();
        let base = orthogonal_instance(180, &g, &[(0, 3.0), (1, 3.0), (6, 2.5)], 0.4, 41);
        let config = SolverConfig {
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        let c = 7.0;
        let scaled = {
            let mut x = Matrix::zeros(180, 9);
            for j in 0..9 {
                for i in 0..180 {
                    x.set(i, j, base.design().get(i, j));
                }
            }
            let y: Vec<f64> = base.response().iter().map(|&v| c * v).collect();
            Dataset::standardize(x, y).unwrap()
        };
        let n_f = 180.0;
        for ic in [IcKind::SparseGroupCriterion, IcKind::Ebic] {
            let a = adsiht_fit(&base, &g, None, ic, &config).unwrap();
            let b = adsiht_fit(&scaled, &g, None, ic, &config).unwrap();
            assert_eq!(a.selected_s0(), b.selected_s0());
            assert_eq!(a.best.coefficients.support(), b.best.coefficients.support());
            for (ca, cb) in a.per_candidate.iter().zip(&b.per_candidate) {
                match ic {
                    // Candidate objectives scale by c^2...
                    IcKind::SparseGroupCriterion => {
                        assert!(close(cb.ic_value, c * c * ca.ic_value, 1e-8));
                    }
                    // ...while EBIC values shift by the common n*ln(c^2).
                    IcKind::Ebic => {
                        let shift = n_f * libm::log(c * c);
                        assert!(close(cb.ic_value - ca.ic_value, shift, 1e-8));
                    }
                }
            }
        }
    }
}
