//! The core fitting procedure: gradient step, two-stage thresholding with a
//! geometrically decaying schedule, least-squares refit on the surviving
//! support, two data-driven stopping phases, and criterion-based selection of
//! the final iterate.
//!
//! One pass works as follows. Starting from the zero iterate and a threshold
//! `lambda_0` computed from the data, each step forms the landing vector
//! `H = beta + X^T (y - X beta) / n`, applies the two-stage threshold at the
//! current `lambda_t`, refits by least squares on the surviving support
//! (debiasing), and decays `lambda_{t+1} = sqrt(kappa) * lambda_t`. Phase one
//! runs while `lambda_t >= (8 sigma_t / sqrt(n)) * sqrt(delta')`; its exit
//! index is the phase boundary and freezes the noise proxy `sigma_bar`.
//! Phase two continues while `lambda_t >= 4 sigma_bar / sqrt(n)`, scoring
//! every iterate with the complexity-penalized criterion
//! `RSS/n + criterion_constant * sigma_bar^2 * omega(beta) / n`; the iterate
//! minimizing it is returned.

use alloc::format;
use alloc::vec::Vec;

use crate::complexity::{delta_constants, omega_from_counts};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::linalg::{dot, norm_squared, solve_spd};
use crate::operator::{double_sparse_threshold, ThresholdParams};
use crate::sparse::SparseCoefficients;

/// Tunables of a single fitting pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Threshold decay: `lambda_{t+1} = sqrt(kappa) * lambda_t`. In (0,1).
    pub kappa: f64,
    /// Within-group sparsity scale used by the threshold operator.
    pub s0: usize,
    /// Multiplier on the complexity penalty in the selection criterion.
    pub criterion_constant: f64,
    /// Hard cap on iterations across both phases; hitting it is reported via
    /// the `truncated` flag, never silent.
    pub max_iterations: usize,
    /// Ridge added to the normal equations when a projection system is
    /// numerically rank-deficient; `None` means `1e-10 * n`.
    pub projection_ridge: Option<f64>,
    /// Ask the data-ingestion layer to center columns and response before
    /// standardizing. The solver itself never centers; fits on centered data
    /// report an intercept.
    pub center: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kappa: 0.9,
            s0: 1,
            criterion_constant: 1000.0,
            max_iterations: 500,
            projection_ridge: None,
            center: false,
        }
    }
}

impl SolverConfig {
    /// Same defaults with a different within-group scale.
    pub fn with_s0(s0: usize) -> Self {
        SolverConfig {
            s0,
            ..SolverConfig::default()
        }
    }

    /// Validate field ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must lie strictly inside (0, 1), got {}",
                self.kappa
            )));
        }
        if self.s0 == 0 {
            return Err(Error::InvalidArgument("s0 must be at least 1".into()));
        }
        if !(self.criterion_constant > 0.0) || !self.criterion_constant.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "criterion constant must be positive and finite, got {}",
                self.criterion_constant
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        if let Some(r) = self.projection_ridge {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "projection ridge must be a finite nonnegative number, got {}",
                    r
                )));
            }
        }
        Ok(())
    }
}

/// One row of the iteration trace.
///
/// The record at index `t` describes iterate `t`: `lambda` is the schedule
/// value `lambda_t` (the threshold that the *next* step would apply), while
/// `threshold_used` is the `lambda_{t-1}` that produced this iterate (absent
/// at `t = 0`). `screened_*` capture the thresholded vector before the
/// least-squares refit.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Iteration index.
    pub t: usize,
    /// Schedule value `lambda_t`.
    pub lambda: f64,
    /// Residual scale `sigma_t = ||y - X beta_t|| / sqrt(n)`.
    pub sigma: f64,
    /// Residual sum of squares of this iterate.
    pub rss: f64,
    /// Selection criterion; present exactly on the phase-two search range.
    pub criterion: Option<f64>,
    /// Support of the (refitted) iterate, ascending.
    pub support: Vec<usize>,
    /// Values on `support`.
    pub values: Vec<f64>,
    /// Number of groups active in the iterate.
    pub group_support_size: usize,
    /// Threshold that produced this iterate; `None` at `t = 0`.
    pub threshold_used: Option<f64>,
    /// Support surviving the threshold, before the refit.
    pub screened_support: Vec<usize>,
    /// Values on `screened_support` (entries of the landing vector).
    pub screened_values: Vec<f64>,
    /// Whether this iterate's refit needed the ridge fallback.
    pub ridged: bool,
}

impl TraceRecord {
    /// Number of nonzero entries in the iterate.
    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

/// Complete iteration history of one fitting pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    /// One record per iterate, indexed by `t`.
    pub records: Vec<TraceRecord>,
    /// Phase-one exit index (freezes `sigma_bar`).
    pub phase_boundary: usize,
    /// Last iterate index; the criterion search covers
    /// `phase_boundary..=horizon`.
    pub horizon: usize,
    /// Criterion-minimizing index (first minimum on ties).
    pub selected: usize,
    /// True when the iteration cap stopped the schedule early.
    pub truncated: bool,
}

impl SolverTrace {
    /// The record of the selected iterate.
    pub fn selected_record(&self) -> &TraceRecord {
        &self.records[self.selected]
    }
}

/// A fitted model: the selected iterate plus everything needed to interpret
/// and audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Selected coefficients on the standardized scale.
    pub coefficients: SparseCoefficients,
    /// Dense coefficients mapped back to the original column scale.
    pub coefficients_original_scale: Vec<f64>,
    /// Intercept on the original scale; present iff the data were centered.
    pub intercept: Option<f64>,
    /// Full iteration history.
    pub trace: SolverTrace,
    /// Noise proxy frozen at the phase boundary.
    pub sigma_bar: f64,
    /// Within-group scale the pass ran with.
    pub s0_used: usize,
    /// True when any projection along the path needed the ridge fallback.
    pub ridged: bool,
    /// True when the iteration cap stopped the schedule early.
    pub truncated: bool,
}

impl FitResult {
    /// Residual sum of squares of the selected iterate.
    pub fn rss(&self) -> f64 {
        self.trace.selected_record().rss
    }

    /// Criterion value of the selected iterate.
    pub fn criterion(&self) -> f64 {
        self.trace
            .selected_record()
            .criterion
            .expect("selected iterate always carries a criterion value")
    }
}

/// Landing vector `H = beta + X^T (y - X beta) / n`.
pub fn gradient_step(beta: &SparseCoefficients, data: &Dataset) -> Result<Vec<f64>> {
    if beta.len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector length {} does not match {} columns",
            beta.len(),
            data.p()
        )));
    }
    let residual = data.residual(beta);
    let mut h = data.design().t_mul_vec(&residual)?;
    let n = data.n() as f64;
    for (hi, &bi) in h.iter_mut().zip(beta.values()) {
        *hi = bi + *hi / n;
    }
    Ok(h)
}

/// Data-driven starting threshold:
/// `max((100/9) * sigma_0 * sqrt(delta'/n), (19/4) * ||X^T y / n||_inf)`
/// with `sigma_0 = ||y|| / sqrt(n)`. Zero iff the response is zero.
pub fn initial_threshold(data: &Dataset, groups: &GroupStructure, s0: usize) -> Result<f64> {
    if groups.n_coefficients() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "group structure covers {} coefficients but the design has {} columns",
            groups.n_coefficients(),
            data.p()
        )));
    }
    let n = data.n() as f64;
    let dc = delta_constants(None, s0, groups.n_groups(), groups.max_group_size())?;
    let sigma0 = libm::sqrt(norm_squared(data.response()) / n);
    let m_inf = data
        .design()
        .t_mul_vec(data.response())?
        .iter()
        .fold(0.0f64, |acc, &v| acc.max((v / n).abs()));
    let by_noise = (100.0 / 9.0) * sigma0 * libm::sqrt(dc.delta_prime / n);
    let by_correlation = (19.0 / 4.0) * m_inf;
    Ok(by_noise.max(by_correlation))
}

/// Least-squares refit restricted to a support.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// The refitted coefficients (support may shrink if a solved value lands
    /// exactly on zero).
    pub coefficients: SparseCoefficients,
    /// Residual sum of squares of the refit.
    pub rss: f64,
    /// Whether the normal equations needed the ridge fallback.
    pub ridged: bool,
}

/// Minimize `||y - X beta||^2` over vectors supported on `support`.
///
/// Rank-deficient systems are retried with `ridge` on the diagonal instead of
/// failing; the flag records that. The reported RSS is always computed from
/// the actual residual.
pub fn project_least_squares(
    data: &Dataset,
    groups: &GroupStructure,
    support: &[usize],
    ridge: f64,
) -> Result<Projection> {
    let p = data.p();
    for window in support.windows(2) {
        if window[0] >= window[1] {
            return Err(Error::InvalidArgument(
                "support indices must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&last) = support.last() {
        if last >= p {
            return Err(Error::InvalidArgument(format!(
                "support index {} out of range for {} columns",
                last, p
            )));
        }
    }
    let y = data.response();
    if support.is_empty() {
        return Ok(Projection {
            coefficients: SparseCoefficients::zeros(p),
            rss: norm_squared(y),
            ridged: false,
        });
    }
    let k = support.len();
    let design = data.design();
    let mut gram = alloc::vec![0.0; k * k];
    let mut rhs = alloc::vec![0.0; k];
    for (a, &ja) in support.iter().enumerate() {
        let col_a = design.column(ja);
        rhs[a] = dot(col_a, y);
        for (b, &jb) in support.iter().enumerate().skip(a) {
            let v = dot(col_a, design.column(jb));
            gram[a + b * k] = v;
            gram[b + a * k] = v;
        }
    }
    let solution = solve_spd(&gram, &rhs, k, ridge).ok_or_else(|| {
        Error::InvalidState("projection system is not solvable (non-finite input?)".into())
    })?;
    let coefficients = SparseCoefficients::from_support(p, support, &solution.x, groups)?;
    let fitted = design.mul_support(support, &solution.x);
    let rss = y
        .iter()
        .zip(fitted)
        .map(|(&yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    Ok(Projection {
        coefficients,
        rss,
        ridged: solution.ridged,
    })
}

struct FitContext<'a> {
    data: &'a Dataset,
    groups: &'a GroupStructure,
    config: &'a SolverConfig,
    ridge: f64,
    sqrt_kappa: f64,
    n: f64,
    debias: bool,
}

struct LoopState {
    beta: SparseCoefficients,
    rss: f64,
    sigma: f64,
    lambda: f64,
    t: usize,
    records: Vec<TraceRecord>,
    any_ridged: bool,
}

/// One solver step: threshold the landing vector at the current `lambda`,
/// refit, decay the schedule, and append the new iterate's record.
fn advance(ctx: &FitContext<'_>, st: &mut LoopState) -> Result<()> {
    let landing = gradient_step(&st.beta, ctx.data)?;
    let params = ThresholdParams {
        lambda: st.lambda,
        s0: ctx.config.s0,
    };
    let screened = double_sparse_threshold(&landing, params, ctx.groups)?;
    let (beta, rss, ridged) = if ctx.debias {
        let proj = project_least_squares(ctx.data, ctx.groups, screened.support(), ctx.ridge)?;
        (proj.coefficients, proj.rss, proj.ridged)
    } else {
        let rss = norm_squared(&ctx.data.residual(&screened));
        (screened.clone(), rss, false)
    };
    let threshold_used = st.lambda;
    st.beta = beta;
    st.rss = rss;
    st.sigma = libm::sqrt(rss / ctx.n);
    st.lambda *= ctx.sqrt_kappa;
    st.t += 1;
    st.any_ridged |= ridged;
    st.records.push(TraceRecord {
        t: st.t,
        lambda: st.lambda,
        sigma: st.sigma,
        rss: st.rss,
        criterion: None,
        support: st.beta.support().to_vec(),
        values: st.beta.support_values(),
        group_support_size: st.beta.group_nnz(),
        threshold_used: Some(threshold_used),
        screened_support: screened.support().to_vec(),
        screened_values: screened.support_values(),
        ridged,
    });
    Ok(())
}

fn criterion_of(ctx: &FitContext<'_>, st: &LoopState, sigma_bar: f64) -> Result<f64> {
    let omega = omega_from_counts(
        st.beta.nnz(),
        st.beta.group_nnz(),
        ctx.config.s0,
        ctx.groups.n_groups(),
        ctx.groups.max_group_size(),
    )?;
    Ok(st.rss / ctx.n + ctx.config.criterion_constant * sigma_bar * sigma_bar * omega / ctx.n)
}

/// Run the full two-phase pass and return the criterion-selected iterate.
pub fn dsiht_fit(
    data: &Dataset,
    groups: &GroupStructure,
    config: &SolverConfig,
) -> Result<FitResult> {
    dsiht_fit_mode(data, groups, config, true)
}

/// Like [`dsiht_fit`] but optionally skipping the least-squares refit, so the
/// iterates are the raw thresholded landing vectors. Used internally to
/// compare the refitted and raw paths; not part of the public surface.
pub(crate) fn dsiht_fit_mode(
    data: &Dataset,
    groups: &GroupStructure,
    config: &SolverConfig,
    debias: bool,
) -> Result<FitResult> {
    config.validate()?;
    if groups.n_coefficients() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "group structure covers {} coefficients but the design has {} columns",
            groups.n_coefficients(),
            data.p()
        )));
    }
    if config.s0 > groups.max_group_size() {
        return Err(Error::InvalidArgument(format!(
            "s0 = {} exceeds the maximum group size {}",
            config.s0,
            groups.max_group_size()
        )));
    }
    let n = data.n() as f64;
    let p = data.p();
    let ctx = FitContext {
        data,
        groups,
        config,
        ridge: config.projection_ridge.unwrap_or(1e-10 * n),
        sqrt_kappa: libm::sqrt(config.kappa),
        n,
        debias,
    };
    let dc = delta_constants(None, config.s0, groups.n_groups(), groups.max_group_size())?;
    let sqrt_delta_prime = libm::sqrt(dc.delta_prime);
    let sqrt_n = libm::sqrt(n);
    let lambda0 = initial_threshold(data, groups, config.s0)?;

    let rss0 = norm_squared(data.response());
    let sigma0 = libm::sqrt(rss0 / n);
    let mut st = LoopState {
        beta: SparseCoefficients::zeros(p),
        rss: rss0,
        sigma: sigma0,
        lambda: lambda0,
        t: 0,
        records: Vec::new(),
        any_ridged: false,
    };
    st.records.push(TraceRecord {
        t: 0,
        lambda: lambda0,
        sigma: sigma0,
        rss: rss0,
        criterion: None,
        support: Vec::new(),
        values: Vec::new(),
        group_support_size: 0,
        threshold_used: None,
        screened_support: Vec::new(),
        screened_values: Vec::new(),
        ridged: false,
    });

    if lambda0 == 0.0 {
        // Zero response: the zero fit is exact and the schedule never starts.
        st.records[0].criterion = Some(0.0);
        return finish(&ctx, st, 0, 0.0, false);
    }

    let mut truncated = false;
    // Phase one: decay while `lambda_t >= (8 sigma_t / sqrt(n)) sqrt(delta')`.
    loop {
        if st.lambda < 8.0 * st.sigma / sqrt_n * sqrt_delta_prime {
            break;
        }
        if st.t >= config.max_iterations {
            truncated = true;
            break;
        }
        advance(&ctx, &mut st)?;
    }
    let phase_boundary = st.t;
    let sigma_bar = st.sigma;

    if truncated {
        // The cap hit inside phase one; score the final iterate so selection
        // has a well-defined (degenerate) search range.
        let c = criterion_of(&ctx, &st, sigma_bar)?;
        st.records[st.t].criterion = Some(c);
    } else {
        // Phase two: score every iterate, continue while
        // `lambda_t >= 4 sigma_bar / sqrt(n)`.
        loop {
            let c = criterion_of(&ctx, &st, sigma_bar)?;
            st.records[st.t].criterion = Some(c);
            if st.lambda < 4.0 * sigma_bar / sqrt_n {
                break;
            }
            if st.t >= config.max_iterations {
                truncated = true;
                break;
            }
            advance(&ctx, &mut st)?;
        }
    }

    let horizon = st.t;
    let mut selected = phase_boundary;
    let mut best = f64::INFINITY;
    for t in phase_boundary..=horizon {
        let c = st.records[t]
            .criterion
            .expect("every iterate on the search range is scored");
        if c < best {
            best = c;
            selected = t;
        }
    }
    finish_with(&ctx, st, phase_boundary, horizon, selected, sigma_bar, truncated)
}

fn finish(
    ctx: &FitContext<'_>,
    st: LoopState,
    selected: usize,
    sigma_bar: f64,
    truncated: bool,
) -> Result<FitResult> {
    let horizon = st.t;
    finish_with(ctx, st, horizon, horizon, selected, sigma_bar, truncated)
}

fn finish_with(
    ctx: &FitContext<'_>,
    st: LoopState,
    phase_boundary: usize,
    horizon: usize,
    selected: usize,
    sigma_bar: f64,
    truncated: bool,
) -> Result<FitResult> {
    let rec = &st.records[selected];
    let coefficients = SparseCoefficients::from_support(
        ctx.data.p(),
        &rec.support,
        &rec.values,
        ctx.groups,
    )?;
    let coefficients_original_scale = ctx.data.to_original_scale(coefficients.values())?;
    let intercept = ctx.data.intercept(&coefficients_original_scale);
    let any_ridged = st.any_ridged;
    Ok(FitResult {
        coefficients,
        coefficients_original_scale,
        intercept,
        trace: SolverTrace {
            records: st.records,
            phase_boundary,
            horizon,
            selected,
            truncated,
        },
        sigma_bar,
        s0_used: ctx.config.s0,
        ridged: any_ridged,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// Columns `sqrt(n) * e_j`: already standardized, gram = n * identity.
    fn orthogonal_design(n: usize, p: usize) -> Matrix {
        assert!(p <= n);
        let mut x = Matrix::zeros(n, p);
        let v = libm::sqrt(n as f64);
        for j in 0..p {
            x.set(j, j, v);
        }
        x
    }

    fn gaussian_instance(
        n: usize,
        groups: &GroupStructure,
        signal: &[(usize, f64)],
        noise: f64,
        seed: u64,
    ) -> Dataset {
        let p = groups.n_coefficients();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
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
    fn config_defaults_and_validation() {
        let c = SolverConfig::default();
        assert_eq!(c.kappa, 0.9);
        assert_eq!(c.s0, 1);
        assert_eq!(c.criterion_constant, 1000.0);
        assert_eq!(c.max_iterations, 500);
        assert_eq!(c.projection_ridge, None);
        assert!(!c.center);
        assert!(c.validate().is_ok());

        assert!(SolverConfig { kappa: 1.0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { kappa: 0.0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { s0: 0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { criterion_constant: 0.0, ..SolverConfig::default() }
            .validate()
            .is_err());
        assert!(SolverConfig { max_iterations: 0, ..SolverConfig::default() }
            .validate()
            .is_err());
        assert!(SolverConfig { projection_ridge: Some(-1.0), ..SolverConfig::default() }
            .validate()
            .is_err());
    }

    #[test]
    fn gradient_step_at_zero_gives_marginal_correlations() {
        let x = orthogonal_design(4, 2);
        let y = vec![2.0, -4.0, 0.0, 0.0];
        let data = Dataset::standardize(x, y).unwrap();
        let beta = SparseCoefficients::zeros(2);
        let h = gradient_step(&beta, &data).unwrap();
        // M_j = y_j / sqrt(n) for this design.
        assert!(close(h[0], 1.0, 1e-14));
        assert!(close(h[1], -2.0, 1e-14));
    }

    #[test]
    fn gradient_step_hand_example() {
        // n = 2, X = sqrt(2) * I, y = (sqrt(2), 0), beta = 0 -> H = (1, 0).
        let x = orthogonal_design(2, 2);
        let data = Dataset::standardize(x, vec![libm::sqrt(2.0), 0.0]).unwrap();
        let h = gradient_step(&SparseCoefficients::zeros(2), &data).unwrap();
        assert!(close(h[0], 1.0, 1e-15));
        assert!(close(h[1], 0.0, 1e-15));
    }

    #[test]
    fn gradient_step_fixed_point_on_orthogonal_noiseless_data() {
        let groups = GroupStructure::from_sizes(&[2, 2]).unwrap();
        let x = orthogonal_design(6, 4);
        let beta_vals = vec![1.5, 0.0, -2.0, 0.0];
        let y = x.mul_vec(&beta_vals).unwrap();
        let data = Dataset::standardize(x, y).unwrap();
        let beta = SparseCoefficients::from_dense(beta_vals.clone(), &groups).unwrap();
        let h = gradient_step(&beta, &data).unwrap();
        for (hi, bi) in h.iter().zip(&beta_vals) {
            assert!(close(*hi, *bi, 1e-14));
        }
    }

    #[test]
    fn initial_threshold_matches_hand_value() {
        // n = 100, m = 10 groups of 5, s0 = 1, sigma_0 = 1, ||M||_inf = 0.1:
        // max((100/9) sqrt(5.912023.../100), 0.475) = 2.701627967...
        let n = 100;
        let p = 50;
        let mut x = Matrix::zeros(n, p);
        // Column 0: (1, sqrt(99), 0, ...) has norm 10 and correlation 0.1.
        x.set(0, 0, 1.0);
        x.set(1, 0, libm::sqrt(99.0));
        // Columns j >= 1: 10 * e_{j+1}, orthogonal to y.
        for j in 1..p {
            x.set(j + 1, j, 10.0);
        }
        let mut y = vec![0.0; n];
        y[0] = 10.0; // ||y|| = 10 -> sigma_0 = 1
        let data = Dataset::standardize(x, y).unwrap();
        let groups = GroupStructure::equal_sized(10, 5).unwrap();
        let got = initial_threshold(&data, &groups, 1).unwrap();
        assert!(close(got, 2.701627996942197, 1e-12));
    }

    #[test]
    fn initial_threshold_correlation_term_can_dominate() {
        // y equal to a design column: ||M||_inf = 1, sigma_0 = 1 ->
        // max(2.7016..., 4.75) = 4.75.
        let n = 100;
        let mut x = Matrix::zeros(n, 50);
        for j in 0..50 {
            x.set(j, j, 10.0);
        }
        let y_col: Vec<f64> = x.column(0).to_vec();
        let data = Dataset::standardize(x, y_col).unwrap();
        let groups = GroupStructure::equal_sized(10, 5).unwrap();
        let got = initial_threshold(&data, &groups, 1).unwrap();
        assert!(close(got, 4.75, 1e-12));
    }

    #[test]
    fn initial_threshold_is_homogeneous_and_zero_on_zero_response() {
        let groups = GroupStructure::from_sizes(&[2, 2]).unwrap();
        let data = gaussian_instance(30, &groups, &[(0, 1.0)], 0.5, 5);
        let lam = initial_threshold(&data, &groups, 2).unwrap();
        let scaled = Dataset::standardize(
            {
                let mut m = Matrix::zeros(30, 4);
                for j in 0..4 {
                    for i in 0..30 {
                        m.set(i, j, data.design().get(i, j));
                    }
                }
                m
            },
            data.response().iter().map(|&v| 3.0 * v).collect(),
        )
        .unwrap();
        let lam3 = initial_threshold(&scaled, &groups, 2).unwrap();
        assert!(close(lam3, 3.0 * lam, 1e-14));

        let zero = Dataset::standardize(orthogonal_design(4, 2), vec![0.0; 4]).unwrap();
        let g2 = GroupStructure::from_sizes(&[1, 1]).unwrap();
        assert_eq!(initial_threshold(&zero, &g2, 1).unwrap(), 0.0);
    }

    #[test]
    fn projection_on_empty_support_is_zero() {
        let g = GroupStructure::from_sizes(&[2]).unwrap();
        let data = Dataset::standardize(orthogonal_design(3, 2), vec![1.0, 2.0, 2.0]).unwrap();
        let proj = project_least_squares(&data, &g, &[], 0.0).unwrap();
        assert!(proj.coefficients.is_empty());
        assert!(close(proj.rss, 9.0, 1e-14));
        assert!(!proj.ridged);
    }

    #[test]
    fn projection_orthogonal_design_recovers_marginals() {
        let g = GroupStructure::from_sizes(&[2, 1]).unwrap();
        let x = orthogonal_design(5, 3);
        let y = vec![2.0, -1.0, 3.0, 0.0, 0.0];
        let data = Dataset::standardize(x, y.clone()).unwrap();
        let m: Vec<f64> = (0..3).map(|j| y[j] / libm::sqrt(5.0)).collect();
        let proj = project_least_squares(&data, &g, &[0, 2], 0.0).unwrap();
        assert!(close(proj.coefficients.value(0), m[0], 1e-14));
        assert_eq!(proj.coefficients.value(1), 0.0);
        assert!(close(proj.coefficients.value(2), m[2], 1e-14));
    }

    #[test]
    fn projection_scalar_hand_example() {
        // Single standardized column (1,1,1) with y = (1,2,3): slope 2.
        let g = GroupStructure::from_sizes(&[1]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let data = Dataset::standardize(x, vec![1.0, 2.0, 3.0]).unwrap();
        let proj = project_least_squares(&data, &g, &[0], 0.0).unwrap();
        assert!(close(proj.coefficients.value(0), 2.0, 1e-14));
        assert!(close(proj.rss, 2.0, 1e-12)); // residual (-1, 0, 1)
    }

    #[test]
    fn projection_satisfies_normal_equations() {
        let groups = GroupStructure::from_sizes(&[3, 3]).unwrap();
        let data = gaussian_instance(25, &groups, &[(0, 2.0), (4, -1.0)], 1.0, 11);
        let support = [0, 1, 4];
        let proj = project_least_squares(&data, &groups, &support, 0.0).unwrap();
        let mut dense = vec![0.0; 6];
        for &i in &support {
            dense[i] = proj.coefficients.value(i);
        }
        let beta = SparseCoefficients::from_dense(dense, &groups).unwrap();
        let r = data.residual(&beta);
        let ynorm = libm::sqrt(norm_squared(data.response()));
        for &j in &support {
            let g = dot(data.design().column(j), &r);
            assert!(g.abs() <= 1e-8 * 25.0 * ynorm);
        }
    }

    #[test]
    fn projection_duplicate_columns_take_ridge_path() {
        // Two identical columns: the gram matrix is singular.
        let g = GroupStructure::from_sizes(&[2]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let data = Dataset::standardize(x, vec![1.0, 1.0, -1.0]).unwrap();
        let proj = project_least_squares(&data, &g, &[0, 1], 1e-8).unwrap();
        assert!(proj.ridged);
        assert!(proj.rss <= 3.0 + 1e-12);
    }

    #[test]
    fn projection_validates_support() {
        let g = GroupStructure::from_sizes(&[2]).unwrap();
        let data = Dataset::standardize(orthogonal_design(3, 2), vec![1.0, 0.0, 0.0]).unwrap();
        assert!(project_least_squares(&data, &g, &[1, 0], 0.0).is_err());
        assert!(project_least_squares(&data, &g, &[0, 0], 0.0).is_err());
        assert!(project_least_squares(&data, &g, &[2], 0.0).is_err());
    }

    #[test]
    fn zero_response_returns_zero_fit_immediately() {
        let groups = GroupStructure::from_sizes(&[2, 2]).unwrap();
        let data = Dataset::standardize(orthogonal_design(6, 4), vec![0.0; 6]).unwrap();
        let fit = dsiht_fit(&data, &groups, &SolverConfig::default()).unwrap();
        assert!(fit.coefficients.is_empty());
        assert_eq!(fit.trace.records.len(), 1);
        assert_eq!(fit.trace.phase_boundary, 0);
        assert_eq!(fit.trace.horizon, 0);
        assert_eq!(fit.trace.selected, 0);
        assert_eq!(fit.trace.records[0].criterion, Some(0.0));
        assert_eq!(fit.sigma_bar, 0.0);
        assert!(!fit.truncated);
    }

    #[test]
    fn orthogonal_strong_signal_is_recovered() {
        // The phase-2 floor is 4*sigma_bar/sqrt(n) with sigma_bar ~ ||beta*||
        // here (phase 1 exits before any entry crosses its threshold), so n
        // must exceed 16*s*s0 for the schedule to reach the signal magnitude
        // at all; n = 240 leaves a comfortable margin. Selection needs a
        // criterion constant on the information-criterion scale.
        let groups = GroupStructure::from_sizes(&[3, 3, 3, 3]).unwrap();
        let n = 240;
        let x = orthogonal_design(n, 12);
        let truth = [(0usize, 5.0), (1, 5.0), (6, 5.0), (7, 5.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut y = vec![0.0; n];
        for &(j, b) in &truth {
            for i in 0..n {
                y[i] += x.get(i, j) * b;
            }
        }
        for yi in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *yi += 0.1 * z;
        }
        let data = Dataset::standardize(x, y).unwrap();
        let config = SolverConfig {
            s0: 2,
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        let fit = dsiht_fit(&data, &groups, &config).unwrap();
        assert_eq!(fit.coefficients.support(), &[0, 1, 6, 7]);
        assert_eq!(fit.coefficients.group_support(), &[0, 2]);
        for &(j, b) in &truth {
            assert!(close(fit.coefficients.value(j), b, 0.05));
        }
        assert!(!fit.ridged);
        assert!(!fit.truncated);
    }

    #[test]
    fn trace_satisfies_schedule_and_phase_invariants() {
        let groups = GroupStructure::from_sizes(&[3, 3, 3, 3]).unwrap();
        let data = gaussian_instance(50, &groups, &[(0, 3.0), (1, 3.0), (7, -2.0)], 1.0, 21);
        let config = SolverConfig::with_s0(2);
        let fit = dsiht_fit(&data, &groups, &config).unwrap();
        let trace = &fit.trace;
        let records = &trace.records;
        assert_eq!(records[0].t, 0);
        let sqrt_kappa = libm::sqrt(config.kappa);
        for (t, rec) in records.iter().enumerate() {
            assert_eq!(rec.t, t);
            if t > 0 {
                let ratio = rec.lambda / records[t - 1].lambda;
                assert!((ratio - sqrt_kappa).abs() <= 1e-15 * sqrt_kappa);
                assert_eq!(rec.threshold_used, Some(records[t - 1].lambda));
            }
            // Criterion present exactly on [phase_boundary, horizon].
            let in_range = t >= trace.phase_boundary && t <= trace.horizon;
            assert_eq!(rec.criterion.is_some(), in_range);
            // Sigma is consistent with RSS.
            assert!(close(rec.sigma, libm::sqrt(rec.rss / 50.0), 1e-12));
        }
        assert!(trace.phase_boundary <= trace.selected);
        assert!(trace.selected <= trace.horizon);
        assert_eq!(trace.horizon, records.len() - 1);
        assert_eq!(fit.sigma_bar, records[trace.phase_boundary].sigma);
    }

    #[test]
    fn iterates_respect_operator_guarantees_and_projection_improves_rss() {
        let groups = GroupStructure::from_sizes(&[4, 4, 4]).unwrap();
        let data = gaussian_instance(150, &groups, &[(0, 2.0), (1, 2.0), (5, 1.5)], 0.8, 33);
        let config = SolverConfig::with_s0(2);
        let fit = dsiht_fit(&data, &groups, &config).unwrap();
        for rec in fit.trace.records.iter().skip(1) {
            let lam = rec.threshold_used.unwrap();
            // Screened entries exceed the threshold...
            for &v in &rec.screened_values {
                assert!(v.abs() >= lam);
            }
            // ...and screened groups exceed the group cut.
            let cut = config.s0 as f64 * lam * lam;
            let mut by_group: alloc::collections::BTreeMap<usize, f64> =
                alloc::collections::BTreeMap::new();
            for (&i, &v) in rec.screened_support.iter().zip(&rec.screened_values) {
                *by_group.entry(groups.group_of(i)).or_insert(0.0) += v * v;
            }
            for (_, norm_sq) in by_group {
                assert!(norm_sq >= cut);
            }
            // The refit on the same support can only lower the RSS.
            let screened = SparseCoefficients::from_support(
                data.p(),
                &rec.screened_support,
                &rec.screened_values,
                &groups,
            )
            .unwrap();
            let screened_rss = norm_squared(&data.residual(&screened));
            assert!(rec.rss <= screened_rss + 1e-9 * (1.0 + screened_rss));
        }
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let groups = GroupStructure::from_sizes(&[3, 3, 3]).unwrap();
        let base = gaussian_instance(45, &groups, &[(0, 2.5), (3, -2.0), (4, 1.5)], 1.2, 55);
        let config = SolverConfig::with_s0(2);
        let fit1 = dsiht_fit(&base, &groups, &config).unwrap();
        for c in [0.1, 3.0, 100.0] {
            let scaled_y: Vec<f64> = base.response().iter().map(|&v| c * v).collect();
            // The design is already standardized, so re-standardizing is a
            // no-op and only the response changes.
            let mut x = Matrix::zeros(45, 9);
            for j in 0..9 {
                for i in 0..45 {
                    x.set(i, j, base.design().get(i, j));
                }
            }
            let scaled = Dataset::standardize(x, scaled_y).unwrap();
            let fit_c = dsiht_fit(&scaled, &groups, &config).unwrap();
            assert_eq!(fit_c.coefficients.support(), fit1.coefficients.support());
            assert_eq!(fit_c.trace.phase_boundary, fit1.trace.phase_boundary);
            assert_eq!(fit_c.trace.horizon, fit1.trace.horizon);
            assert_eq!(fit_c.trace.selected, fit1.trace.selected);
            for &i in fit1.coefficients.support() {
                let want = c * fit1.coefficients.value(i);
                let got = fit_c.coefficients.value(i);
                assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn iteration_cap_reports_truncation_honestly() {
        let groups = GroupStructure::from_sizes(&[3, 3, 3]).unwrap();
        let data = gaussian_instance(40, &groups, &[(0, 2.0), (4, -2.0)], 1.0, 77);
        let config = SolverConfig {
            max_iterations: 2,
            s0: 2,
            ..SolverConfig::default()
        };
        let fit = dsiht_fit(&data, &groups, &config).unwrap();
        assert!(fit.truncated);
        assert!(fit.trace.truncated);
        assert!(fit.trace.horizon <= 2);
        assert!(fit.trace.selected <= fit.trace.horizon);
        // Criterion still covers the (possibly degenerate) search range.
        for t in fit.trace.phase_boundary..=fit.trace.horizon {
            assert!(fit.trace.records[t].criterion.is_some());
        }
    }

    #[test]
    fn refitted_and_raw_paths_agree_on_orthogonal_designs() {
        // With an orthogonal design the landing vector is always the vector of
        // marginal correlations, and the least-squares refit returns exactly
        // the screened entries; both modes must walk the same path.
        let groups = GroupStructure::from_sizes(&[2, 2, 2]).unwrap();
        let n = 100;
        let x = orthogonal_design(n, 6);
        let mut y = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[i] = 0.3 * z;
        }
        for j in [0usize, 1] {
            for i in 0..n {
                y[i] += x.get(i, j) * 2.0;
            }
        }
        let data = Dataset::standardize(x, y).unwrap();
        let config = SolverConfig::with_s0(2);
        let refit = dsiht_fit_mode(&data, &groups, &config, true).unwrap();
        let raw = dsiht_fit_mode(&data, &groups, &config, false).unwrap();
        assert_eq!(refit.trace.records.len(), raw.trace.records.len());
        assert_eq!(refit.trace.selected, raw.trace.selected);
        for (a, b) in refit.trace.records.iter().zip(&raw.trace.records) {
            assert_eq!(a.support, b.support);
            for (&va, &vb) in a.values.iter().zip(&b.values) {
                assert!(close(va, vb, 1e-10));
            }
        }
    }

    #[test]
    fn group_permutation_equivariance_of_the_fit() {
        // Swap the two halves of a design with groups [2,2] -> [2,2].
        let groups = GroupStructure::from_sizes(&[2, 2]).unwrap();
        let data = gaussian_instance(100, &groups, &[(0, 2.0), (1, 1.5)], 0.5, 101);
        let mut swapped = Matrix::zeros(100, 4);
        for i in 0..100 {
            for j in 0..4 {
                swapped.set(i, (j + 2) % 4, data.design().get(i, j));
            }
        }
        let data_swapped =
            Dataset::standardize(swapped, data.response().to_vec()).unwrap();
        let config = SolverConfig::with_s0(2);
        let a = dsiht_fit(&data, &groups, &config).unwrap();
        let b = dsiht_fit(&data_swapped, &groups, &config).unwrap();
        let mapped: Vec<usize> = a
            .coefficients
            .support()
            .iter()
            .map(|&i| (i + 2) % 4)
            .collect();
        let mut mapped_sorted = mapped.clone();
        mapped_sorted.sort_unstable();
        assert_eq!(b.coefficients.support(), &mapped_sorted[..]);
        for &i in a.coefficients.support() {
            assert!(close(
                b.coefficients.value((i + 2) % 4),
                a.coefficients.value(i),
                1e-10
            ));
        }
    }

    #[test]
    fn original_scale_mapping_respects_column_scales() {
        let groups = GroupStructure::from_sizes(&[2, 2]).unwrap();
        let data = gaussian_instance(35, &groups, &[(0, 3.0), (2, -2.0)], 0.5, 7);
        let fit = dsiht_fit(&data, &groups, &SolverConfig::with_s0(1)).unwrap();
        for i in 0..4 {
            let want = fit.coefficients.value(i) * data.column_scales()[i];
            assert!(close(fit.coefficients_original_scale[i], want, 1e-15));
        }
        assert!(fit.intercept.is_none());
    }
}
