//! Synthetic benchmark scenarios: correlated Gaussian designs, double-sparse
//! coefficient vectors, noise calibrated to a target signal-to-noise ratio,
//! and the metrics used to score recovery.
//!
//! Randomness is fully reproducible. Each replication derives its generator
//! from `base_seed + rep`, and the design, the coefficients, and the noise
//! each draw from a separate stream of that generator, so changing how many
//! values one stage consumes never perturbs the others.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::adaptive::{adsiht_fit, IcKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::matrix::Matrix;
use crate::solver::{dsiht_fit, SolverConfig};
use crate::sparse::SparseCoefficients;

/// Generator stream carrying the design matrix draws.
const STREAM_DESIGN: u64 = 1;
/// Generator stream carrying the coefficient draws.
const STREAM_COEFFICIENTS: u64 = 2;
/// Generator stream carrying the noise draws.
const STREAM_NOISE: u64 = 3;

/// How nonzero coefficient values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    /// Random signs with unit magnitude.
    Homogeneous,
    /// Standard normal draws (exact zeros are redrawn).
    Heterogeneous,
}

/// One benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentScenario {
    /// Sample size.
    pub n: usize,
    /// Number of groups.
    pub m: usize,
    /// Size of every group.
    pub d: usize,
    /// Number of active groups.
    pub s: usize,
    /// Nonzeros within each active group.
    pub s0: usize,
    /// Row-wise autocorrelation of the design (defaults to 0.5).
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Signal-to-noise ratio defining the noise level.
    pub snr: f64,
    /// Coefficient style.
    pub signal: SignalKind,
    /// How many replications to run.
    pub replications: usize,
    /// Seed base; replication `rep` uses `base_seed + rep`.
    pub base_seed: u64,
}

fn default_rho() -> f64 {
    0.5
}

impl ExperimentScenario {
    /// Total number of columns.
    pub fn p(&self) -> usize {
        self.m * self.d
    }

    /// The group layout implied by `m` and `d`.
    pub fn groups(&self) -> Result<GroupStructure> {
        GroupStructure::equal_sized(self.m, self.d)
    }

    /// Check the configuration is internally consistent.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return Err(Error::InvalidArgument(
                "n, m, and d must all be positive".into(),
            ));
        }
        if self.s == 0 || self.s > self.m {
            return Err(Error::InvalidArgument(
                "s must lie in [1, m]".into(),
            ));
        }
        if self.s0 == 0 || self.s0 > self.d {
            return Err(Error::InvalidArgument(
                "s0 must lie in [1, d]".into(),
            ));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidArgument(
                "rho must satisfy |rho| < 1".into(),
            ));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(Error::InvalidArgument(
                "snr must be positive and finite".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument(
                "replications must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The three independent random stages of a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngStage {
    /// Draws filling the design matrix.
    Design,
    /// Draws placing and valuing the coefficients.
    Coefficients,
    /// Draws realizing the noise.
    Noise,
}

impl RngStage {
    fn stream(self) -> u64 {
        match self {
            RngStage::Design => STREAM_DESIGN,
            RngStage::Coefficients => STREAM_COEFFICIENTS,
            RngStage::Noise => STREAM_NOISE,
        }
    }
}

/// The generator for one stage of one replication. Exposed so external
/// harnesses can rebuild any replication's inputs exactly.
pub fn replication_rng(base_seed: u64, rep: u64, stage: RngStage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(rep));
    rng.set_stream(stage.stream());
    rng
}

/// Everything one replication draws before fitting: the raw design, the true
/// coefficients, the noisy response, and the realized noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationInstance {
    /// Raw (unstandardized) design matrix.
    pub design: Matrix,
    /// True coefficients on the raw scale.
    pub coefficients: Vec<f64>,
    /// Response vector `X beta + sigma eps`.
    pub response: Vec<f64>,
    /// Noise standard deviation realizing the scenario's ratio.
    pub sigma: f64,
}

/// Generate the full input set of one replication.
pub fn replication_instance(
    scenario: &ExperimentScenario,
    rep: usize,
) -> Result<ReplicationInstance> {
    scenario.validate()?;
    let p = scenario.p();
    let mut design_rng = replication_rng(scenario.base_seed, rep as u64, RngStage::Design);
    let design = gen_design(scenario.n, p, scenario.rho, &mut design_rng);
    let mut coef_rng = replication_rng(scenario.base_seed, rep as u64, RngStage::Coefficients);
    let coefficients = gen_coefficients(scenario, &mut coef_rng);
    let mut noise_rng = replication_rng(scenario.base_seed, rep as u64, RngStage::Noise);
    let (response, sigma) = gen_response(
        &design,
        &coefficients,
        scenario.rho,
        scenario.snr,
        &mut noise_rng,
    )?;
    Ok(ReplicationInstance {
        design,
        coefficients,
        response,
        sigma,
    })
}

/// Draw an `n x p` design whose rows follow a stationary AR(1) process with
/// coefficient `rho` across all columns, so `corr(x_i, x_j) = rho^|i-j|`
/// regardless of group boundaries.
pub fn gen_design(n: usize, p: usize, rho: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let mut x = Matrix::zeros(n, p);
    let carry = libm::sqrt(1.0 - rho * rho);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(rng);
            let v = if j == 0 { z } else { rho * prev + carry * z };
            x.set(i, j, v);
            prev = v;
        }
    }
    x
}

/// Draw a coefficient vector with `s` active groups of `s0` nonzeros each.
pub fn gen_coefficients(scenario: &ExperimentScenario, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut beta = vec![0.0; scenario.p()];
    let mut active_groups =
        rand::seq::index::sample(rng, scenario.m, scenario.s).into_vec();
    active_groups.sort_unstable();
    for g in active_groups {
        let mut positions =
            rand::seq::index::sample(rng, scenario.d, scenario.s0).into_vec();
        positions.sort_unstable();
        for offset in positions {
            let value = match scenario.signal {
                SignalKind::Homogeneous => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                SignalKind::Heterogeneous => loop {
                    let v: f64 = StandardNormal.sample(rng);
                    if v != 0.0 {
                        break v;
                    }
                },
            };
            beta[g * scenario.d + offset] = value;
        }
    }
    beta
}

/// Population variance of the signal `x' beta` under the AR(1) design:
/// `sum_{i,j} beta_i beta_j rho^|i-j|`.
pub fn signal_variance(beta: &[f64], rho: f64) -> f64 {
    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    let mut q = 0.0;
    for &i in &support {
        for &j in &support {
            q += beta[i] * beta[j] * libm::pow(rho, (i as f64 - j as f64).abs());
        }
    }
    q
}

/// Noise standard deviation that realizes the requested signal-to-noise
/// ratio: `sigma = sqrt(signal_variance / snr)`.
pub fn noise_level(beta: &[f64], rho: f64, snr: f64) -> Result<f64> {
    let q = signal_variance(beta, rho);
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(
            "the coefficient vector carries no signal".into(),
        ));
    }
    Ok(libm::sqrt(q / snr))
}

/// Build the response `y = X beta + sigma * eps` and return it with the
/// noise level used.
pub fn gen_response(
    design: &Matrix,
    beta: &[f64],
    rho: f64,
    snr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64)> {
    if design.cols() != beta.len() {
        return Err(Error::DimensionMismatch(
            "design width and coefficient length differ".into(),
        ));
    }
    let sigma = noise_level(beta, rho, snr)?;
    let mut y = design.mul_vec(beta)?;
    for v in y.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += sigma * z;
    }
    Ok((y, sigma))
}

/// Recovery scores for one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Estimated minus true support size.
    pub se: i64,
    /// Estimated minus true number of active groups.
    pub gse: i64,
    /// Matthews correlation of the selected support (0 on degenerate
    /// confusion tables).
    pub mcc: f64,
    /// L2 estimation error on the standardized scale.
    pub ee: f64,
    /// Wall time attributed to the fit, in seconds.
    pub runtime_seconds: f64,
}

/// Score an estimate against the truth. `truth` is on the original scale;
/// `column_scales` maps it onto the standardized scale the estimate lives on.
pub fn compute_metrics(
    estimate: &SparseCoefficients,
    truth: &[f64],
    column_scales: &[f64],
    groups: &GroupStructure,
    runtime_seconds: f64,
) -> Result<MetricsRow> {
    let p = truth.len();
    if estimate.len() != p || column_scales.len() != p || groups.n_coefficients() != p {
        return Err(Error::DimensionMismatch(
            "estimate, truth, scales, and groups must share one length".into(),
        ));
    }
    let true_sparse = SparseCoefficients::from_dense(truth.to_vec(), groups)?;
    let est_support = estimate.support();
    let true_support = true_sparse.support();
    let se = est_support.len() as i64 - true_support.len() as i64;
    let gse = estimate.group_support().len() as i64 - true_sparse.group_support().len() as i64;

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fne = 0usize;
    for j in 0..p {
        let in_est = estimate.value(j) != 0.0;
        let in_true = truth[j] != 0.0;
        match (in_est, in_true) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => {}
        }
    }
    let tn = p - tp - fp - fne;
    let denom = libm::sqrt((tp + fp) as f64)
        * libm::sqrt((tp + fne) as f64)
        * libm::sqrt((tn + fp) as f64)
        * libm::sqrt((tn + fne) as f64);
    let mcc = if denom > 0.0 {
        ((tp * tn) as f64 - (fp * fne) as f64) / denom
    } else {
        0.0
    };

    let mut ee_sq = 0.0;
    for j in 0..p {
        if !(column_scales[j] > 0.0) {
            return Err(Error::InvalidArgument(
                "column scales must be positive".into(),
            ));
        }
        let diff = estimate.value(j) - truth[j] / column_scales[j];
        ee_sq += diff * diff;
    }

    Ok(MetricsRow {
        se,
        gse,
        mcc,
        ee: libm::sqrt(ee_sq),
        runtime_seconds,
    })
}

/// Scale of the best-achievable worst-case squared estimation error for the
/// double-sparse class: `theta * sigma^2 (s ln(em/s) + s s0 ln(ed/s0)) / (256 n)`.
/// Useful as a reference line when plotting error against sample size.
pub fn lower_bound_reference(
    s: usize,
    s0: usize,
    m: usize,
    d: usize,
    n: usize,
    sigma: f64,
    theta: f64,
) -> Result<f64> {
    if s == 0 || s > m || s0 == 0 || s0 > d || n == 0 {
        return Err(Error::InvalidArgument(
            "shape parameters must satisfy 1 <= s <= m, 1 <= s0 <= d, n >= 1".into(),
        ));
    }
    let s_f = s as f64;
    let s0_f = s0 as f64;
    let complexity = s_f * crate::complexity::ln_e_ratio(m as f64, s_f)
        + s_f * s0_f * crate::complexity::ln_e_ratio(d as f64, s0_f);
    Ok(theta * sigma * sigma * complexity / (256.0 * n as f64))
}

/// How each replication is fitted.
#[derive(Debug, Clone, PartialEq)]
pub enum FitMode {
    /// Single pass at the `s0` carried by the solver configuration.
    Fixed,
    /// Grid sweep with criterion-based selection.
    Adaptive {
        /// Candidate levels; `None` uses the default grid.
        grid: Option<Vec<usize>>,
        /// Criterion ranking the candidates.
        ic: IcKind,
    },
}

/// A replication that could not be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    /// Zero-based replication index.
    pub rep: usize,
    /// What went wrong.
    pub message: String,
}

/// Mean and sample standard deviation of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let count = values.len();
    if count == 0 {
        return MetricSummary { mean: 0.0, sd: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let sd = if count <= 1 {
        0.0
    } else {
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        libm::sqrt(ss / (count - 1) as f64)
    };
    MetricSummary { mean, sd }
}

/// Per-metric summaries over the successful replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub se: MetricSummary,
    pub gse: MetricSummary,
    pub mcc: MetricSummary,
    pub ee: MetricSummary,
    pub runtime_seconds: MetricSummary,
}

/// Summarize a batch of metric rows (sample standard deviation, zero when
/// fewer than two rows).
pub fn aggregate(rows: &[MetricsRow]) -> Aggregate {
    let col = |f: fn(&MetricsRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    Aggregate {
        count: rows.len(),
        se: summarize(&col(|r| r.se as f64)),
        gse: summarize(&col(|r| r.gse as f64)),
        mcc: summarize(&col(|r| r.mcc)),
        ee: summarize(&col(|r| r.ee)),
        runtime_seconds: summarize(&col(|r| r.runtime_seconds)),
    }
}

/// Everything produced by a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// One row per successful replication, in replication order.
    pub rows: Vec<MetricsRow>,
    /// Replications whose fit errored.
    pub failures: Vec<ReplicationFailure>,
    /// Summary of `rows`; absent when every replication failed.
    pub aggregate: Option<Aggregate>,
}

/// Generate and fit one replication. `clock` supplies timestamps in seconds;
/// pass a constant function to keep output byte-stable across machines.
pub fn run_replication(
    scenario: &ExperimentScenario,
    rep: usize,
    mode: &FitMode,
    config: &SolverConfig,
    clock: &dyn Fn() -> f64,
) -> Result<MetricsRow> {
    let groups = scenario.groups()?;
    let instance = replication_instance(scenario, rep)?;
    let beta = instance.coefficients;
    let data = if config.center {
        Dataset::standardize_centered(instance.design, instance.response)?
    } else {
        Dataset::standardize(instance.design, instance.response)?
    };

    let start = clock();
    let estimate = match mode {
        FitMode::Fixed => dsiht_fit(&data, &groups, config)?.coefficients,
        FitMode::Adaptive { grid, ic } => {
            adsiht_fit(&data, &groups, grid.as_deref(), *ic, config)?
                .best
                .coefficients
        }
    };
    let elapsed = clock() - start;
    compute_metrics(&estimate, &beta, data.column_scales(), &groups, elapsed)
}

/// Run every replication of a scenario sequentially, recording failures
/// without aborting the batch.
pub fn run_experiment(
    scenario: &ExperimentScenario,
    mode: &FitMode,
    config: &SolverConfig,
    clock: &dyn Fn() -> f64,
) -> Result<ExperimentOutcome> {
    scenario.validate()?;
    let mut rows = Vec::with_capacity(scenario.replications);
    let mut failures = Vec::new();
    for rep in 0..scenario.replications {
        match run_replication(scenario, rep, mode, config, clock) {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(ReplicationFailure {
                rep,
                message: alloc::format!("{}", e),
            }),
        }
    }
    let aggregate_rows = if rows.is_empty() {
        None
    } else {
        Some(aggregate(&rows))
    };
    Ok(ExperimentOutcome {
        rows,
        failures,
        aggregate: aggregate_rows,
    })
}
