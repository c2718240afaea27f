//! The built-in benchmark suite behind the `bench` subcommand: eight
//! self-contained checks with pinned scenarios and seeds, each reporting
//! pass/fail together with the measured values. The statistical checks keep
//! their literature-level targets even where this implementation does not
//! reach them at the benchmarked sample sizes, so a FAIL line is a real
//! measurement, not a harness defect.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use dsiht::adaptive::{adsiht_fit, IcKind};
use dsiht::data::Dataset;
use dsiht::groups::GroupStructure;
use dsiht::operator::{double_sparse_threshold, ThresholdParams};
use dsiht::oracle::{best_subset_oracle, ShapeSpec};
use dsiht::simulate::{
    aggregate, compute_metrics, replication_instance, ExperimentScenario, MetricsRow, SignalKind,
};
use dsiht::solver::{dsiht_fit, FitResult, SolverConfig};

use crate::error::{CliError, CliResult};

const OPERATOR_SEED: u64 = 41_001;
const ORACLE_SEED: u64 = 41_002;
const TABLE_SEED: u64 = 41_003;
const RATE_SEED: u64 = 41_004;
const SCALE_SEED: u64 = 41_005;

/// Outcome of one benchmark check.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    /// Check number (1-8).
    pub index: usize,
    /// Short slug naming what the check verifies.
    pub name: &'static str,
    /// Whether the measured values met the target.
    pub passed: bool,
    /// Measured values and targets, human readable.
    pub details: String,
    /// Wall-clock seconds the check took.
    pub seconds: f64,
}

impl CriterionReport {
    /// One printable pass/fail line.
    pub fn line(&self) -> String {
        format!(
            "check {} {:<24} {}  {} [{:.1}s]",
            self.index,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.details,
            self.seconds
        )
    }
}

fn timed(
    index: usize,
    name: &'static str,
    body: impl FnOnce() -> CliResult<(bool, String)>,
) -> CriterionReport {
    let start = Instant::now();
    let (passed, details) = match body() {
        Ok(outcome) => outcome,
        Err(e) => (false, format!("errored: {}", e)),
    };
    CriterionReport {
        index,
        name,
        passed,
        details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Solver settings shared by every benchmark scenario. The library's default
/// penalty multiplier (1000) tracks the worst-case theory and swamps the
/// residual term at these sample sizes, so the suite pins a unit multiplier.
pub fn bench_config() -> SolverConfig {
    SolverConfig {
        criterion_constant: 1.0,
        ..SolverConfig::default()
    }
}

/// The headline synthetic regime: p = 5000 columns in 250 groups of 20, with
/// 20 unit-magnitude nonzeros spread 5-per-group over 4 groups.
fn table_scenario(n: usize, base_seed: u64) -> ExperimentScenario {
    ExperimentScenario {
        n,
        m: 250,
        d: 20,
        s: 4,
        s0: 5,
        rho: 0.5,
        snr: 5.0,
        signal: SignalKind::Homogeneous,
        replications: 20,
        base_seed,
    }
}

/// One adaptively fitted replication of a scenario.
#[derive(Debug, Clone)]
pub struct AdaptiveRep {
    /// Selection and estimation metrics against the truth.
    pub row: MetricsRow,
    /// The within-group level the sweep picked.
    pub s0_selected: usize,
}

fn adaptive_batch(scenario: &ExperimentScenario) -> CliResult<Vec<AdaptiveRep>> {
    let groups = scenario.groups()?;
    let config = bench_config();
    let reps: Result<Vec<AdaptiveRep>, dsiht::Error> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| {
            let instance = replication_instance(scenario, rep)?;
            let truth = instance.coefficients;
            let data = Dataset::standardize(instance.design, instance.response)?;
            let fit = adsiht_fit(
                &data,
                &groups,
                None,
                IcKind::SparseGroupCriterion,
                &config,
            )?;
            let row = compute_metrics(
                &fit.best.coefficients,
                &truth,
                data.column_scales(),
                &groups,
                0.0,
            )?;
            Ok(AdaptiveRep {
                row,
                s0_selected: fit.selected_s0(),
            })
        })
        .collect();
    Ok(reps?)
}

/// One fixed-level replication with its full iteration trace and the truth
/// expressed on the solver's standardized scale.
#[derive(Debug, Clone)]
pub struct PathRep {
    /// The complete fit, trace included.
    pub fit: FitResult,
    /// True coefficients on the standardized scale.
    pub beta_star: Vec<f64>,
    /// True noise standard deviation.
    pub sigma: f64,
    /// Sample size.
    pub n: usize,
    /// Column count.
    pub p: usize,
}

fn fixed_batch(scenario: &ExperimentScenario) -> CliResult<Vec<PathRep>> {
    let groups = scenario.groups()?;
    let config = SolverConfig {
        s0: scenario.s0,
        ..bench_config()
    };
    let reps: Result<Vec<PathRep>, dsiht::Error> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| {
            let instance = replication_instance(scenario, rep)?;
            let truth = instance.coefficients;
            let sigma = instance.sigma;
            let data = Dataset::standardize(instance.design, instance.response)?;
            let beta_star: Vec<f64> = truth
                .iter()
                .zip(data.column_scales())
                .map(|(&b, &c)| b / c)
                .collect();
            let fit = dsiht_fit(&data, &groups, &config)?;
            Ok(PathRep {
                fit,
                beta_star,
                sigma,
                n: data.n(),
                p: data.p(),
            })
        })
        .collect();
    Ok(reps?)
}

fn cached<T: Clone>(
    cell: &'static OnceLock<Result<T, String>>,
    compute: impl FnOnce() -> CliResult<T>,
) -> CliResult<T> {
    let slot = cell.get_or_init(|| compute().map_err(|e| e.to_string()));
    match slot {
        Ok(value) => Ok(value.clone()),
        Err(message) => Err(CliError::numerical(message.clone())),
    }
}

/// Adaptive fits of the headline regime at n = 500, shared by the accuracy
/// check and the level-selection statistics.
pub fn table_adaptive_batch() -> CliResult<Vec<AdaptiveRep>> {
    static CELL: OnceLock<Result<Vec<AdaptiveRep>, String>> = OnceLock::new();
    cached(&CELL, || adaptive_batch(&table_scenario(500, TABLE_SEED)))
}

/// Fixed-level (s0 = 5) traces of the headline regime at n = 500, shared by
/// the path-bound and iteration-budget checks.
pub fn table_fixed_batch() -> CliResult<Vec<PathRep>> {
    static CELL: OnceLock<Result<Vec<PathRep>, String>> = OnceLock::new();
    cached(&CELL, || fixed_batch(&table_scenario(500, TABLE_SEED)))
}

/// Mean estimation error of the headline regime at n = 400, 800, 1600.
pub fn rate_curve() -> CliResult<Vec<(usize, f64)>> {
    static CELL: OnceLock<Result<Vec<(usize, f64)>, String>> = OnceLock::new();
    cached(&CELL, || {
        let mut curve = Vec::new();
        for n in [400usize, 800, 1600] {
            let reps = adaptive_batch(&table_scenario(n, RATE_SEED))?;
            let rows: Vec<MetricsRow> = reps.into_iter().map(|r| r.row).collect();
            curve.push((n, aggregate(&rows).ee.mean));
        }
        Ok(curve)
    })
}

fn relative_gap(actual: f64, expected: f64) -> f64 {
    let scale = expected.abs().max(1e-300);
    (actual - expected).abs() / scale
}

/// Check 1: randomized property suite for the two-stage threshold operator.
pub fn criterion_1() -> CriterionReport {
    timed(1, "operator-properties", || {
        let mut rng = ChaCha8Rng::seed_from_u64(OPERATOR_SEED);
        let cases = 10_000usize;
        let mut violations = 0usize;
        let mut first: Option<String> = None;
        for case in 0..cases {
            let m = rng.random_range(1..=6);
            let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(1..=6)).collect();
            let groups = GroupStructure::from_sizes(&sizes)?;
            let p = groups.n_coefficients();
            let s0 = rng.random_range(1..=groups.max_group_size());
            let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
            let v: Vec<f64> = (0..p)
                .map(|_| {
                    let draw: f64 = StandardNormal.sample(&mut rng);
                    match rng.random_range(0..4) {
                        0 => 0.0,
                        1 => draw * lambda,
                        2 => draw * lambda * 3.0,
                        _ => draw * 10.0,
                    }
                })
                .collect();
            if let Some(problem) = operator_case_violation(&v, lambda, s0, &groups, &mut rng)? {
                violations += 1;
                if first.is_none() {
                    first = Some(format!("case {}: {}", case, problem));
                }
            }
        }
        let details = match first {
            None => format!("{} randomized cases, 0 violations", cases),
            Some(first) => format!(
                "{} of {} cases violated a property; first: {}",
                violations, cases, first
            ),
        };
        Ok((violations == 0, details))
    })
}

/// All operator properties on one randomized case; `Some(description)` on the
/// first violated property.
fn operator_case_violation(
    v: &[f64],
    lambda: f64,
    s0: usize,
    groups: &GroupStructure,
    rng: &mut ChaCha8Rng,
) -> CliResult<Option<String>> {
    let params = ThresholdParams::new(lambda, s0)?;
    let kept = double_sparse_threshold(v, params, groups)?;
    let w = kept.values();

    // Support shrinkage and exact value preservation.
    for i in 0..v.len() {
        if w[i] != 0.0 && w[i] != v[i] {
            return Ok(Some(format!("entry {} changed from {} to {}", i, v[i], w[i])));
        }
        // Element-level magnitude guarantee.
        if w[i] != 0.0 && v[i].abs() < lambda {
            return Ok(Some(format!(
                "entry {} kept below the threshold: |{}| < {}",
                i, v[i], lambda
            )));
        }
    }
    // Group-level magnitude guarantee: active groups carry squared norm of at
    // least s0 * lambda^2; inactive groups fell short of it after the
    // element-wise cut.
    let cut = s0 as f64 * lambda * lambda;
    for (g, range) in groups.iter() {
        let kept_sq: f64 = w[range.clone()].iter().map(|x| x * x).sum();
        let survivor_sq: f64 = v[range.clone()]
            .iter()
            .map(|&x| if x.abs() >= lambda { x * x } else { 0.0 })
            .sum();
        let active = w[range.clone()].iter().any(|&x| x != 0.0);
        if active && kept_sq < cut {
            return Ok(Some(format!(
                "group {} kept with squared norm {} below the cut {}",
                g, kept_sq, cut
            )));
        }
        if !active && survivor_sq >= cut {
            return Ok(Some(format!(
                "group {} dropped despite squared norm {} >= cut {}",
                g, survivor_sq, cut
            )));
        }
    }
    // Idempotence: reapplying the operator changes nothing.
    let again = double_sparse_threshold(w, params, groups)?;
    if again.support() != kept.support() || again.values() != w {
        return Ok(Some("operator is not idempotent".to_string()));
    }
    // Threshold monotonicity: a larger threshold keeps a subset.
    let harsher = lambda * (1.0 + rng.random_range(0.1..2.0));
    let shrunk = double_sparse_threshold(v, ThresholdParams::new(harsher, s0)?, groups)?;
    let base_support = kept.support();
    if !shrunk.support().iter().all(|i| base_support.contains(i)) {
        return Ok(Some(format!(
            "support grew when the threshold rose from {} to {}",
            lambda, harsher
        )));
    }
    // Positive homogeneity to 1e-12 relative.
    let c = 10f64.powf(rng.random_range(-3.0..3.0));
    let scaled_v: Vec<f64> = v.iter().map(|&x| c * x).collect();
    let scaled = double_sparse_threshold(&scaled_v, ThresholdParams::new(c * lambda, s0)?, groups)?;
    if scaled.support() != kept.support() {
        return Ok(Some(format!("support changed under scaling by {}", c)));
    }
    for (&actual, &base) in scaled.values().iter().zip(w) {
        if relative_gap(actual, c * base) > 1e-12 {
            return Ok(Some(format!(
                "homogeneity broke: {} vs {} at scale {}",
                actual,
                c * base,
                c
            )));
        }
    }
    Ok(None)
}

/// Check 2: on a small high-signal regime the adaptive fit should land on
/// the same support as exhaustive best-subset search.
pub fn criterion_2() -> CriterionReport {
    timed(2, "oracle-equivalence", || {
        let scenario = ExperimentScenario {
            n: 60,
            m: 5,
            d: 4,
            s: 2,
            s0: 2,
            rho: 0.5,
            snr: 50.0,
            signal: SignalKind::Homogeneous,
            replications: 100,
            base_seed: ORACLE_SEED,
        };
        let groups = scenario.groups()?;
        let shape = ShapeSpec::new(2, 2, &groups)?;
        let config = bench_config();
        let matches: Result<Vec<bool>, dsiht::Error> = (0..scenario.replications)
            .into_par_iter()
            .map(|rep| {
                let instance = replication_instance(&scenario, rep)?;
                let data = Dataset::standardize(instance.design, instance.response)?;
                let fit = adsiht_fit(
                    &data,
                    &groups,
                    None,
                    IcKind::SparseGroupCriterion,
                    &config,
                )?;
                let oracle = best_subset_oracle(&data, &groups, &shape)?;
                Ok(fit.best.coefficients.support() == oracle.support())
            })
            .collect();
        let matches = matches?;
        let agreed = matches.iter().filter(|&&hit| hit).count();
        Ok((
            agreed >= 90,
            format!(
                "selected support matched exhaustive search in {} of {} seeds (need >= 90)",
                agreed,
                matches.len()
            ),
        ))
    })
}

/// Check 3: selection and estimation accuracy targets on the headline
/// regime at n = 500.
pub fn criterion_3() -> CriterionReport {
    timed(3, "benchmark-accuracy", || {
        let reps = table_adaptive_batch()?;
        let rows: Vec<MetricsRow> = reps.into_iter().map(|r| r.row).collect();
        let a = aggregate(&rows);
        let passed = a.mcc.mean >= 0.95
            && a.ee.mean <= 0.60
            && a.se.mean.abs() <= 1.5
            && a.gse.mean.abs() <= 1.0;
        Ok((
            passed,
            format!(
                "mean MCC {:.3} (need >= 0.95), mean EE {:.3} (need <= 0.60), \
                 mean SE {:.2} (need |.| <= 1.5), mean GSE {:.2} (need |.| <= 1)",
                a.mcc.mean, a.ee.mean, a.se.mean, a.gse.mean
            ),
        ))
    })
}

/// Check 4: estimation error should shrink like 1/sqrt(n) as the sample
/// doubles.
pub fn criterion_4() -> CriterionReport {
    timed(4, "error-rate-scaling", || {
        let curve = rate_curve()?;
        let r1 = curve[0].1 / curve[1].1;
        let r2 = curve[1].1 / curve[2].1;
        let in_band = |r: f64| (1.15..=1.75).contains(&r);
        Ok((
            in_band(r1) && in_band(r2),
            format!(
                "mean EE {:.3} / {:.3} / {:.3} at n = 400 / 800 / 1600; \
                 doubling ratios {:.2} and {:.2} (need within [1.15, 1.75])",
                curve[0].1, curve[1].1, curve[2].1, r1, r2
            ),
        ))
    })
}

/// Check 5: rescaling the response rescales the fit and changes nothing
/// else — supports, schedule indices, and the selected level all match.
pub fn criterion_5() -> CriterionReport {
    timed(5, "scale-equivariance", || {
        let scenario = ExperimentScenario {
            n: 120,
            m: 8,
            d: 5,
            s: 2,
            s0: 2,
            rho: 0.5,
            snr: 5.0,
            signal: SignalKind::Heterogeneous,
            replications: 50,
            base_seed: SCALE_SEED,
        };
        let groups = scenario.groups()?;
        let config = bench_config();
        let outcomes: Result<Vec<Result<f64, String>>, dsiht::Error> = (0..scenario.replications)
            .into_par_iter()
            .map(|rep| {
                let instance = replication_instance(&scenario, rep)?;
                let base_data =
                    Dataset::standardize(instance.design.clone(), instance.response.clone())?;
                let base = adsiht_fit(
                    &base_data,
                    &groups,
                    None,
                    IcKind::SparseGroupCriterion,
                    &config,
                )?;
                let mut worst = 0.0f64;
                for &c in &[0.1, 3.0, 100.0] {
                    let scaled_y: Vec<f64> = instance.response.iter().map(|&v| c * v).collect();
                    let data = Dataset::standardize(instance.design.clone(), scaled_y)?;
                    let fit = adsiht_fit(
                        &data,
                        &groups,
                        None,
                        IcKind::SparseGroupCriterion,
                        &config,
                    )?;
                    if fit.selected_s0() != base.selected_s0() {
                        return Ok(Err(format!(
                            "replication {}: selected level changed under scale {}",
                            rep, c
                        )));
                    }
                    if fit.best.coefficients.support() != base.best.coefficients.support() {
                        return Ok(Err(format!(
                            "replication {}: support changed under scale {}",
                            rep, c
                        )));
                    }
                    let (bt, ft) = (&base.best.trace, &fit.best.trace);
                    if (ft.phase_boundary, ft.horizon, ft.selected)
                        != (bt.phase_boundary, bt.horizon, bt.selected)
                    {
                        return Ok(Err(format!(
                            "replication {}: schedule indices changed under scale {}",
                            rep, c
                        )));
                    }
                    let scaled_values = fit.best.coefficients.support_values();
                    let base_values = base.best.coefficients.support_values();
                    for (&scaled_value, &base_value) in scaled_values.iter().zip(base_values.iter())
                    {
                        let gap = relative_gap(scaled_value, c * base_value);
                        if gap > 1e-8 {
                            return Ok(Err(format!(
                                "replication {}: coefficient gap {:.2e} under scale {}",
                                rep, gap, c
                            )));
                        }
                        worst = worst.max(gap);
                    }
                }
                Ok(Ok(worst))
            })
            .collect();
        let outcomes = outcomes?;
        let mut worst = 0.0f64;
        for outcome in &outcomes {
            match outcome {
                Ok(gap) => worst = worst.max(*gap),
                Err(problem) => {
                    return Ok((
                        false,
                        format!("equivariance broke: {}", problem),
                    ));
                }
            }
        }
        Ok((
            true,
            format!(
                "{} instances x 3 scales: supports, schedules, and levels all \
                 identical; worst relative coefficient gap {:.1e}",
                outcomes.len(),
                worst
            ),
        ))
    })
}

/// Check 6: along the whole threshold schedule the iterate error stays
/// under 5.2 sqrt(s s0) lambda_t.
pub fn criterion_6() -> CriterionReport {
    timed(6, "path-error-bound", || {
        let reps = table_fixed_batch()?;
        let factor = 5.2 * (4.0f64 * 5.0).sqrt();
        let total = reps.len();
        let mut within = 0usize;
        let mut worst_excess = 0.0f64;
        for rep in &reps {
            let mut all_ok = true;
            for record in &rep.fit.trace.records {
                let mut diff = rep.beta_star.clone();
                for (&i, &value) in record.support.iter().zip(record.values.iter()) {
                    diff[i] -= value;
                }
                let err = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
                let bound = factor * record.lambda;
                if err > bound {
                    all_ok = false;
                    worst_excess = worst_excess.max(err / bound);
                }
            }
            if all_ok {
                within += 1;
            }
        }
        let need = (0.95 * total as f64).ceil() as usize;
        let details = if within == total {
            format!(
                "{} of {} replications inside the error bound at every iteration (need >= {})",
                within, total, need
            )
        } else {
            format!(
                "{} of {} replications inside the error bound (need >= {}); worst excess {:.2}x",
                within, total, need, worst_excess
            )
        };
        Ok((within >= need, details))
    })
}

/// Check 7: the schedule length obeys the logarithmic iteration budget.
pub fn criterion_7() -> CriterionReport {
    timed(7, "iteration-budget", || {
        let reps = table_fixed_batch()?;
        let kappa = bench_config().kappa;
        let total = reps.len();
        let mut within = 0usize;
        let mut sample = (0usize, 0.0f64);
        for rep in &reps {
            let iterations = rep.fit.trace.horizon;
            let signal = rep.beta_star.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n = rep.n as f64;
            let p = rep.p as f64;
            let snr_term = n.sqrt() * signal / rep.sigma;
            let dim_term = (std::f64::consts::E * p).ln().sqrt();
            let budget =
                2.0 * (6.0 * snr_term.max(dim_term)).ln() / (1.0 / kappa).ln() + 1.0;
            if (iterations as f64) <= budget {
                within += 1;
            }
            sample = (iterations, budget);
        }
        let need = (0.95 * total as f64).ceil() as usize;
        Ok((
            within >= need,
            format!(
                "{} of {} replications inside the iteration budget (need >= {}); \
                 e.g. {} iterations vs budget {:.1}",
                within, total, need, sample.0, sample.1
            ),
        ))
    })
}

/// Check 8: the simulate command is bit-reproducible — two runs with one
/// seed write byte-identical CSV.
pub fn criterion_8(binary: &Path) -> CriterionReport {
    timed(8, "output-determinism", || {
        let dir = tempfile::tempdir()
            .map_err(|e| CliError::numerical(format!("temp dir: {}", e)))?;
        let scenario_path = dir.path().join("scenario.json");
        std::fs::write(
            &scenario_path,
            concat!(
                r#"{"id":"determinism","n":80,"m":10,"d":4,"s":2,"s0":2,"rho":0.5,"#,
                r#""snr":5.0,"signal":"homogeneous","replications":5,"base_seed":41008}"#,
            ),
        )
        .map_err(|e| CliError::numerical(format!("writing scenario: {}", e)))?;
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("run{}.csv", run));
            let status = Command::new(binary)
                .arg("simulate")
                .arg("--scenario")
                .arg(&scenario_path)
                .arg("--out")
                .arg(&out)
                .arg("--workers")
                .arg("2")
                .env_remove("DSIHT_SEED")
                .status()
                .map_err(|e| CliError::numerical(format!("spawning {}: {}", binary.display(), e)))?;
            if !status.success() {
                return Ok((
                    false,
                    format!("simulate exited with status {:?}", status.code()),
                ));
            }
            outputs.push(
                std::fs::read(&out)
                    .map_err(|e| CliError::numerical(format!("reading {}: {}", out.display(), e)))?,
            );
        }
        let identical = outputs[0] == outputs[1] && !outputs[0].is_empty();
        let lines = outputs[0].iter().filter(|&&b| b == b'\n').count();
        Ok((
            identical,
            if identical {
                format!(
                    "two identical-seed runs wrote byte-identical CSV ({} bytes, {} lines)",
                    outputs[0].len(),
                    lines
                )
            } else {
                "identical-seed runs wrote different bytes".to_string()
            },
        ))
    })
}

/// Run the requested checks in order. `binary` is the executable used by the
/// determinism check.
pub fn run_selected(indices: &[usize], binary: &Path) -> Vec<CriterionReport> {
    indices
        .iter()
        .map(|&index| match index {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(binary),
            _ => unreachable!("indices validated by the caller"),
        })
        .collect()
}
