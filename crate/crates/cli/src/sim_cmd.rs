//! The `simulate` command: run a seeded scenario (optionally sweeping one
//! field) and emit a metrics CSV.

use rayon::prelude::*;

use dsiht::simulate::{
    aggregate, run_replication, Aggregate, ExperimentScenario, FitMode, MetricsRow,
};
use dsiht::solver::SolverConfig;

use crate::args::SimArgs;
use crate::error::{CliError, CliResult};
use crate::fit_cmd::{requested_grid, solver_config};
use crate::io::{format_float, push_csv_row, read_scenario_json, write_text};

/// One scenario field varied over a list of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub field: String,
    pub values: Vec<f64>,
}

/// Parse `field=a..b`, `field=a..b:step`, or `field=v1,v2,...`. Ranges are
/// inclusive with a default step of 1.
pub fn parse_sweep(spec: &str) -> CliResult<Sweep> {
    let (field, rest) = spec
        .split_once('=')
        .ok_or_else(|| CliError::validation("sweep must look like field=values"))?;
    let field = field.trim().to_string();
    let rest = rest.trim();
    if rest.is_empty() {
        return Err(CliError::validation("sweep has no values"));
    }
    let parse = |text: &str| -> CliResult<f64> {
        text.trim()
            .parse::<f64>()
            .map_err(|_| CliError::validation(format!("'{}' is not a number", text.trim())))
    };
    let values = if let Some((range, step)) = split_range(rest)? {
        let (start_text, end_text) = range;
        let start = parse(start_text)?;
        let end = parse(end_text)?;
        let step = match step {
            Some(text) => parse(text)?,
            None => 1.0,
        };
        if !(step > 0.0) {
            return Err(CliError::validation(format!(
                "sweep step must be positive, got {}",
                step
            )));
        }
        if end < start {
            return Err(CliError::validation(format!(
                "sweep range is empty: {}..{}",
                start, end
            )));
        }
        // Walk by multiples of the step so accumulated rounding cannot skip
        // the endpoint; the slack admits the endpoint itself.
        let mut values = Vec::new();
        let slack = step * 1e-9;
        let mut k = 0u64;
        loop {
            let v = start + step * k as f64;
            if v > end + slack {
                break;
            }
            values.push(v);
            k += 1;
        }
        values
    } else {
        rest.split(',')
            .map(parse)
            .collect::<CliResult<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(CliError::validation("sweep has no values"));
    }
    Ok(Sweep { field, values })
}

/// Split `a..b` / `a..b:step` into its parts; `None` for list syntax.
fn split_range(text: &str) -> CliResult<Option<((&str, &str), Option<&str>)>> {
    let Some((start, tail)) = text.split_once("..") else {
        return Ok(None);
    };
    match tail.split_once(':') {
        Some((end, step)) => Ok(Some(((start, end), Some(step)))),
        None => Ok(Some(((start, tail), None))),
    }
}

fn as_count(field: &str, v: f64) -> CliResult<usize> {
    if v.fract().abs() > 1e-9 || v < 0.0 || v > u32::MAX as f64 {
        return Err(CliError::validation(format!(
            "sweep value {} is not a valid {}",
            v, field
        )));
    }
    Ok(v as usize)
}

/// Set one scenario field from a sweep value.
pub fn apply_sweep_value(
    scenario: &mut ExperimentScenario,
    field: &str,
    value: f64,
) -> CliResult<()> {
    match field {
        "n" => scenario.n = as_count(field, value)?,
        "m" => scenario.m = as_count(field, value)?,
        "d" => scenario.d = as_count(field, value)?,
        "s" => scenario.s = as_count(field, value)?,
        "s0" => scenario.s0 = as_count(field, value)?,
        "snr" => scenario.snr = value,
        "rho" => scenario.rho = value,
        _ => {
            return Err(CliError::validation(format!(
                "unknown sweep field '{}'; expected one of n, m, d, s, s0, snr, rho",
                field
            )));
        }
    }
    Ok(scenario.validate()?)
}

/// Run every replication of a scenario in parallel (inside the ambient rayon
/// pool), in deterministic replication order.
pub fn run_batch(
    scenario: &ExperimentScenario,
    mode: &FitMode,
    config: &SolverConfig,
    timings: bool,
) -> (Vec<(usize, MetricsRow)>, Vec<(usize, String)>) {
    let results: Vec<(usize, Result<MetricsRow, dsiht::Error>)> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| {
            let clock: Box<dyn Fn() -> f64> = if timings {
                let start = std::time::Instant::now();
                Box::new(move || start.elapsed().as_secs_f64())
            } else {
                Box::new(|| 0.0)
            };
            (rep, run_replication(scenario, rep, mode, config, &*clock))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (rep, result) in results {
        match result {
            Ok(row) => rows.push((rep, row)),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    (rows, failures)
}

fn require_successes<T>(
    rows: &[(usize, T)],
    failures: &[(usize, String)],
) -> CliResult<()> {
    for (rep, message) in failures {
        eprintln!("warning: replication {} failed: {}", rep, message);
    }
    if rows.is_empty() {
        if let Some((rep, message)) = failures.first() {
            return Err(CliError::numerical(format!(
                "every replication failed; first failure (replication {}): {}",
                rep, message
            )));
        }
        return Err(CliError::validation("scenario has no replications"));
    }
    Ok(())
}

const METRIC_COLUMNS: [&str; 5] = ["se", "gse", "mcc", "ee", "runtime_seconds"];

fn metric_fields(row: &MetricsRow) -> [String; 5] {
    [
        row.se.to_string(),
        row.gse.to_string(),
        format_float(row.mcc),
        format_float(row.ee),
        format_float(row.runtime_seconds),
    ]
}

fn aggregate_fields(a: &Aggregate) -> (Vec<String>, Vec<String>) {
    let means = vec![
        format_float(a.se.mean),
        format_float(a.gse.mean),
        format_float(a.mcc.mean),
        format_float(a.ee.mean),
        format_float(a.runtime_seconds.mean),
    ];
    let sds = vec![
        format_float(a.se.sd),
        format_float(a.gse.sd),
        format_float(a.mcc.sd),
        format_float(a.ee.sd),
        format_float(a.runtime_seconds.sd),
    ];
    (means, sds)
}

/// Per-replication CSV with trailing mean/sd rows.
pub fn render_metrics_csv(label: &str, rows: &[(usize, MetricsRow)]) -> String {
    let mut out = String::from("scenario,rep,");
    out.push_str(&METRIC_COLUMNS.join(","));
    out.push('\n');
    for (rep, row) in rows {
        let mut fields = vec![label.to_string(), rep.to_string()];
        fields.extend(metric_fields(row));
        push_csv_row(&mut out, &fields);
    }
    let summary = aggregate(&rows.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>());
    let (means, sds) = aggregate_fields(&summary);
    let mut mean_fields = vec![label.to_string(), "mean".to_string()];
    mean_fields.extend(means);
    push_csv_row(&mut out, &mean_fields);
    let mut sd_fields = vec![label.to_string(), "sd".to_string()];
    sd_fields.extend(sds);
    push_csv_row(&mut out, &sd_fields);
    out
}

/// Wide-format sweep CSV: one aggregate row per swept value.
pub fn render_sweep_csv(
    label: &str,
    field: &str,
    points: &[(f64, usize, Aggregate)],
) -> String {
    let mut out = String::from("scenario,field,value,count");
    for column in METRIC_COLUMNS {
        out.push_str(&format!(",mean_{},sd_{}", column, column));
    }
    out.push('\n');
    for (value, count, summary) in points {
        let (means, sds) = aggregate_fields(summary);
        let mut fields = vec![
            label.to_string(),
            field.to_string(),
            format_float(*value),
            count.to_string(),
        ];
        for (mean, sd) in means.iter().zip(&sds) {
            fields.push(mean.clone());
            fields.push(sd.clone());
        }
        push_csv_row(&mut out, &fields);
    }
    out
}

fn build_pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::numerical(format!("thread pool: {}", e)))
}

/// Run the simulate command.
pub fn run(args: &SimArgs) -> CliResult<()> {
    let doc = read_scenario_json(&args.scenario)?;
    let mut scenario = doc.to_scenario();
    if let Some(reps) = args.reps {
        scenario.replications = reps;
    }
    if let Some(seed) = args.seed {
        scenario.base_seed = seed;
    }
    scenario.validate()?;
    if let Some(level) = args.s0 {
        if level == 0 || level > scenario.d {
            return Err(CliError::validation(format!(
                "--s0 {} is outside [1, {}] for this scenario",
                level, scenario.d
            )));
        }
    }
    if let Some(grid) = &args.s0_grid {
        if let Some(&bad) = grid.iter().find(|&&g| g == 0 || g > scenario.d) {
            return Err(CliError::validation(format!(
                "--s0-grid entry {} is outside [1, {}] for this scenario",
                bad, scenario.d
            )));
        }
    }

    let config = SolverConfig {
        s0: args.s0.unwrap_or(1),
        ..solver_config(args.kappa, args.ic_const, false)?
    };
    let mode = match args.s0 {
        Some(_) => FitMode::Fixed,
        None => FitMode::Adaptive {
            grid: requested_grid(None, args.s0_grid.as_deref()),
            ic: args.ic.into(),
        },
    };

    let pool = build_pool(args.workers)?;
    let label = doc.label();
    let text = match &args.sweep {
        None => {
            let (rows, failures) =
                pool.install(|| run_batch(&scenario, &mode, &config, args.timings));
            require_successes(&rows, &failures)?;
            render_metrics_csv(&label, &rows)
        }
        Some(spec) => {
            let sweep = parse_sweep(spec)?;
            let mut points = Vec::with_capacity(sweep.values.len());
            for &value in &sweep.values {
                let mut varied = scenario.clone();
                apply_sweep_value(&mut varied, &sweep.field, value)?;
                let (rows, failures) =
                    pool.install(|| run_batch(&varied, &mode, &config, args.timings));
                require_successes(&rows, &failures)?;
                let summary =
                    aggregate(&rows.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>());
                points.push((value, rows.len(), summary));
            }
            render_sweep_csv(&label, &sweep.field, &points)
        }
    };
    write_text(args.out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsiht::simulate::SignalKind;

    fn base_scenario() -> ExperimentScenario {
        ExperimentScenario {
            n: 40,
            m: 5,
            d: 4,
            s: 2,
            s0: 2,
            rho: 0.5,
            snr: 5.0,
            signal: SignalKind::Homogeneous,
            replications: 2,
            base_seed: 11,
        }
    }

    #[test]
    fn sweep_ranges_are_inclusive() {
        let sweep = parse_sweep("snr=1..10").unwrap();
        assert_eq!(sweep.field, "snr");
        assert_eq!(sweep.values.len(), 10);
        assert_eq!(sweep.values[0], 1.0);
        assert_eq!(sweep.values[9], 10.0);

        let stepped = parse_sweep("n=200..1000:200").unwrap();
        assert_eq!(stepped.values, vec![200.0, 400.0, 600.0, 800.0, 1000.0]);

        let fractional = parse_sweep("rho=0.0..0.9:0.3").unwrap();
        assert_eq!(fractional.values.len(), 4);
        assert!((fractional.values[3] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn sweep_lists_parse_verbatim() {
        let sweep = parse_sweep("rho=0,0.5,0.9").unwrap();
        assert_eq!(sweep.values, vec![0.0, 0.5, 0.9]);
    }

    #[test]
    fn malformed_sweeps_are_rejected() {
        assert!(parse_sweep("snr").is_err());
        assert!(parse_sweep("snr=").is_err());
        assert!(parse_sweep("snr=5..1").is_err());
        assert!(parse_sweep("snr=1..5:-1").is_err());
        assert!(parse_sweep("snr=a,b").is_err());
    }

    #[test]
    fn sweep_values_respect_field_types() {
        let mut scenario = base_scenario();
        apply_sweep_value(&mut scenario, "n", 100.0).unwrap();
        assert_eq!(scenario.n, 100);
        apply_sweep_value(&mut scenario, "rho", 0.25).unwrap();
        assert_eq!(scenario.rho, 0.25);
        // Fractional count, out-of-range result, unknown field.
        assert!(apply_sweep_value(&mut scenario, "n", 99.5).is_err());
        assert!(apply_sweep_value(&mut scenario, "s", 9.0).is_err());
        assert!(apply_sweep_value(&mut scenario, "signal", 1.0).is_err());
    }

    #[test]
    fn batches_are_deterministic_across_worker_counts() {
        let scenario = ExperimentScenario {
            replications: 4,
            ..base_scenario()
        };
        let mode = FitMode::Fixed;
        let config = SolverConfig {
            s0: 2,
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        let single = build_pool(Some(1)).unwrap();
        let many = build_pool(Some(4)).unwrap();
        let a = single.install(|| run_batch(&scenario, &mode, &config, false));
        let b = many.install(|| run_batch(&scenario, &mode, &config, false));
        assert_eq!(a.0, b.0);
        assert!(a.1.is_empty());
        assert_eq!(render_metrics_csv("x", &a.0), render_metrics_csv("x", &b.0));
    }

    #[test]
    fn metrics_csv_has_label_rows_and_summary_block() {
        let scenario = base_scenario();
        let config = SolverConfig {
            s0: 2,
            criterion_constant: 1.0,
            ..SolverConfig::default()
        };
        let (rows, failures) = run_batch(&scenario, &FitMode::Fixed, &config, false);
        assert!(failures.is_empty());
        let text = render_metrics_csv("demo", &rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + scenario.replications + 2);
        assert_eq!(lines[0], "scenario,rep,se,gse,mcc,ee,runtime_seconds");
        assert!(lines[1].starts_with("demo,0,"));
        assert!(lines[lines.len() - 2].starts_with("demo,mean,"));
        assert!(lines[lines.len() - 1].starts_with("demo,sd,"));
        // Untimed runs pin the runtime column to zero.
        assert!(lines[1].ends_with(",0"));
    }

    #[test]
    fn all_failed_batches_surface_the_first_error() {
        let rows: Vec<(usize, MetricsRow)> = Vec::new();
        let failures = vec![(0, "boom".to_string())];
        let err = require_successes(&rows, &failures).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("boom"));
    }
}
