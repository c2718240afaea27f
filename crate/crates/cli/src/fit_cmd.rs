//! The `fit` command: CSV data in, coefficients JSON (and optional trace
//! CSV) out.

use dsiht::adaptive::{adsiht_fit, AdaptiveResult, IcKind};
use dsiht::data::Dataset;
use dsiht::groups::GroupLayout;
use dsiht::solver::{SolverConfig, SolverTrace};

use crate::args::FitArgs;
use crate::error::{CliError, CliResult};
use crate::io::{
    format_float, push_csv_row, read_groups_json, read_matrix_csv, read_vector_csv,
    render_fit_document, write_text, FitDocument, IcRow, IcTable,
};

/// Solver settings shared by the fit and simulate commands.
pub fn solver_config(kappa: f64, ic_const: f64, center: bool) -> CliResult<SolverConfig> {
    let config = SolverConfig {
        kappa,
        criterion_constant: ic_const,
        center,
        ..SolverConfig::default()
    };
    config.validate()?;
    Ok(config)
}

/// The grid implied by `--s0` / `--s0-grid`: a fixed level becomes a
/// single-candidate grid, no flag means the default grid.
pub fn requested_grid(s0: Option<usize>, s0_grid: Option<&[usize]>) -> Option<Vec<usize>> {
    match (s0, s0_grid) {
        (Some(level), _) => Some(vec![level]),
        (None, Some(grid)) => Some(grid.to_vec()),
        (None, None) => None,
    }
}

fn ic_kind_name(kind: IcKind) -> &'static str {
    match kind {
        IcKind::SparseGroupCriterion => "sgc",
        IcKind::Ebic => "ebic",
    }
}

/// Assemble the output document from an adaptive fit, mapping coefficients,
/// support, and group labels back to the caller's original column order.
pub fn build_document(
    result: &AdaptiveResult,
    layout: &GroupLayout,
    notes: Vec<String>,
) -> CliResult<FitDocument> {
    let best = &result.best;
    let coefficients = layout.scatter_to_original(&best.coefficients_original_scale)?;
    let mut support: Vec<usize> = best
        .coefficients
        .support()
        .iter()
        .map(|&k| layout.original_column(k))
        .collect();
    support.sort_unstable();
    let mut group_support: Vec<usize> = best
        .coefficients
        .group_support()
        .iter()
        .map(|&g| layout.group_id(g))
        .collect();
    group_support.sort_unstable();
    let rows = result
        .per_candidate
        .iter()
        .map(|c| IcRow {
            s0: c.s0,
            value: if c.ic_value.is_finite() {
                Some(c.ic_value)
            } else {
                None
            },
            support_size: c.support_size,
            group_support_size: c.group_support_size,
            selected_iteration: c.selected_iteration,
            sigma_bar: c.sigma_bar,
            rss: c.rss,
            interpolating: c.interpolating,
        })
        .collect();
    Ok(FitDocument {
        coefficients,
        intercept: best.intercept,
        support,
        group_support,
        s0_selected: best.s0_used,
        sigma_bar: best.sigma_bar,
        ic: IcTable {
            kind: ic_kind_name(result.ic_kind).to_string(),
            rows,
        },
        ridged: best.ridged,
        truncated: best.truncated,
        notes,
    })
}

/// Render the per-iteration trace of the winning pass as CSV. The criterion
/// column is empty outside the phase-two search range.
pub fn render_trace_csv(trace: &SolverTrace) -> String {
    let mut out = String::from("t,lambda,sigma,support_size,group_support_size,rss,criterion\n");
    for record in &trace.records {
        let criterion = record
            .criterion
            .map(format_float)
            .unwrap_or_default();
        push_csv_row(
            &mut out,
            &[
                record.t.to_string(),
                format_float(record.lambda),
                format_float(record.sigma),
                record.support_size().to_string(),
                record.group_support_size.to_string(),
                format_float(record.rss),
                criterion,
            ],
        );
    }
    out
}

/// Run the fit command.
pub fn run(args: &FitArgs) -> CliResult<()> {
    let config = solver_config(args.kappa, args.ic_const, args.center)?;
    let grid = requested_grid(args.s0, args.s0_grid.as_deref());

    let x_raw = read_matrix_csv(&args.x)?;
    let y = read_vector_csv(&args.y, args.y_col)?;
    if y.len() != x_raw.rows() {
        return Err(CliError::validation(format!(
            "response has {} entries but the design has {} rows",
            y.len(),
            x_raw.rows()
        )));
    }
    let spec = read_groups_json(&args.groups)?;
    let layout = GroupLayout::from_spec(&spec)?;
    if layout.structure().n_coefficients() != x_raw.cols() {
        return Err(CliError::validation(format!(
            "group layout covers {} columns but the design has {}",
            layout.structure().n_coefficients(),
            x_raw.cols()
        )));
    }
    let x = layout.arrange_columns(&x_raw)?;

    let mut notes = Vec::new();
    if y.iter().all(|&v| v == 0.0) {
        notes.push("degenerate response".to_string());
    }

    let data = if args.center {
        Dataset::standardize_centered(x, y)?
    } else {
        Dataset::standardize(x, y)?
    };
    let result = adsiht_fit(
        &data,
        layout.structure(),
        grid.as_deref(),
        IcKind::from(args.ic),
        &config,
    )?;

    let document = build_document(&result, &layout, notes)?;
    write_text(args.out.as_deref(), &render_fit_document(&document)?)?;
    if let Some(trace_path) = &args.trace {
        write_text(Some(trace_path), &render_trace_csv(&result.best.trace))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::IcChoice;

    #[test]
    fn grid_resolution_prefers_the_fixed_level() {
        assert_eq!(requested_grid(Some(3), None), Some(vec![3]));
        assert_eq!(requested_grid(Some(3), Some(&[1, 2])), Some(vec![3]));
        assert_eq!(requested_grid(None, Some(&[1, 2])), Some(vec![1, 2]));
        assert_eq!(requested_grid(None, None), None);
    }

    #[test]
    fn config_validation_catches_bad_kappa() {
        assert!(solver_config(1.5, 1000.0, false).is_err());
        assert!(solver_config(0.9, -1.0, false).is_err());
        let ok = solver_config(0.9, 1000.0, true).unwrap();
        assert!(ok.center);
    }

    #[test]
    fn ic_choice_names_match_the_serialized_forms() {
        assert_eq!(ic_kind_name(IcKind::from(IcChoice::Sgc)), "sgc");
        assert_eq!(ic_kind_name(IcKind::from(IcChoice::Ebic)), "ebic");
    }
}
