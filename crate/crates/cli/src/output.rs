//! Renders results to files and the terminal.
//!
//! Every artifact is deterministic: floats are written with Rust's shortest
//! round-trip formatting, row order follows the fixed cell/policy/seed/trial
//! enumeration, and region tables are keyed alphabetically. Running the same
//! config twice — at any worker count — reproduces every byte. All files are
//! written by the caller thread; workers never touch the filesystem.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use menumatch::simulate::{MetricSummary, TRIAL_CSV_HEADER};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ResolvedExperiment;
use crate::runner::CellOutcome;
use crate::CliError;

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn opt(se: &Option<f64>) -> String {
    se.map(|v| v.to_string()).unwrap_or_default()
}

fn cell(v: MetricSummary<f64>) -> String {
    format!("{},{}", v.mean, opt(&v.se))
}

/// Per-trial CSV for one cell: one row per (seed, trial, policy), rows in
/// seed-major order exactly as the engine produced them.
pub fn trials_csv(res: &ResolvedExperiment, outcome: &CellOutcome) -> String {
    let mut text = String::from(TRIAL_CSV_HEADER);
    text.push('\n');
    for row in &outcome.report.rows {
        text.push_str(&row.csv_line(res.policies[row.policy].name()));
        text.push('\n');
    }
    text
}

/// Index of a multi-cell run: each cell's declared axis values.
pub fn cells_csv(res: &ResolvedExperiment) -> String {
    let axes = res.declared_axes();
    let mut text = String::from("cell");
    for a in &axes {
        write!(text, ",{a}").unwrap();
    }
    text.push('\n');
    for c in &res.cells {
        write!(text, "{}", c.index).unwrap();
        for a in &axes {
            write!(text, ",{}", c.axis_value(a).expect("declared axis")).unwrap();
        }
        text.push('\n');
    }
    text
}

#[derive(Serialize)]
struct SummaryCell<'a> {
    cell: usize,
    axes: Map<String, Value>,
    n: usize,
    m: usize,
    metrics: &'a [menumatch::simulate::PolicyMetrics<f64>],
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    master_seed: u64,
    trials: usize,
    seeds: usize,
    order: &'a menumatch::simulate::OrderDistribution,
    policies: Vec<&'static str>,
    cells: Vec<SummaryCell<'a>>,
}

/// The run's aggregate report as pretty JSON.
pub fn summary_json(res: &ResolvedExperiment, outcomes: &[CellOutcome]) -> String {
    let summary = Summary {
        name: &res.cfg.name,
        master_seed: res.cfg.master_seed,
        trials: res.cfg.trials,
        seeds: res.cfg.seeds,
        order: &res.cfg.order,
        policies: res.policies.iter().map(|p| p.name()).collect(),
        cells: outcomes
            .iter()
            .map(|o| SummaryCell {
                cell: o.cell.index,
                axes: o.cell.axis_json(),
                n: o.n,
                m: o.m,
                metrics: &o.report.policies,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&summary).expect("reports serialize") + "\n"
}

/// Per-region match rates across all geographic cells, or `None` when no
/// cell carried region metadata.
pub fn regions_csv(outcomes: &[CellOutcome]) -> Option<String> {
    let mut text = String::from("cell,policy,region,match_rate,se,mean_patients\n");
    let mut any = false;
    for o in outcomes {
        for r in o.regions.iter().flatten() {
            any = true;
            writeln!(
                text,
                "{},{},{},{},{},{}",
                o.cell.index,
                r.policy,
                r.region,
                r.rate.mean,
                opt(&r.rate.se),
                r.mean_patients
            )
            .unwrap();
        }
    }
    any.then_some(text)
}

/// The sweep's phase table: per cell, the policy with the best mean quality.
pub fn winners_csv(res: &ResolvedExperiment, outcomes: &[CellOutcome]) -> String {
    let axes = res.declared_axes();
    let mut text = String::from("cell");
    for a in &axes {
        write!(text, ",{a}").unwrap();
    }
    text.push_str(",winner,mq_mean,mq_se\n");
    for o in outcomes {
        let winner = o
            .report
            .policies
            .iter()
            .filter(|p| !p.mq.mean.is_nan())
            .max_by(|a, b| a.mq.mean.partial_cmp(&b.mq.mean).expect("non-NaN means"))
            .expect("at least one policy");
        write!(text, "{}", o.cell.index).unwrap();
        for a in &axes {
            write!(text, ",{}", o.cell.axis_value(a).expect("declared axis")).unwrap();
        }
        writeln!(text, ",{},{},{}", winner.name, winner.mq.mean, opt(&winner.mq.se)).unwrap();
    }
    text
}

/// The sweep's full metric table: one row per (cell, policy).
pub fn metrics_csv(res: &ResolvedExperiment, outcomes: &[CellOutcome]) -> String {
    let axes = res.declared_axes();
    let mut text = String::from("cell");
    for a in &axes {
        write!(text, ",{a}").unwrap();
    }
    text.push_str(
        ",policy,mr_mean,mr_se,mq_mean,mq_se,norm_mr_mean,norm_mr_se,norm_mq_mean,norm_mq_se,\
         fair_min_mean,fair_var_mean,fair_range_mean,mean_regret_mean,mean_menu_size_mean\n",
    );
    for o in outcomes {
        for p in &o.report.policies {
            write!(text, "{}", o.cell.index).unwrap();
            for a in &axes {
                write!(text, ",{}", o.cell.axis_value(a).expect("declared axis")).unwrap();
            }
            writeln!(
                text,
                ",{},{},{},{},{},{},{},{},{},{}",
                p.name,
                cell(p.mr),
                cell(p.mq),
                cell(p.norm_mr),
                cell(p.norm_mq),
                p.fairness_min.mean,
                p.fairness_var.mean,
                p.fairness_range.mean,
                p.mean_regret.mean,
                p.mean_assortment_size.mean
            )
            .unwrap();
        }
    }
    text
}

/// Writes a benchmark run's artifacts: per-cell trial CSVs, the aggregate
/// JSON report, a cell index when the grid has more than one cell, and the
/// region table when the instances carried one. Returns the paths written.
pub fn write_run(
    res: &ResolvedExperiment,
    outcomes: &[CellOutcome],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let name = &res.cfg.name;
    let mut paths = Vec::new();
    let emit = |file: String, text: String, paths: &mut Vec<PathBuf>| -> Result<(), CliError> {
        let path = out_dir.join(file);
        write_file(&path, &text)?;
        paths.push(path);
        Ok(())
    };
    for o in outcomes {
        let file = if outcomes.len() == 1 {
            format!("{name}_trials.csv")
        } else {
            format!("{name}_cell{:03}_trials.csv", o.cell.index)
        };
        emit(file, trials_csv(res, o), &mut paths)?;
    }
    if outcomes.len() > 1 {
        emit(format!("{name}_cells.csv"), cells_csv(res), &mut paths)?;
    }
    emit(format!("{name}_summary.json"), summary_json(res, outcomes), &mut paths)?;
    if let Some(text) = regions_csv(outcomes) {
        emit(format!("{name}_regions.csv"), text, &mut paths)?;
    }
    Ok(paths)
}

/// Writes a sweep's artifacts: the winner-per-cell phase table and the full
/// metric table. Returns the paths written.
pub fn write_sweep(
    res: &ResolvedExperiment,
    outcomes: &[CellOutcome],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let name = &res.cfg.name;
    let winners = out_dir.join(format!("{name}_winners.csv"));
    write_file(&winners, &winners_csv(res, outcomes))?;
    let metrics = out_dir.join(format!("{name}_metrics.csv"));
    write_file(&metrics, &metrics_csv(res, outcomes))?;
    Ok(vec![winners, metrics])
}

/// One cell's results as a small aligned terminal table.
pub fn render_cell(outcome: &CellOutcome) -> String {
    let label = outcome.cell.label();
    let mut text = if label.is_empty() {
        format!("cell {} — n={} m={}\n", outcome.cell.index, outcome.n, outcome.m)
    } else {
        format!("cell {} ({label}) — n={} m={}\n", outcome.cell.index, outcome.n, outcome.m)
    };
    let fmt = |v: MetricSummary<f64>| match v.se {
        Some(se) => format!("{:.4} ±{:.4}", v.mean, se),
        None => format!("{:.4}", v.mean),
    };
    writeln!(
        text,
        "  {:<16} {:>16} {:>16} {:>8} {:>8}",
        "policy", "match_rate", "quality", "norm_mq", "regret"
    )
    .unwrap();
    for p in &outcome.report.policies {
        writeln!(
            text,
            "  {:<16} {:>16} {:>16} {:>8.3} {:>8.4}",
            p.name,
            fmt(p.mr),
            fmt(p.mq),
            p.norm_mq.mean,
            p.mean_regret.mean
        )
        .unwrap();
    }
    text
}
