//! `menumatch` — generate matching instances, run policy benchmarks, sweep
//! parameter grids, and query the exact oracle.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when a size guard
//! refuses the work.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use menumatch::gen::load_instance;
use menumatch::oracle::exact_expected_metrics;
use menumatch::Assortment;
use menumatch_cli::config::{self, guard_grid, ExperimentConfig, ResolvedExperiment};
use menumatch_cli::output::{render_cell, write_run, write_sweep};
use menumatch_cli::runner::{run_cells, write_instances};
use menumatch_cli::CliError;

#[derive(Parser)]
#[command(name = "menumatch", version, about = "Offer-first matching experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write every (cell, seed) instance of an experiment to disk
    Gen(RunArgs),
    /// Run the benchmark: trial CSVs, a JSON report, region rates
    Run(RunArgs),
    /// Run the grid and tabulate winners per cell
    Sweep(RunArgs),
    /// Exact expected metrics for one instance and assortment
    Oracle(OracleArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
struct RunArgs {
    /// Experiment config file (JSON)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Bundled experiment preset
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's trials per seed
    #[arg(long)]
    trials: Option<usize>,
    /// Override the config's seed count
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads (default: one per core)
    #[arg(long)]
    jobs: Option<usize>,
    /// Run grids beyond the cell-count guard
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance file (JSON)
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Assortment file (JSON, {"x": 0/1 matrix})
    #[arg(long, value_name = "FILE")]
    assortment: PathBuf,
}

fn load_experiment(args: &RunArgs) -> Result<ResolvedExperiment, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) => {
            let text = config::preset_text(name).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown preset {name:?}; available: {}",
                    config::preset_names().join(", ")
                ))
            })?;
            ExperimentConfig::from_str(text).expect("bundled presets parse")
        }
        _ => unreachable!("clap enforces exactly one source"),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    let res = config::resolve(cfg)?;
    guard_grid(res.cells.len(), args.force)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", args.out.display())))?;
    Ok(res)
}

fn cmd_gen(args: &RunArgs) -> Result<(), CliError> {
    let res = load_experiment(args)?;
    let paths = write_instances(&res, &args.out)?;
    println!(
        "wrote {} instances ({} cells x {} seeds) to {}",
        paths.len(),
        res.cells.len(),
        res.cfg.seeds,
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let res = load_experiment(args)?;
    let outcomes = run_cells(&res, args.jobs)?;
    for o in &outcomes {
        print!("{}", render_cell(o));
    }
    let paths = write_run(&res, &outcomes, &args.out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> Result<(), CliError> {
    let res = load_experiment(args)?;
    let outcomes = run_cells(&res, args.jobs)?;
    for o in &outcomes {
        let best = o
            .report
            .policies
            .iter()
            .max_by(|a, b| a.mq.mean.total_cmp(&b.mq.mean))
            .expect("at least one policy");
        let label = o.cell.label();
        println!(
            "cell {:>3} ({label}): {} mq={:.4}",
            o.cell.index, best.name, best.mq.mean
        );
    }
    let paths = write_sweep(&res, &outcomes, &args.out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let loaded =
        load_instance::<f64>(&args.instance).map_err(|e| CliError::usage(e.to_string()))?;
    let inst = loaded.instance();
    let text = std::fs::read_to_string(&args.assortment)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.assortment.display())))?;
    let x: Assortment = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.assortment.display())))?;
    if (x.n(), x.m()) != (inst.n, inst.m) {
        return Err(CliError::usage(format!(
            "assortment is {}x{} but the instance is {}x{}",
            x.n(),
            x.m(),
            inst.n,
            inst.m
        )));
    }
    let metrics = exact_expected_metrics(inst, &x).map_err(|e| CliError::guard(e.to_string()))?;
    println!("n = {}, m = {}", inst.n, inst.m);
    println!("match_rate = {}", metrics.match_rate);
    println!("match_quality = {}", metrics.match_quality);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Oracle(args) => cmd_oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
