//! Turns a resolved experiment into results: one instance per (cell, seed),
//! evaluated through the core trial engine on a worker pool.
//!
//! Instances are drawn from a dedicated counter-addressed stream, so a cell's
//! seed-`s` instance is the same whether the grid runs on one thread or
//! sixteen, and whether the neighboring cells exist at all. When a cell
//! declares planning misspecification (`p_hat`, `theta_noise`), policies see
//! the perturbed copy while trials keep the truth.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use menumatch::gen::{
    gen_geo_instance, gen_normal_theta, gen_uniform_theta, perturb_p, perturb_theta,
    save_geo_instance, save_instance,
};
use menumatch::simulate::{
    run_seed_block_with_plan, stream_rng, summarize_blocks, MetricSummary, SeedOutcome,
    TAG_INSTANCE,
};
use menumatch::{
    validate_instance, ChoiceModelSpec, EvalConfig64, GeoInstance64, Instance, Instance64,
    MetricsReport64,
};
use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::config::{override_p, BaseGenerator, CellSpec, ResolvedExperiment};
use crate::CliError;

/// One (cell, seed) draw: the instance trials run on, the instance policies
/// plan with (identical unless the cell misspecifies), and the geographic
/// metadata when the generator produced any.
#[derive(Debug, Clone)]
pub struct RealizedCell {
    pub truth: Instance64,
    pub plan: Instance64,
    pub geo: Option<GeoInstance64>,
}

/// The evaluation settings shared by every cell of the experiment.
pub fn eval_config(res: &ResolvedExperiment) -> EvalConfig64 {
    EvalConfig64 {
        policies: res.policies.clone(),
        trials: res.cfg.trials,
        seeds: res.cfg.seeds,
        master_seed: res.cfg.master_seed,
        order: res.cfg.order.clone(),
    }
}

/// Draws the instance for one cell and seed and applies the cell's overrides.
///
/// The draw consumes a fresh stream addressed by (master seed, seed, cell
/// index); planning noise continues the same stream after the instance, so
/// everything about the pair is reproducible from those three numbers.
pub fn realize_cell(
    res: &ResolvedExperiment,
    cell: &CellSpec,
    seed: usize,
) -> Result<RealizedCell, CliError> {
    let mut rng = stream_rng(res.cfg.master_seed, TAG_INSTANCE, seed as u64, cell.index as u64);
    let mut geo: Option<GeoInstance64> = None;

    let mut truth: Instance64 = match &res.base {
        BaseGenerator::Instance(inst) => (**inst).clone(),
        BaseGenerator::GeoInstance(loaded) => {
            let g = (**loaded).clone();
            let inst = g.instance.clone();
            geo = Some(g);
            inst
        }
        BaseGenerator::Uniform { n, m, p } => {
            let rows = cell.ratio.map_or(*n, |r| r * *m);
            let p = cell.p.unwrap_or(*p);
            Instance::new(gen_uniform_theta(rows, *m, &mut rng), ChoiceModelSpec::Uniform { p })
        }
        BaseGenerator::Normal { n, m, s, p } => {
            let rows = cell.ratio.map_or(*n, |r| r * *m);
            let s = cell.s.unwrap_or(*s);
            let p = cell.p.unwrap_or(*p);
            Instance::new(gen_normal_theta(rows, *m, s, &mut rng), ChoiceModelSpec::Uniform { p })
        }
        BaseGenerator::Geo(geo_cfg) => {
            let mut gc = (**geo_cfg).clone();
            if let Some(p) = cell.p {
                gc.p = p;
            }
            let g: GeoInstance64 =
                gen_geo_instance(&gc, &mut rng).map_err(|e| CliError::usage(e.to_string()))?;
            let inst = g.instance.clone();
            geo = Some(g);
            inst
        }
    };

    // Generated bases consumed `cell.p` above; preloaded instances take it
    // here, keeping their model family.
    if let Some(p) = cell.p {
        if matches!(
            res.base,
            BaseGenerator::Instance(_) | BaseGenerator::GeoInstance(_)
        ) {
            truth.choice = override_p(&truth.choice, p)?;
        }
    }
    if let Some(gamma) = cell.gamma {
        truth.choice = ChoiceModelSpec::Mnl { gamma };
    }
    if let Some(c) = cell.capacity {
        truth = truth.with_uniform_capacity(c);
    }
    validate_instance(&truth).map_err(|e| CliError::usage(e.to_string()))?;
    // Keep the saved geographic copy consistent with the overrides.
    if let Some(g) = geo.as_mut() {
        g.instance = truth.clone();
    }

    let mut plan = truth.clone();
    if let Some(p_hat) = cell.p_hat {
        plan = perturb_p(&plan, p_hat).map_err(|e| CliError::usage(e.to_string()))?;
    }
    if let Some(s) = cell.theta_noise {
        let (_, observed) = perturb_theta(&plan, s, &mut rng);
        plan = observed;
    }

    Ok(RealizedCell { truth, plan, geo })
}

/// One region's match rate under one policy, aggregated across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRate {
    pub policy: String,
    pub region: String,
    /// Fraction of the region's patients matched per trial, averaged within
    /// each seed and summarized across seeds.
    pub rate: MetricSummary<f64>,
    /// Patients the region held, averaged across seeds.
    pub mean_patients: f64,
}

/// Everything one grid cell produced.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: CellSpec,
    pub n: usize,
    pub m: usize,
    pub report: MetricsReport64,
    /// Per-region match rates — only for geographic generators.
    pub regions: Option<Vec<RegionRate>>,
}

type Piece = ((usize, usize), SeedOutcome<f64>, Option<Vec<String>>);

/// Runs every cell of the experiment. (cell, seed) pairs are dispatched to a
/// worker pool (`jobs` threads, or one per core when `None`); results come
/// back in deterministic cell-then-seed order regardless of scheduling.
pub fn run_cells(
    res: &ResolvedExperiment,
    jobs: Option<usize>,
) -> Result<Vec<CellOutcome>, CliError> {
    let eval = eval_config(res);
    let pool = ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
    let seeds = res.cfg.seeds;
    let tasks: Vec<(usize, usize)> = (0..res.cells.len())
        .flat_map(|c| (0..seeds).map(move |s| (c, s)))
        .collect();

    let pieces: Vec<Piece> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, s)| -> Result<Piece, CliError> {
                let rc = realize_cell(res, &res.cells[c], s)?;
                let block = run_seed_block_with_plan(&rc.truth, &rc.plan, &eval, s);
                let regions = rc.geo.map(|g| g.patient_regions);
                Ok(((rc.truth.n, rc.truth.m), block, regions))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let mut outcomes = Vec::with_capacity(res.cells.len());
    let mut pieces = pieces.into_iter();
    for cell in &res.cells {
        let chunk: Vec<Piece> = pieces.by_ref().take(seeds).collect();
        let (n, m) = chunk[0].0;
        let regions = aggregate_regions(&eval, &chunk);
        let blocks: Vec<SeedOutcome<f64>> = chunk.into_iter().map(|p| p.1).collect();
        let report = summarize_blocks(&eval, blocks);
        outcomes.push(CellOutcome { cell: *cell, n, m, report, regions });
    }
    Ok(outcomes)
}

/// Per-policy, per-region match rates from one cell's seed blocks, `None`
/// unless every seed carried region metadata. Regions are the union over
/// seeds, alphabetical; a seed contributes to a region's rate only when it
/// drew at least one patient there.
fn aggregate_regions(eval: &EvalConfig64, chunk: &[Piece]) -> Option<Vec<RegionRate>> {
    if chunk.iter().any(|(_, _, r)| r.is_none()) {
        return None;
    }
    let mut names: BTreeSet<&String> = BTreeSet::new();
    for (_, _, regs) in chunk {
        names.extend(regs.as_ref().expect("checked above"));
    }
    let trials = eval.trials as f64;
    let mut out = Vec::new();
    for (slot, spec) in eval.policies.iter().enumerate() {
        for &name in &names {
            let mut rates = Vec::new();
            let mut populations = Vec::new();
            for (_, block, regs) in chunk {
                let regs = regs.as_ref().expect("checked above");
                let members: Vec<usize> = (0..regs.len()).filter(|&i| &regs[i] == name).collect();
                populations.push(members.len() as f64);
                if members.is_empty() {
                    continue;
                }
                let matched: u32 = members.iter().map(|&i| block.match_counts[slot][i]).sum();
                rates.push(f64::from(matched) / (members.len() as f64 * trials));
            }
            out.push(RegionRate {
                policy: spec.name().to_string(),
                region: name.clone(),
                rate: MetricSummary::from_values(&rates),
                mean_patients: populations.iter().sum::<f64>() / populations.len() as f64,
            });
        }
    }
    Some(out)
}

/// Output filename for one generated instance.
pub fn instance_filename(name: &str, cell: usize, seed: usize) -> String {
    format!("{name}_cell{cell:03}_seed{seed:02}.json")
}

/// Writes every (cell, seed) instance of the experiment to `out_dir` —
/// geographic instances with their metadata, everything else in the plain
/// schema. Only the true instance is written; planning perturbations are a
/// run-time protocol, not data.
pub fn write_instances(
    res: &ResolvedExperiment,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::with_capacity(res.cells.len() * res.cfg.seeds);
    for cell in &res.cells {
        for seed in 0..res.cfg.seeds {
            let rc = realize_cell(res, cell, seed)?;
            let path = out_dir.join(instance_filename(&res.cfg.name, cell.index, seed));
            match &rc.geo {
                Some(g) => save_geo_instance(&path, g),
                None => save_instance(&path, &rc.truth),
            }
            .map_err(|e| CliError::usage(e.to_string()))?;
            paths.push(path);
        }
    }
    Ok(paths)
}
