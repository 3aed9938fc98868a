//! Monte Carlo trial engine and metric aggregation.
//!
//! A trial fixes a response order, walks the patients through it against a
//! menu source (a fixed offer matrix or a re-solving one), and records who
//! matched with whom. The evaluator repeats trials under counter-derived RNG
//! streams — the stream for trial `t` of seed `s` is the same no matter which
//! policy is being run, so policies face identical orders and identical
//! accept/abstain draws, and metric ratios against the random baseline are
//! paired rather than independent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    Assortment, AvailabilityState, Instance, ResponseOrder, SelectionOutcome,
};
use crate::choice::sample_selection;
use crate::policies::{
    policy_dynamic_pairwise, policy_gradient_descent, policy_greedy, policy_group,
    policy_order_aware, policy_pairwise, policy_random, single_provider_optimal, BatchPlan,
    DynamicMatcher, GdConfig, KnownSchedule,
};
use crate::scalar::{as_f64, real, Scalar};

/// Benchmark default: seeds averaged per configuration.
pub const DEFAULT_SEEDS: usize = 15;
/// Benchmark default: trials per seed.
pub const DEFAULT_TRIALS: usize = 100;

/// Stream tags keeping the independent randomness sources of a run apart.
const TAG_TRIAL: u64 = 1;
const TAG_RANDOM_MENU: u64 = 2;
const TAG_GD_BUILD: u64 = 3;
/// Tag for drawing a fresh instance per seed (used by benchmark runners).
pub const TAG_INSTANCE: u64 = 4;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream addressed by `(master_seed, tag, seed, counter)`.
///
/// Counter-based derivation means any stream can be reconstructed in
/// isolation: trial streams don't depend on how many policies ran before
/// them, and parallel executions agree with sequential ones bit for bit.
pub fn stream_rng(master_seed: u64, tag: u64, seed: u64, counter: u64) -> ChaCha8Rng {
    let mut z = master_seed;
    for v in [tag, seed, counter] {
        z = splitmix64(z ^ v.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        z = splitmix64(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// How the response order of a trial is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderDistribution {
    /// Uniformly random permutation.
    UniformRandom,
    /// Patients drawn without replacement with probability proportional to
    /// their mean quality row (floored at 1e-9 so zero rows stay drawable).
    ProportionalToMeanTheta,
    /// Waves respond in listed order; uniformly shuffled within each wave.
    Batched(BatchPlan),
}

/// Draws a response order for one trial.
pub fn sample_order<T: Scalar, R: Rng + ?Sized>(
    dist: &OrderDistribution,
    inst: &Instance<T>,
    rng: &mut R,
) -> ResponseOrder {
    match dist {
        OrderDistribution::UniformRandom => {
            let mut order: Vec<usize> = (0..inst.n).collect();
            order.shuffle(rng);
            ResponseOrder(order)
        }
        OrderDistribution::ProportionalToMeanTheta => {
            let mut weights: Vec<f64> = inst
                .mean_theta_rows()
                .iter()
                .map(|&w| as_f64(w).max(1e-9))
                .collect();
            let mut total: f64 = weights.iter().sum();
            let mut order = Vec::with_capacity(inst.n);
            for _ in 0..inst.n {
                let u = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = usize::MAX;
                for (i, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    acc += w;
                    pick = i;
                    if u < acc {
                        break;
                    }
                }
                order.push(pick);
                total -= weights[pick];
                weights[pick] = 0.0;
            }
            ResponseOrder(order)
        }
        OrderDistribution::Batched(plan) => {
            let mut seen = vec![false; inst.n];
            let mut order = Vec::with_capacity(inst.n);
            for batch in &plan.batches {
                let mut wave = batch.clone();
                wave.shuffle(rng);
                for &i in &wave {
                    assert!(i < inst.n && !seen[i], "batches must partition the patients");
                    seen[i] = true;
                }
                order.extend(wave);
            }
            assert_eq!(order.len(), inst.n, "batches must cover every patient");
            ResponseOrder(order)
        }
    }
}

/// Where each responding patient's menu comes from.
#[derive(Debug, Clone, Copy)]
pub enum MenuSource<'a, T> {
    /// One offer matrix fixed before any response.
    Static(&'a Assortment),
    /// Menus recomputed at each response from the live state.
    Resolving(DynamicMatcher<'a, T>),
}

/// Everything observed in one simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord<T> {
    /// The response order the trial ran under.
    pub sigma: ResponseOrder,
    /// Outcome per patient (indexed by patient, not response position).
    pub selections: Vec<SelectionOutcome>,
    /// Fraction of patients matched.
    pub mr: T,
    /// Sum of matched qualities over the patient count.
    pub mq: T,
    /// Qualities of the realized matches, in response order.
    pub matched_qualities: Vec<T>,
    /// Per patient: best offered quality minus best still-available offered
    /// quality at their decision (empty maxima count as 0).
    pub regret: Vec<T>,
    /// Per patient: how many providers their menu offered.
    pub assortment_sizes: Vec<usize>,
}

impl<T: Scalar> TrialRecord<T> {
    pub fn mean_regret(&self) -> T {
        let n = real::<T>(self.regret.len() as f64);
        self.regret.iter().copied().sum::<T>() / n
    }

    pub fn mean_assortment_size(&self) -> T {
        let total: usize = self.assortment_sizes.iter().sum();
        real::<T>(total as f64) / real::<T>(self.assortment_sizes.len() as f64)
    }
}

/// Runs one trial: patients respond in `sigma` order, each choosing from
/// their offered-and-available providers, consuming capacity as they match.
///
/// Every response event consumes exactly one uniform draw from `rng`
/// whatever the menu or model, so two runs over the same stream stay aligned
/// event for event even when their menus differ.
pub fn run_trial<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance<T>,
    menu: MenuSource<'_, T>,
    sigma: &ResponseOrder,
    rng: &mut R,
) -> TrialRecord<T> {
    assert_eq!(sigma.len(), inst.n, "order must cover every patient");
    let mut avail = AvailabilityState::new(&inst.capacities);
    let mut responded = vec![false; inst.n];
    let mut selections = vec![SelectionOutcome::Abstained; inst.n];
    let mut regret = vec![T::zero(); inst.n];
    let mut assortment_sizes = vec![0usize; inst.n];
    let mut matched_qualities = Vec::new();

    for &i in &sigma.0 {
        let offered: Vec<bool> = match menu {
            MenuSource::Static(x) => x.row(i).to_vec(),
            MenuSource::Resolving(d) => d.menu(i, &responded, avail.remaining()),
        };
        assortment_sizes[i] = offered.iter().filter(|&&b| b).count();
        let mask: Vec<bool> = (0..inst.m).map(|j| offered[j] && avail.available(j)).collect();

        let best_over = |keep: &[bool]| -> T {
            (0..inst.m)
                .filter(|&j| keep[j])
                .map(|j| inst.theta[i][j])
                .fold(T::zero(), T::max)
        };
        regret[i] = best_over(&offered) - best_over(&mask);

        let outcome = sample_selection(&inst.choice, &inst.theta[i], &mask, rng);
        if let SelectionOutcome::Matched(j) = outcome {
            avail.take(j);
            matched_qualities.push(inst.theta[i][j]);
        }
        selections[i] = outcome;
        responded[i] = true;
    }

    let n = real::<T>(inst.n as f64);
    let mr = real::<T>(matched_qualities.len() as f64) / n;
    let mq = matched_qualities.iter().copied().sum::<T>() / n;
    TrialRecord {
        sigma: sigma.clone(),
        selections,
        mr,
        mq,
        matched_qualities,
        regret,
        assortment_sizes,
    }
}

/// Per-trial fairness of the realized matches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessSample<T> {
    /// Worst matched quality.
    pub min: T,
    /// Population variance of matched qualities.
    pub variance: T,
    /// Max minus min matched quality.
    pub range: T,
}

/// Fairness of one trial's matched qualities; `None` when nobody matched
/// (such trials are excluded from aggregation, with the count reported).
pub fn fairness_metrics<T: Scalar>(matched_qualities: &[T]) -> Option<FairnessSample<T>> {
    if matched_qualities.is_empty() {
        return None;
    }
    let k = real::<T>(matched_qualities.len() as f64);
    let mean = matched_qualities.iter().copied().sum::<T>() / k;
    let variance = matched_qualities
        .iter()
        .map(|&q| (q - mean) * (q - mean))
        .sum::<T>()
        / k;
    let min = matched_qualities.iter().copied().fold(T::infinity(), T::min);
    let max = matched_qualities.iter().copied().fold(T::neg_infinity(), T::max);
    Some(FairnessSample { min, variance, range: max - min })
}

/// A policy the evaluator knows how to build and run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum PolicySpec<T> {
    /// Independent coin-flip menus — also the normalization baseline.
    Random,
    /// Everyone sees everyone.
    Greedy,
    /// Disjoint menus from the maximum-weight assignment.
    Pairwise,
    /// Assignment menus shared within positive-gain groups.
    Group,
    /// Projected-ascent menus.
    #[serde(rename = "gd")]
    GradientDescent(GdConfig<T>),
    /// Closed-form offer set (single provider, unit slot, only).
    SingleProvider,
    /// Assignment re-solved before every response.
    DynamicPairwise,
    /// Assignment menus plus fallbacks justified by the order distribution
    /// (exact realized order, or its batch structure when waves are known).
    OrderAware,
}

impl<T> PolicySpec<T> {
    /// Stable name used in reports and trial CSV rows.
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Random => "random",
            PolicySpec::Greedy => "greedy",
            PolicySpec::Pairwise => "pairwise",
            PolicySpec::Group => "group",
            PolicySpec::GradientDescent(_) => "gd",
            PolicySpec::SingleProvider => "single_provider",
            PolicySpec::DynamicPairwise => "dynamic_pairwise",
            PolicySpec::OrderAware => "order_aware",
        }
    }
}

/// One evaluation run: which policies, how much repetition, which orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct EvalConfig<T> {
    pub policies: Vec<PolicySpec<T>>,
    pub trials: usize,
    pub seeds: usize,
    pub master_seed: u64,
    pub order: OrderDistribution,
}

impl<T: Scalar> Default for EvalConfig<T> {
    fn default() -> Self {
        EvalConfig {
            policies: Vec::new(),
            trials: DEFAULT_TRIALS,
            seeds: DEFAULT_SEEDS,
            master_seed: 0,
            order: OrderDistribution::UniformRandom,
        }
    }
}

/// A policy prepared for one seed's trials.
enum Prepared<'a, T> {
    Fixed(Assortment),
    Resolving(DynamicMatcher<'a, T>),
    /// Menu rebuilt per trial from the realized order.
    PerTrialOrderAware,
}

fn prepare_policy<'a, T: Scalar>(
    inst: &'a Instance<T>,
    spec: &PolicySpec<T>,
    cfg: &EvalConfig<T>,
    seed: usize,
) -> Prepared<'a, T> {
    let build = |tag: u64| stream_rng(cfg.master_seed, tag, seed as u64, 0);
    match spec {
        PolicySpec::Random => Prepared::Fixed(policy_random(inst, &mut build(TAG_RANDOM_MENU))),
        PolicySpec::Greedy => Prepared::Fixed(policy_greedy(inst)),
        PolicySpec::Pairwise => Prepared::Fixed(policy_pairwise(inst)),
        PolicySpec::Group => Prepared::Fixed(policy_group(inst)),
        PolicySpec::GradientDescent(gd) => {
            Prepared::Fixed(policy_gradient_descent(inst, gd, &mut build(TAG_GD_BUILD)))
        }
        PolicySpec::SingleProvider => Prepared::Fixed(single_provider_optimal(inst)),
        PolicySpec::DynamicPairwise => Prepared::Resolving(policy_dynamic_pairwise(inst)),
        PolicySpec::OrderAware => match &cfg.order {
            OrderDistribution::Batched(plan) => {
                Prepared::Fixed(policy_order_aware(inst, KnownSchedule::Batches(&plan.batches)))
            }
            _ => Prepared::PerTrialOrderAware,
        },
    }
}

/// One policy's per-trial metrics, ready for a CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow<T> {
    pub seed: usize,
    pub trial: usize,
    /// Index into the run's policy list.
    pub policy: usize,
    pub mr: T,
    pub mq: T,
    pub fairness: Option<FairnessSample<T>>,
    pub mean_regret: T,
    pub mean_assortment_size: T,
}

/// Header matching [`TrialRow::csv_line`].
pub const TRIAL_CSV_HEADER: &str =
    "seed,trial,policy,mr,mq,fair_min,fair_var,fair_range,mean_regret,mean_menu_size";

impl<T: Scalar> TrialRow<T> {
    /// One CSV line; fairness cells are empty on no-match trials.
    pub fn csv_line(&self, policy_name: &str) -> String {
        let fair = match self.fairness {
            Some(f) => format!("{},{},{}", f.min, f.variance, f.range),
            None => ",,".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.seed,
            self.trial,
            policy_name,
            self.mr,
            self.mq,
            fair,
            self.mean_regret,
            self.mean_assortment_size
        )
    }
}

/// One policy's trial averages within a single seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySeedStats<T> {
    pub mr: T,
    pub mq: T,
    /// Means over the trials that had matches; `None` if none did.
    pub fairness: Option<FairnessSample<T>>,
    /// Trials with no matches, excluded from the fairness means.
    pub excluded_trials: usize,
    pub mean_regret: T,
    pub mean_assortment_size: T,
}

/// Everything produced by one seed: per-policy trial averages, the random
/// baseline's averages on the same trial streams, and the raw trial rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome<T> {
    pub seed: usize,
    pub policy_stats: Vec<PolicySeedStats<T>>,
    pub baseline_mr: T,
    pub baseline_mq: T,
    pub rows: Vec<TrialRow<T>>,
    /// Per policy, how many of the seed's trials each patient matched in —
    /// the raw counts behind per-group breakdowns such as regional rates.
    pub match_counts: Vec<Vec<u32>>,
}

/// Runs every configured policy (plus the implicit random baseline) through
/// one seed's trial streams.
pub fn run_seed_block<T: Scalar>(
    inst: &Instance<T>,
    cfg: &EvalConfig<T>,
    seed: usize,
) -> SeedOutcome<T> {
    run_seed_block_with_plan(inst, inst, cfg, seed)
}

/// Like [`run_seed_block`], but menus are built from `plan` while trials run
/// on `inst`. The two must share the patient/provider counts; qualities,
/// capacities, and the choice model may differ. This is the misspecification
/// protocol: policies see the observed instance, reality keeps the true one.
pub fn run_seed_block_with_plan<T: Scalar>(
    inst: &Instance<T>,
    plan: &Instance<T>,
    cfg: &EvalConfig<T>,
    seed: usize,
) -> SeedOutcome<T> {
    assert!(cfg.trials >= 1, "need at least one trial");
    assert_eq!((plan.n, plan.m), (inst.n, inst.m), "plan must describe the same population");
    let mut rows = Vec::with_capacity(cfg.policies.len() * cfg.trials);
    let mut policy_stats = Vec::with_capacity(cfg.policies.len());
    let mut match_counts = Vec::with_capacity(cfg.policies.len());

    let baseline_menu = policy_random(
        plan,
        &mut stream_rng(cfg.master_seed, TAG_RANDOM_MENU, seed as u64, 0),
    );
    let (baseline, _, _) = run_policy_seed(inst, cfg, seed, &Prepared::Fixed(baseline_menu));

    for (slot, spec) in cfg.policies.iter().enumerate() {
        let prepared = prepare_policy(plan, spec, cfg, seed);
        let (stats, trials, counts) = run_policy_seed(inst, cfg, seed, &prepared);
        for (t, row) in trials.into_iter().enumerate() {
            rows.push(TrialRow { seed, trial: t, policy: slot, ..row });
        }
        policy_stats.push(stats);
        match_counts.push(counts);
    }

    SeedOutcome {
        seed,
        policy_stats,
        baseline_mr: baseline.mr,
        baseline_mq: baseline.mq,
        rows,
        match_counts,
    }
}

fn run_policy_seed<T: Scalar>(
    inst: &Instance<T>,
    cfg: &EvalConfig<T>,
    seed: usize,
    prepared: &Prepared<'_, T>,
) -> (PolicySeedStats<T>, Vec<TrialRow<T>>, Vec<u32>) {
    let mut rows = Vec::with_capacity(cfg.trials);
    let mut mr_sum = T::zero();
    let mut mq_sum = T::zero();
    let mut regret_sum = T::zero();
    let mut size_sum = T::zero();
    let mut fair_sum = FairnessSample { min: T::zero(), variance: T::zero(), range: T::zero() };
    let mut with_matches = 0usize;
    let mut counts = vec![0u32; inst.n];

    for t in 0..cfg.trials {
        let mut rng = stream_rng(cfg.master_seed, TAG_TRIAL, seed as u64, t as u64);
        let sigma = sample_order(&cfg.order, inst, &mut rng);
        let record = match prepared {
            Prepared::Fixed(x) => run_trial(inst, MenuSource::Static(x), &sigma, &mut rng),
            Prepared::Resolving(d) => run_trial(inst, MenuSource::Resolving(*d), &sigma, &mut rng),
            Prepared::PerTrialOrderAware => {
                let x = policy_order_aware(inst, KnownSchedule::Order(&sigma));
                run_trial(inst, MenuSource::Static(&x), &sigma, &mut rng)
            }
        };

        for (i, sel) in record.selections.iter().enumerate() {
            if sel.provider().is_some() {
                counts[i] += 1;
            }
        }
        let fairness = fairness_metrics(&record.matched_qualities);
        if let Some(f) = fairness {
            fair_sum.min += f.min;
            fair_sum.variance += f.variance;
            fair_sum.range += f.range;
            with_matches += 1;
        }
        mr_sum += record.mr;
        mq_sum += record.mq;
        let mean_regret = record.mean_regret();
        let mean_size = record.mean_assortment_size();
        regret_sum += mean_regret;
        size_sum += mean_size;
        rows.push(TrialRow {
            seed,
            trial: t,
            policy: 0,
            mr: record.mr,
            mq: record.mq,
            fairness,
            mean_regret,
            mean_assortment_size: mean_size,
        });
    }

    let k = real::<T>(cfg.trials as f64);
    let fairness = (with_matches > 0).then(|| {
        let v = real::<T>(with_matches as f64);
        FairnessSample {
            min: fair_sum.min / v,
            variance: fair_sum.variance / v,
            range: fair_sum.range / v,
        }
    });
    let stats = PolicySeedStats {
        mr: mr_sum / k,
        mq: mq_sum / k,
        fairness,
        excluded_trials: cfg.trials - with_matches,
        mean_regret: regret_sum / k,
        mean_assortment_size: size_sum / k,
    };
    (stats, rows, counts)
}

/// Mean and across-seed standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub mean: T,
    /// `None` with fewer than two seeds.
    pub se: Option<T>,
}

impl<T: Scalar> MetricSummary<T> {
    /// Summary of per-seed values; NaN mean (serialized as null) when no
    /// seed produced a value.
    pub fn from_values(values: &[T]) -> Self {
        if values.is_empty() {
            return MetricSummary { mean: T::nan(), se: None };
        }
        let k = real::<T>(values.len() as f64);
        let mean = values.iter().copied().sum::<T>() / k;
        let se = (values.len() >= 2).then(|| {
            let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>()
                / real::<T>((values.len() - 1) as f64);
            (var / k).sqrt()
        });
        MetricSummary { mean, se }
    }
}

/// One policy's aggregated metrics across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics<T> {
    pub name: String,
    pub mr: MetricSummary<T>,
    pub mq: MetricSummary<T>,
    /// Per-seed ratios against the random baseline on the same trial
    /// streams, then summarized (the random policy's own ratio is exactly 1).
    pub norm_mr: MetricSummary<T>,
    pub norm_mq: MetricSummary<T>,
    pub fairness_min: MetricSummary<T>,
    pub fairness_var: MetricSummary<T>,
    pub fairness_range: MetricSummary<T>,
    /// Trials excluded from the fairness means because nobody matched.
    pub fairness_excluded_trials: usize,
    pub mean_regret: MetricSummary<T>,
    pub mean_assortment_size: MetricSummary<T>,
}

/// Aggregated evaluation results, plus the raw per-trial rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport<T> {
    pub policies: Vec<PolicyMetrics<T>>,
    /// Raw per-trial metrics (not serialized; written separately as CSV).
    #[serde(skip)]
    pub rows: Vec<TrialRow<T>>,
}

/// Combines per-seed outcomes into the final report.
pub fn summarize_blocks<T: Scalar>(
    cfg: &EvalConfig<T>,
    blocks: Vec<SeedOutcome<T>>,
) -> MetricsReport<T> {
    let mut policies = Vec::with_capacity(cfg.policies.len());
    for (slot, spec) in cfg.policies.iter().enumerate() {
        let pull = |f: &dyn Fn(&PolicySeedStats<T>) -> T| -> Vec<T> {
            blocks.iter().map(|b| f(&b.policy_stats[slot])).collect()
        };
        let mrs = pull(&|s| s.mr);
        let mqs = pull(&|s| s.mq);
        let norm = |vals: &[T], base: &dyn Fn(&SeedOutcome<T>) -> T| -> Vec<T> {
            vals.iter()
                .zip(blocks.iter())
                .filter(|(_, b)| base(b) > T::zero())
                .map(|(&v, b)| v / base(b))
                .collect()
        };
        let fair = |f: &dyn Fn(&FairnessSample<T>) -> T| -> Vec<T> {
            blocks
                .iter()
                .filter_map(|b| b.policy_stats[slot].fairness.as_ref().map(f))
                .collect()
        };
        policies.push(PolicyMetrics {
            name: spec.name().to_string(),
            mr: MetricSummary::from_values(&mrs),
            mq: MetricSummary::from_values(&mqs),
            norm_mr: MetricSummary::from_values(&norm(&mrs, &|b| b.baseline_mr)),
            norm_mq: MetricSummary::from_values(&norm(&mqs, &|b| b.baseline_mq)),
            fairness_min: MetricSummary::from_values(&fair(&|f| f.min)),
            fairness_var: MetricSummary::from_values(&fair(&|f| f.variance)),
            fairness_range: MetricSummary::from_values(&fair(&|f| f.range)),
            fairness_excluded_trials: blocks
                .iter()
                .map(|b| b.policy_stats[slot].excluded_trials)
                .sum(),
            mean_regret: MetricSummary::from_values(&pull(&|s| s.mean_regret)),
            mean_assortment_size: MetricSummary::from_values(&pull(&|s| s.mean_assortment_size)),
        });
    }
    let rows = blocks.into_iter().flat_map(|b| b.rows).collect();
    MetricsReport { policies, rows }
}

/// Evaluates every configured policy on a fixed instance: per seed, each
/// policy's menu is built from that seed's build stream and run through the
/// seed's shared trial streams; seed-level means are then summarized as
/// mean ± standard error across seeds, with normalized metrics taken against
/// the random baseline seed by seed.
pub fn evaluate<T: Scalar>(inst: &Instance<T>, cfg: &EvalConfig<T>) -> MetricsReport<T> {
    assert!(cfg.seeds >= 1, "need at least one seed");
    let blocks = (0..cfg.seeds).map(|s| run_seed_block(inst, cfg, s)).collect();
    summarize_blocks(cfg, blocks)
}
