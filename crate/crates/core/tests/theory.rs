//! Cross-module laws.
//!
//! Every closed form or bound that a policy advertises is checked here
//! against the exact expectation oracle or an independent brute-force
//! computation on desk-scale instances. Where a popular simplification of a
//! law is *false*, a dedicated test freezes the counterexample so the
//! boundary of the guarantee stays documented.

use menumatch::gen::gen_uniform_theta;
use menumatch::matching::max_weight_matching;
use menumatch::oracle::{
    exact_expected_metrics, exact_expected_metrics_with, exhaustive_optimal_assortment, Objective,
};
use menumatch::policies::{
    compute_envy_graph, gd_objective, pairwise_assignment, policy_dynamic_pairwise, policy_greedy,
    policy_group, policy_order_aware, policy_pairwise, topological_batches, BatchPlan, EnvyGraph,
    KnownSchedule,
};
use menumatch::simulate::{evaluate, stream_rng, EvalConfig, OrderDistribution, PolicySpec};
use menumatch::{Assortment, ChoiceModelSpec, Instance};
use rand::Rng;

const TOL: f64 = 1e-9;
const PS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Deterministic per-test stream: `tag` separates tests, `k` separates draws.
fn draw_rng(tag: u64, k: u64) -> impl Rng {
    stream_rng(0x7E57_1A_B5, tag, k, 0)
}

fn uniform_instance(n: usize, m: usize, p: f64, rng: &mut impl Rng) -> Instance<f64> {
    let theta: Vec<Vec<f64>> = gen_uniform_theta(n, m, rng);
    Instance::new(theta, ChoiceModelSpec::Uniform { p })
}

fn oracle_mr(inst: &Instance<f64>, x: &Assortment) -> f64 {
    exact_expected_metrics(inst, x).unwrap().match_rate
}

fn oracle_mq(inst: &Instance<f64>, x: &Assortment) -> f64 {
    exact_expected_metrics(inst, x).unwrap().match_quality
}

/// Shapes with n·m small enough for exhaustive assortment search.
const EXHAUSTIVE_SHAPES: [(usize, usize); 14] = [
    (1, 4),
    (4, 1),
    (2, 2),
    (2, 3),
    (3, 2),
    (2, 4),
    (4, 2),
    (2, 5),
    (5, 2),
    (3, 3),
    (2, 6),
    (6, 2),
    (3, 4),
    (4, 3),
];

/// Offering every provider to every patient is exactly optimal for the match
/// rate under the uniform model: menus beyond the best available provider
/// never change an accept/abstain coin, so the full matrix dominates any
/// other offer pattern path by path.
#[test]
fn offering_everything_is_rate_optimal() {
    for (k, &(n, m)) in EXHAUSTIVE_SHAPES.iter().enumerate() {
        let p = PS[k % PS.len()];
        let mut rng = draw_rng(1, k as u64);
        let mut inst = uniform_instance(n, m, p, &mut rng);
        if k % 3 == 0 {
            inst.capacities[k % m] = 2;
        }
        let greedy = policy_greedy(&inst);
        let mr_full = oracle_mr(&inst, &greedy);
        let (_, best) = exhaustive_optimal_assortment(&inst, Objective::MatchRate).unwrap();
        assert!(
            (mr_full - best).abs() <= TOL,
            "shape {n}x{m}, p={p}: full menus gave {mr_full}, search found {best}"
        );
    }
}

/// Exact expected successes of `n` independent p-coins capped at `cap`.
fn expected_capped_successes(n: usize, p: f64, cap: u32) -> f64 {
    let q = 1.0 - p;
    // Binomial pmf by the usual multiplicative recurrence.
    let mut pmf = q.powi(n as i32);
    let mut total = 0.0;
    for x in 0..=n {
        total += pmf * f64::min(x as f64, f64::from(cap));
        if x < n {
            pmf *= (n - x) as f64 / (x + 1) as f64 * (p / q);
        }
    }
    total
}

/// With full menus under the uniform model, who matches is a pure counting
/// process: every responder flips a p-coin while any slot remains, so the
/// expected number of matches is exactly E[min(Binomial(n, p), total slots)].
#[test]
fn full_menus_match_until_coins_or_capacity_run_out() {
    for k in 0..15u64 {
        let mut rng = draw_rng(2, k);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let p = PS[k as usize % PS.len()];
        let mut inst = uniform_instance(n, m, p, &mut rng);
        for c in inst.capacities.iter_mut() {
            *c = rng.gen_range(1..=2);
        }
        let slots: u32 = inst.capacities.iter().sum();
        let mr = oracle_mr(&inst, &policy_greedy(&inst));
        let want = expected_capped_successes(n, p, slots) / n as f64;
        assert!(
            (mr - want).abs() <= TOL,
            "{n} patients, {slots} slots, p={p}: oracle {mr} vs counting {want}"
        );
    }
}

/// The folk floor "full menus match at least min(p, slots/patients)" is only
/// half true. When slots cover every patient the rate is exactly p and the
/// floor is met; when they don't, the matched count is min(coins, slots) and
/// the expectation of a min sits strictly below the min of expectations, so
/// the floor fails. Two patients sharing one slot at p=0.5 land at
/// (p + (1-p)p)/2 = 0.375, an eighth below the claimed 0.5 floor.
#[test]
fn the_rate_floor_needs_a_slot_for_everyone() {
    let theta = vec![vec![0.7], vec![0.7]];
    let scarce = Instance::new(theta.clone(), ChoiceModelSpec::Uniform { p: 0.5 });
    let mr_scarce = oracle_mr(&scarce, &policy_greedy(&scarce));
    assert!((mr_scarce - 0.375).abs() <= 1e-12);
    assert!(mr_scarce < 0.5 - 0.1, "floor min(p, slots/patients)=0.5 must fail here");

    let ample = Instance::new(theta, ChoiceModelSpec::Uniform { p: 0.5 }).with_uniform_capacity(2);
    let mr_ample = oracle_mr(&ample, &policy_greedy(&ample));
    assert!((mr_ample - 0.5).abs() <= 1e-12, "two slots for two patients: rate is exactly p");

    let mut rng = draw_rng(3, 0);
    let wide = uniform_instance(3, 4, 0.6, &mut rng);
    let mr_wide = oracle_mr(&wide, &policy_greedy(&wide));
    assert!((mr_wide - 0.6).abs() <= TOL, "more providers than patients: rate is exactly p");
}

/// Disjoint assignment menus decouple the patients, so the match rate is
/// exactly p times the fraction of patients holding a menu — including on
/// all-zero quality matrices, where the cardinality tie-break must still hand
/// out min(m, n) menus.
#[test]
fn disjoint_menus_hit_the_coin_rate_exactly() {
    for k in 0..60u64 {
        let mut rng = draw_rng(4, k);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let p = PS[k as usize % PS.len()];
        let inst = uniform_instance(n, m, p, &mut rng);
        let mr = oracle_mr(&inst, &policy_pairwise(&inst));
        let want = p * n.min(m) as f64 / n as f64;
        assert!((mr - want).abs() <= TOL, "{n}x{m}, p={p}: {mr} vs {want}");
    }

    let flat = Instance::new(vec![vec![0.0; 2]; 3], ChoiceModelSpec::Uniform { p: 0.6 });
    let mr = oracle_mr(&flat, &policy_pairwise(&flat));
    assert!((mr - 0.4).abs() <= TOL, "zero-quality pairs still count for the rate");
}

/// When every patient brings their own assigned provider into the group, the
/// shared menus reshuffle who takes which slot but never change how many
/// menus are non-empty, so the group policy keeps the pairwise rate exactly.
#[test]
fn shared_menus_keep_the_rate_when_everyone_brings_a_provider() {
    for k in 0..40u64 {
        let mut rng = draw_rng(5, k);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(n..=6);
        let p = PS[k as usize % PS.len()];
        let inst = uniform_instance(n, m, p, &mut rng);
        let mr_pair = oracle_mr(&inst, &policy_pairwise(&inst));
        let mr_group = oracle_mr(&inst, &policy_group(&inst));
        assert!(
            (mr_group - mr_pair).abs() <= TOL,
            "{n}x{m}, p={p}: group {mr_group} vs pairwise {mr_pair}"
        );
    }
}

/// The rate equality above is *specific* to that regime: a patient who left
/// the assignment empty-handed can join a group and retry its provider, which
/// strictly raises the rate. Two patients, one provider, p=0.75: pairwise
/// matches only the assigned patient (rate 0.375) while the grouped pair
/// reaches (p + (1-p)p)/2 = 0.46875.
#[test]
fn shared_menus_lift_the_rate_when_a_patient_arrives_empty_handed() {
    let inst = Instance::new(vec![vec![0.7], vec![0.7]], ChoiceModelSpec::Uniform { p: 0.75 });
    let mr_pair = oracle_mr(&inst, &policy_pairwise(&inst));
    let mr_group = oracle_mr(&inst, &policy_group(&inst));
    assert!((mr_pair - 0.375).abs() <= 1e-12);
    assert!((mr_group - 0.46875).abs() <= 1e-12);
    assert!(mr_group > mr_pair + 0.09);
}

/// Assignment menus keep at least a p-fraction of the best reachable
/// quality: the assignment upper-bounds any offer pattern's quality, and each
/// assigned pair converts with probability exactly p.
#[test]
fn assignment_menus_keep_at_least_p_of_the_best_quality() {
    for k in 0..30u64 {
        let shape = EXHAUSTIVE_SHAPES[k as usize % EXHAUSTIVE_SHAPES.len()];
        let p = PS[k as usize % PS.len()];
        let mut rng = draw_rng(6, k);
        let inst = uniform_instance(shape.0, shape.1, p, &mut rng);
        let mq_pair = oracle_mq(&inst, &policy_pairwise(&inst));
        let (_, best) = exhaustive_optimal_assortment(&inst, Objective::MatchQuality).unwrap();
        assert!(
            mq_pair >= p * best - TOL,
            "{shape:?}, p={p}: pairwise {mq_pair} vs p x optimal {}",
            p * best
        );
    }
}

/// The ascent objective is an *approximation* of total expected quality, not
/// a one-sided bound. Its availability factor replaces "which earlier
/// responders hold this offer" with an average rate, and that proxy
/// overstates survival once offers concentrate on few patients: one provider
/// offered to two of three patients at p=0.6 keeps survival (1 - p/2)^2 =
/// 0.49 at the last position where the truth is 1 - p = 0.4. This test
/// freezes the exact overshoot, the crowded-menu undershoot, and the one
/// case that must be exact — disjoint menus, where every factor is one.
#[test]
fn the_ascent_objective_tracks_quality_without_bounding_it() {
    // Overshoot, hand-checkable: d = (1 + 0.7 + 0.49)/3 = 0.73, objective
    // 0.6 * 0.73 * (0.9 + 0.7) = 0.7008; truly (1 - 0.4^2) * (0.9 + 0.7)/2
    // = 0.672 in total quality.
    let single = Instance::new(
        vec![vec![0.9], vec![0.7], vec![0.5]],
        ChoiceModelSpec::Uniform { p: 0.6 },
    );
    let two_of_three = Assortment::from_rows(vec![vec![true], vec![true], vec![false]]);
    let obj = gd_objective(&single, &two_of_three.to_continuous::<f64>());
    let total = 3.0 * oracle_mq(&single, &two_of_three);
    assert!((obj - 0.7008).abs() <= 1e-9);
    assert!((total - 0.672).abs() <= 1e-9);
    assert!(obj > total + 0.02, "concentrated offers must overshoot: {obj} vs {total}");

    // Undershoot: full menus at high p make the factors far too pessimistic,
    // since they ignore that a patient blocked from one provider is busy
    // elsewhere rather than still competing here.
    let mut rng = draw_rng(7, 0);
    let crowded = uniform_instance(5, 5, 0.9, &mut rng);
    let full = Assortment::full(5, 5);
    let obj = gd_objective(&crowded, &full.to_continuous::<f64>());
    let total = 5.0 * oracle_mq(&crowded, &full);
    assert!(obj < total - 0.3, "crowded menus must undershoot: {obj} vs {total}");

    // Disjoint menus: nobody contends, every availability factor is exactly
    // one, and the objective equals the true total quality.
    for k in 0..5u64 {
        let mut rng = draw_rng(7, 100 + k);
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(2..=5);
        let p = PS[k as usize % PS.len()];
        let inst = uniform_instance(n, m, p, &mut rng);
        let x = pairwise_assignment(&inst).to_assortment(m);
        let obj = gd_objective(&inst, &x.to_continuous::<f64>());
        let total = n as f64 * oracle_mq(&inst, &x);
        assert!((obj - total).abs() <= TOL, "{n}x{m}, p={p}: {obj} vs {total}");
    }
}

/// Maximizing the ascent objective is not the same as protecting the match
/// rate. On a 2x2 instance where both patients prize the same provider and
/// the second's alternative is nearly worthless, the objective's maximizer
/// funnels both onto provider 0 and lands strictly below the pairwise rate.
#[test]
fn the_ascent_objective_can_prefer_a_rate_losing_menu() {
    let inst =
        Instance::new(vec![vec![1.0, 0.0], vec![1.0, 0.1]], ChoiceModelSpec::Uniform { p: 0.5 });

    let mut best: Option<(Assortment, f64)> = None;
    for bits in 0u32..16 {
        let rows = vec![
            vec![bits & 1 != 0, bits & 2 != 0],
            vec![bits & 4 != 0, bits & 8 != 0],
        ];
        let x = Assortment::from_rows(rows);
        let obj = gd_objective(&inst, &x.to_continuous::<f64>());
        if best.as_ref().is_none_or(|&(_, b)| obj > b) {
            best = Some((x, obj));
        }
    }
    let (winner, _) = best.unwrap();
    assert!(
        winner.offered(0, 0) && winner.offered(1, 0),
        "the objective should funnel both patients onto the shared best provider"
    );

    let mr_winner = oracle_mr(&inst, &winner);
    let mr_pair = oracle_mr(&inst, &policy_pairwise(&inst));
    assert!((mr_pair - 0.5).abs() <= 1e-12);
    assert!(mr_winner < mr_pair - TOL, "winner rate {mr_winner} vs pairwise {mr_pair}");
}

/// Under the exit-option logit model, a single-slot disjoint menu leaves each
/// assigned patient an independent two-way race between their provider and
/// leaving, so the rate and quality collapse to exact per-patient sums.
#[test]
fn single_slot_menus_decouple_logit_rates() {
    for (k, &(n, m)) in [(6usize, 6usize), (6, 4)].iter().enumerate() {
        for (g, &gamma) in [0.1f64, 0.5].iter().enumerate() {
            let mut rng = draw_rng(8, (k * 2 + g) as u64);
            let theta: Vec<Vec<f64>> = gen_uniform_theta(n, m, &mut rng);
            let inst = Instance::new(theta, ChoiceModelSpec::Mnl { gamma });
            let assign = pairwise_assignment(&inst);
            let x = assign.to_assortment(m);

            let mut mr_want = 0.0;
            let mut mq_want = 0.0;
            for (i, v) in assign.provider_of.iter().enumerate() {
                if let Some(j) = *v {
                    let take = inst.theta[i][j].exp() / (inst.theta[i][j].exp() + gamma.exp());
                    mr_want += take;
                    mq_want += inst.theta[i][j] * take;
                }
            }
            mr_want /= n as f64;
            mq_want /= n as f64;

            let got = exact_expected_metrics(&inst, &x).unwrap();
            assert!((got.match_rate - mr_want).abs() <= TOL, "{n}x{m}, gamma={gamma}");
            assert!((got.match_quality - mq_want).abs() <= TOL, "{n}x{m}, gamma={gamma}");
        }
    }
}

/// Re-solving the assignment as responses arrive repairs the damage done by
/// unlucky early abstentions, so its expected quality never falls below the
/// static assignment's.
#[test]
fn resolving_the_assignment_never_lowers_expected_quality() {
    let shapes = [(3, 3), (3, 3), (3, 3), (3, 3), (4, 3), (4, 3), (4, 3), (3, 4), (3, 4), (3, 4)];
    for (k, &(n, m)) in shapes.iter().enumerate() {
        let p = PS[k % PS.len()];
        let mut rng = draw_rng(9, k as u64);
        let inst = uniform_instance(n, m, p, &mut rng);
        let static_mq = oracle_mq(&inst, &policy_pairwise(&inst));

        let matcher = policy_dynamic_pairwise(&inst);
        let resolved = exact_expected_metrics_with(&inst, |i, responded, caps| {
            let seen: Vec<bool> = (0..inst.n).map(|k| responded >> k & 1 == 1).collect();
            matcher.menu(i, &seen, caps)
        })
        .unwrap();
        assert!(
            resolved.match_quality >= static_mq - TOL,
            "{n}x{m}, p={p}: resolved {} vs static {static_mq}",
            resolved.match_quality
        );
    }
}

/// With the response order fully known (singleton waves), every fallback the
/// order-aware menu adds is a free upgrade: an earlier patient's provider
/// reaches a later patient only after its owner had their chance, so on the
/// same coin stream no trial gets worse — rate or quality — than pairwise.
#[test]
fn planned_fallbacks_only_add_free_upgrades() {
    let mut rng = draw_rng(10, 0);
    let inst = uniform_instance(4, 4, 0.5, &mut rng);

    let assign = pairwise_assignment(&inst);
    let graph = compute_envy_graph(&inst, &assign).unwrap();
    let order = graph.reverse_topological().unwrap();
    let plan = BatchPlan {
        batches: order.iter().map(|&i| vec![i]).collect(),
        within_batch_edges: 0,
    };

    // The order-aware matrix only ever widens the pairwise menus.
    let pw = policy_pairwise(&inst);
    let oa = policy_order_aware(&inst, KnownSchedule::Batches(&plan.batches));
    for i in 0..inst.n {
        for j in 0..inst.m {
            assert!(!pw.offered(i, j) || oa.offered(i, j));
        }
    }

    let cfg = EvalConfig {
        policies: vec![PolicySpec::Pairwise, PolicySpec::OrderAware],
        trials: 40,
        seeds: 2,
        master_seed: 7,
        order: OrderDistribution::Batched(plan),
    };
    let report = evaluate(&inst, &cfg);

    let mut paired: std::collections::HashMap<(usize, usize), [Option<(f64, f64)>; 2]> =
        std::collections::HashMap::new();
    for row in &report.rows {
        paired.entry((row.seed, row.trial)).or_default()[row.policy] = Some((row.mr, row.mq));
    }
    assert_eq!(paired.len(), 80);
    for ((seed, trial), cells) in paired {
        let (mr_pw, mq_pw) = cells[0].unwrap();
        let (mr_oa, mq_oa) = cells[1].unwrap();
        assert!(
            mr_oa >= mr_pw - 1e-12 && mq_oa >= mq_pw - 1e-12,
            "seed {seed} trial {trial}: pairwise ({mr_pw}, {mq_pw}) vs order-aware ({mr_oa}, {mq_oa})"
        );
    }
}

/// The two quality regimes: reluctant patients (small p) reward wide menus
/// because providers need many chances to be taken, while eager patients
/// (large p) reward exclusive menus because contention wastes good pairs.
#[test]
fn scarce_acceptances_reward_wide_menus_and_eager_ones_exclusivity() {
    let mut wide_greedy = 0.0;
    let mut wide_pair = 0.0;
    for k in 0..6u64 {
        let mut rng = draw_rng(11, k);
        let inst = uniform_instance(8, 2, 0.1, &mut rng);
        wide_greedy += oracle_mq(&inst, &policy_greedy(&inst));
        wide_pair += oracle_mq(&inst, &policy_pairwise(&inst));
    }
    assert!(
        wide_greedy >= 1.3 * wide_pair,
        "reluctant patients, scarce providers: greedy {wide_greedy} vs pairwise {wide_pair}"
    );

    let mut tight_greedy = 0.0;
    let mut tight_pair = 0.0;
    for k in 0..6u64 {
        let mut rng = draw_rng(12, k);
        let inst = uniform_instance(5, 5, 0.9, &mut rng);
        tight_greedy += oracle_mq(&inst, &policy_greedy(&inst));
        tight_pair += oracle_mq(&inst, &policy_pairwise(&inst));
    }
    assert!(
        tight_pair > tight_greedy,
        "eager patients, balanced market: pairwise {tight_pair} vs greedy {tight_greedy}"
    );
}

/// The assignment solver against brute force: maximum total weight over all
/// feasible assignments, at full cardinality min(patients, slots) — with
/// non-negative weights a heavier-but-smaller assignment never exists, since
/// any assignment extends for free.
#[test]
fn the_assignment_solver_matches_brute_force() {
    fn brute_best(weights: &[Vec<f64>], caps: &mut Vec<u32>, i: usize) -> f64 {
        if i == weights.len() {
            return 0.0;
        }
        let mut best = brute_best(weights, caps, i + 1);
        for j in 0..caps.len() {
            if caps[j] > 0 {
                caps[j] -= 1;
                let w = weights[i][j] + brute_best(weights, caps, i + 1);
                caps[j] += 1;
                best = best.max(w);
            }
        }
        best
    }

    for k in 0..40u64 {
        let mut rng = draw_rng(13, k);
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        let weights: Vec<Vec<f64>> = if k % 10 == 0 {
            vec![vec![0.0; m]; n]
        } else {
            gen_uniform_theta(n, m, &mut rng)
        };
        let caps: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=2)).collect();
        let slots: u32 = caps.iter().sum();

        let got = max_weight_matching(&weights, &caps);
        let best = brute_best(&weights, &mut caps.clone(), 0);
        assert!(
            (got.total_weight(&weights) - best).abs() <= TOL,
            "{n}x{m}: solver weight {} vs brute {best}",
            got.total_weight(&weights)
        );
        assert_eq!(got.cardinality(), n.min(slots as usize));
        let load = got.provider_load(m);
        assert!(load.iter().zip(&caps).all(|(l, c)| l <= c));
    }
}

/// The wave planner against brute force: over every contiguous split of the
/// precedence order into the requested number of waves, it finds the split
/// with the fewest precedence edges trapped inside a wave.
#[test]
fn wave_cuts_trap_the_fewest_edges_brute_force() {
    fn count_within(order: &[usize], graph: &EnvyGraph, bounds: &[usize]) -> usize {
        let n = order.len();
        let mut seg = vec![0usize; n];
        for (s, w) in bounds.windows(2).enumerate() {
            for &v in &order[w[0]..w[1]] {
                seg[v] = s;
            }
        }
        graph.edges().iter().filter(|(a, b)| seg[*a] == seg[*b]).count()
    }

    for k in 0..12u64 {
        let mut rng = draw_rng(14, k);
        let n = rng.gen_range(6..=8);
        let mut hidden: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            hidden.swap(i, rng.gen_range(0..=i));
        }
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.3) {
                    // Envier later in the hidden order, envied earlier: acyclic.
                    edges.push((hidden[b], hidden[a]));
                }
            }
        }
        let graph = EnvyGraph::from_edges(n, edges).unwrap();
        let order = graph.reverse_topological().unwrap();

        for l in [2usize, 3] {
            let plan = topological_batches(&graph, l);
            assert_eq!(plan.batches.len(), l.min(n));
            assert!(plan.batches.iter().all(|b| !b.is_empty()));

            let mut best = usize::MAX;
            if l == 2 {
                for s in 1..n {
                    best = best.min(count_within(&order, &graph, &[0, s, n]));
                }
            } else {
                for s1 in 1..n - 1 {
                    for s2 in s1 + 1..n {
                        best = best.min(count_within(&order, &graph, &[0, s1, s2, n]));
                    }
                }
            }
            assert_eq!(
                plan.within_batch_edges, best,
                "n={n}, l={l}: planner {} vs brute {best}",
                plan.within_batch_edges
            );

            // The reported count must also match the batches it returned.
            let mut bounds = vec![0];
            let mut at = 0;
            let flat: Vec<usize> = plan.batches.iter().flatten().copied().collect();
            assert_eq!(flat.len(), n);
            for b in &plan.batches {
                at += b.len();
                bounds.push(at);
            }
            assert_eq!(count_within(&flat, &graph, &bounds), plan.within_batch_edges);
        }

        let singles = topological_batches(&graph, n + 3);
        assert_eq!(singles.batches.len(), n);
        assert_eq!(singles.within_batch_edges, 0);
    }
}
