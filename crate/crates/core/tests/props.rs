//! Structural invariants checked over randomized instances, menus, and
//! seeds: whatever the draw, trials conserve capacity and report metrics
//! that recompute from their own records, assignment menus stay regret-free,
//! instance files reload bit for bit, and the group and ordering primitives
//! agree with direct enumeration.

use menumatch::matching::solve_group_subproblem;
use menumatch::policies::{compute_envy_graph, pairwise_assignment, policy_pairwise};
use menumatch::simulate::{run_trial, stream_rng, MenuSource};
use menumatch::{Assortment, ChoiceModelSpec, Instance, ResponseOrder, SelectionOutcome};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn choice_strategy() -> impl Strategy<Value = ChoiceModelSpec<f64>> {
    prop_oneof![
        (0.05f64..=0.95).prop_map(|p| ChoiceModelSpec::Uniform { p }),
        (0.05f64..=0.95, 0.0f64..=1.0)
            .prop_map(|(p, alpha)| ChoiceModelSpec::Threshold { p, alpha }),
        (-2.0f64..=2.0).prop_map(|gamma| ChoiceModelSpec::Mnl { gamma }),
    ]
}

/// A small instance, an arbitrary offer matrix of matching shape, and a
/// stream seed for the trial itself.
fn scenario() -> impl Strategy<Value = (Instance<f64>, Assortment, u64)> {
    ((1usize..=5, 1usize..=4), choice_strategy()).prop_flat_map(|((n, m), choice)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, m), n),
            prop::collection::vec(1u32..=3, m),
            prop::collection::vec(prop::collection::vec(any::<bool>(), m), n),
            any::<u64>(),
        )
            .prop_map(move |(theta, caps, menu, seed)| {
                let mut inst = Instance::new(theta, choice.clone());
                inst.capacities = caps;
                (inst, Assortment::from_rows(menu), seed)
            })
    })
}

fn shuffled_order(n: usize, rng: &mut impl Rng) -> ResponseOrder {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    ResponseOrder(order)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trials_conserve_capacity_and_report_consistent_metrics(
        (inst, menu, seed) in scenario()
    ) {
        let mut rng = stream_rng(0xBA5E, 21, seed, 0);
        let sigma = shuffled_order(inst.n, &mut rng);
        let record = run_trial(&inst, MenuSource::Static(&menu), &sigma, &mut rng);

        prop_assert_eq!(record.selections.len(), inst.n);
        let mut taken = vec![0u32; inst.m];
        let mut matched = 0usize;
        let mut quality = 0.0f64;
        for (i, sel) in record.selections.iter().enumerate() {
            if let SelectionOutcome::Matched(j) = *sel {
                prop_assert!(menu.offered(i, j), "patient {} matched an unoffered provider", i);
                taken[j] += 1;
                matched += 1;
                quality += inst.theta[i][j];
            }
        }
        prop_assert!(taken.iter().zip(&inst.capacities).all(|(t, c)| t <= c));
        prop_assert!((record.mr - matched as f64 / inst.n as f64).abs() <= 1e-12);
        prop_assert!((record.mq - quality / inst.n as f64).abs() <= 1e-9);
        prop_assert_eq!(record.matched_qualities.len(), matched);
        prop_assert_eq!(record.regret.len(), inst.n);
        prop_assert!(record.regret.iter().all(|&r| r >= 0.0));
        for i in 0..inst.n {
            prop_assert_eq!(record.assortment_sizes[i], menu.row_size(i));
        }
    }

    /// A patient can only regret a provider someone else took first; with
    /// menus capped at each provider's capacity, nothing is ever gone.
    #[test]
    fn assignment_menus_never_create_regret((inst, _menu, seed) in scenario()) {
        let x = policy_pairwise(&inst);
        let mut rng = stream_rng(0xBA5E, 22, seed, 0);
        let sigma = shuffled_order(inst.n, &mut rng);
        let record = run_trial(&inst, MenuSource::Static(&x), &sigma, &mut rng);
        prop_assert!(record.regret.iter().all(|&r| r.abs() <= 1e-12));
    }

    /// Bit-exact persistence: parsing what we wrote and writing it again
    /// reproduces the original text, floats included.
    #[test]
    fn instances_survive_json_bit_for_bit((inst, _menu, _seed) in scenario()) {
        let text = serde_json::to_string(&inst).unwrap();
        let back: Instance<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    /// The group chooser against direct subset enumeration: best non-negative
    /// pair-sum over subsets of the remaining pool, with its reported members
    /// reproducing its reported value.
    #[test]
    fn group_values_match_subset_enumeration(k in 2usize..=7, seed in any::<u64>()) {
        let mut rng = stream_rng(0xBA5E, 23, seed, 0);
        let mut alpha = vec![vec![0.0f64; k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let v = rng.gen_range(-0.5..0.5);
                alpha[a][b] = v;
                alpha[b][a] = v;
            }
        }
        let remaining: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.8)).collect();

        let got = solve_group_subproblem(&alpha, &remaining);

        let mut best = 0.0f64;
        for mask in 0u32..1 << remaining.len() {
            if mask.count_ones() < 2 {
                continue;
            }
            let members: Vec<usize> = remaining
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            let mut value = 0.0;
            for a in 0..members.len() {
                for b in a + 1..members.len() {
                    value += alpha[members[a]][members[b]];
                }
            }
            best = best.max(value);
        }
        prop_assert!((got.value - best).abs() <= 1e-9, "chose {}, best is {}", got.value, best);

        prop_assert!(got.value >= 0.0);
        prop_assert!(got.members.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(got.members.iter().all(|v| remaining.contains(v)));
        let mut recount = 0.0;
        for a in 0..got.members.len() {
            for b in a + 1..got.members.len() {
                recount += alpha[got.members[a]][got.members[b]];
            }
        }
        prop_assert!((got.value - recount).abs() <= 1e-12);
    }

    /// Whenever an envy order comes back, envied patients sit strictly ahead
    /// of their enviers; circular envy must instead be refused loudly.
    #[test]
    fn envy_orders_put_the_envied_ahead((inst, _menu, _seed) in scenario()) {
        let assign = pairwise_assignment(&inst);
        if let Ok(graph) = compute_envy_graph(&inst, &assign) {
            let order = graph.reverse_topological().expect("validated graphs are acyclic");
            let mut pos = vec![usize::MAX; inst.n];
            let mut seen = vec![false; inst.n];
            for (at, &v) in order.iter().enumerate() {
                prop_assert!(!seen[v]);
                seen[v] = true;
                pos[v] = at;
            }
            prop_assert!(seen.iter().all(|&s| s));
            for &(envier, envied) in graph.edges() {
                prop_assert!(pos[envied] < pos[envier]);
            }
        }
    }
}
