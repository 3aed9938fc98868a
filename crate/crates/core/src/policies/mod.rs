//! Offer-matrix policies.
//!
//! Everything here maps an [`Instance`] to an [`Assortment`] offered before
//! any patient responds (plus one re-solving variant for settings where menus
//! may be recomputed between response events). Policies are deterministic
//! given their inputs; the only randomized one takes an explicit RNG.

mod gradient;
mod ordering;

pub use gradient::{gd_gradient, gd_objective, policy_gradient_descent, GdConfig};
pub use ordering::{
    compute_envy_graph, policy_order_aware, topological_batches, BatchPlan, EnvyCycleError,
    EnvyGraph, KnownSchedule,
};

use rand::Rng;

use crate::matching::{max_weight_matching, solve_group_subproblem, PairAssignment};
use crate::model::{Assortment, ChoiceModelSpec, Instance};
use crate::scalar::{real, Scalar};

/// Selection probability the optimizing policies plan with.
///
/// The planning heuristics model a patient as accepting their best offer with
/// one probability `p`. For the explicitly parameterized models that is `p`
/// itself; for the logit model it is the chance that a lone offered provider
/// is accepted, averaged over all pairs:
/// `mean_{i,j} e^{theta_ij} / (e^{theta_ij} + e^{gamma})`.
pub fn effective_p<T: Scalar>(inst: &Instance<T>) -> T {
    match inst.choice {
        ChoiceModelSpec::Uniform { p } | ChoiceModelSpec::Threshold { p, .. } => p,
        ChoiceModelSpec::Mnl { gamma } => {
            let eg = gamma.exp();
            let total: T = inst
                .theta
                .iter()
                .flat_map(|row| row.iter())
                .map(|&v| {
                    let ev = v.exp();
                    ev / (ev + eg)
                })
                .sum();
            total / real::<T>((inst.n * inst.m) as f64)
        }
    }
}

/// Offers each provider to each patient independently with probability 1/2.
pub fn policy_random<T: Scalar, R: Rng + ?Sized>(inst: &Instance<T>, rng: &mut R) -> Assortment {
    let mut x = Assortment::empty(inst.n, inst.m);
    for i in 0..inst.n {
        for j in 0..inst.m {
            x.set(i, j, rng.gen::<f64>() < 0.5);
        }
    }
    x
}

/// Offers every provider to every patient.
pub fn policy_greedy<T: Scalar>(inst: &Instance<T>) -> Assortment {
    let _ = inst.choice; // the all-ones menu ignores the choice model
    Assortment::full(inst.n, inst.m)
}

/// Capacity-aware maximum-weight assignment of patients to providers under
/// the instance's quality matrix.
pub fn pairwise_assignment<T: Scalar>(inst: &Instance<T>) -> PairAssignment {
    max_weight_matching(&inst.theta, &inst.capacities)
}

/// Offers each patient exactly their provider under the maximum-weight
/// assignment (nothing to patients the assignment leaves out).
///
/// Menus are disjoint up to provider capacity, so no patient can ever find
/// their offer taken: per-patient regret is identically zero.
pub fn policy_pairwise<T: Scalar>(inst: &Instance<T>) -> Assortment {
    pairwise_assignment(inst).to_assortment(inst.m)
}

/// Exact expected change in mean match quality (normalized by `n`) from
/// letting patients `i` and `i'` see each other's assigned providers on top
/// of the assignment's own offers.
///
/// The two patients' menus stay disjoint from everyone else's, so the
/// difference localizes to the two-patient subsystem; it is computed in
/// closed form by enumerating the two interleavings and the accept/abstain
/// outcomes of the planning model (accept probability [`effective_p`]).
/// Either patient may be unassigned; an unassigned patient contributes no
/// provider but can still receive the other's.
pub fn pairwise_swap_gain<T: Scalar>(
    inst: &Instance<T>,
    assign: &PairAssignment,
    i: usize,
    i_prime: usize,
) -> T {
    assert_ne!(i, i_prime, "swap gain needs two distinct patients");
    let p = effective_p(inst);
    let vi = assign.provider_of[i];
    let vip = assign.provider_of[i_prime];

    // Distinct providers of the subsystem, ascending so tie-breaks inside the
    // subsystem agree with global index order.
    let mut provs: Vec<usize> = [vi, vip].iter().flatten().copied().collect();
    provs.sort_unstable();
    provs.dedup();
    if provs.is_empty() {
        return T::zero();
    }
    // Slots per provider inside the subsystem: both patients assigned to the
    // same provider consume two of its slots, otherwise one each.
    let caps: Vec<u32> = provs
        .iter()
        .map(|&j| {
            let uses = [vi, vip].iter().flatten().filter(|&&v| v == j).count() as u32;
            uses.min(inst.capacities[j])
        })
        .collect();

    let menu_of = |v: Option<usize>| -> Vec<bool> {
        provs.iter().map(|&j| v == Some(j)).collect()
    };
    let base = [menu_of(vi), menu_of(vip)];
    let aug = [vec![true; provs.len()], vec![true; provs.len()]];

    let patients = [i, i_prime];
    let value = |pat: usize, k: usize| inst.theta[patients[pat]][provs[k]];

    // Expected quality collected by one patient choosing from `menu` given
    // remaining subsystem slots; returns (expectation, chosen-slot index
    // distribution is not needed — the caller enumerates outcomes).
    let best_available = |pat: usize, menu: &[bool], caps: &[u32]| -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for k in 0..provs.len() {
            if menu[k] && caps[k] > 0 {
                let v = value(pat, k);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((k, v));
                }
            }
        }
        best.map(|(k, _)| k)
    };

    let expected = |menus: &[Vec<bool>; 2]| -> T {
        let half = real::<T>(0.5);
        let mut total = T::zero();
        for (first, second) in [(0usize, 1usize), (1, 0)] {
            let mut order_exp = T::zero();
            match best_available(first, &menus[first], &caps) {
                Some(k) => {
                    // First accepts with probability p and takes slot k.
                    let mut caps_after = caps.clone();
                    caps_after[k] -= 1;
                    let second_after = best_available(second, &menus[second], &caps_after)
                        .map_or(T::zero(), |k2| value(second, k2));
                    let second_idle = best_available(second, &menus[second], &caps)
                        .map_or(T::zero(), |k2| value(second, k2));
                    order_exp += p * (value(first, k) + p * second_after);
                    order_exp += (T::one() - p) * p * second_idle;
                }
                None => {
                    if let Some(k2) = best_available(second, &menus[second], &caps) {
                        order_exp += p * value(second, k2);
                    }
                }
            }
            total += half * order_exp;
        }
        total
    };

    (expected(&aug) - expected(&base)) / real::<T>(inst.n as f64)
}

/// Builds menus by grouping patients around the maximum-weight assignment.
///
/// Starting from the capacity-aware assignment, all pairwise sharing gains
/// are computed once; groups with the largest total gain are then formed one
/// at a time (each group's members all see the union of the group's assigned
/// providers) until no remaining group has positive gain. Patients never
/// grouped keep exactly their assignment menu.
pub fn policy_group<T: Scalar>(inst: &Instance<T>) -> Assortment {
    let assign = pairwise_assignment(inst);
    let n = inst.n;
    let mut alpha = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for ip in i + 1..n {
            let g = pairwise_swap_gain(inst, &assign, i, ip);
            alpha[i][ip] = g;
            alpha[ip][i] = g;
        }
    }

    let mut x = assign.to_assortment(inst.m);
    let mut remaining: Vec<usize> = (0..n).collect();
    loop {
        let sel = solve_group_subproblem(&alpha, &remaining);
        if sel.value <= T::zero() || sel.members.len() < 2 {
            break;
        }
        for &a in &sel.members {
            for &b in &sel.members {
                if let Some(v) = assign.provider_of[b] {
                    x.set(a, v, true);
                }
            }
        }
        remaining.retain(|r| !sel.members.contains(r));
    }
    x
}

/// Optimal offer set for a single provider with one slot: offer to the `s`
/// highest-quality patients, where `s` maximizes
/// `(1 - (1-p)^s) * mean(top-s qualities)`.
///
/// Ties in quality rank lower-index patients first; ties in the objective
/// resolve to the smallest `s`. Panics unless `m == 1` with unit capacity.
pub fn single_provider_optimal<T: Scalar>(inst: &Instance<T>) -> Assortment {
    assert_eq!(inst.m, 1, "single-provider construction needs exactly one provider");
    assert_eq!(inst.capacities[0], 1, "single-provider construction needs a unit slot");
    let p = effective_p(inst);
    let mut order: Vec<usize> = (0..inst.n).collect();
    order.sort_by(|&a, &b| {
        inst.theta[b][0]
            .partial_cmp(&inst.theta[a][0])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut best_value = T::zero();
    let mut best_s = 0usize;
    let mut prefix = T::zero();
    for s in 1..=inst.n {
        prefix += inst.theta[order[s - 1]][0];
        let fill = T::one() - (T::one() - p).powi(s as i32);
        let value = fill * prefix / real::<T>(s as f64);
        if value > best_value {
            best_value = value;
            best_s = s;
        }
    }

    let mut x = Assortment::empty(inst.n, 1);
    for &i in order.iter().take(best_s) {
        x.set(i, 0, true);
    }
    x
}

/// Menu source that re-solves the assignment as availability evolves.
///
/// Before each response event the maximum-weight assignment is recomputed on
/// the not-yet-responded patients and the remaining capacity; the responding
/// patient is shown exactly their slot in that assignment (possibly nothing).
#[derive(Debug, Clone, Copy)]
pub struct DynamicMatcher<'a, T> {
    inst: &'a Instance<T>,
}

impl<T: Scalar> DynamicMatcher<'_, T> {
    /// Menu for `patient` about to respond: `responded[k]` marks patients who
    /// already acted, `remaining` is per-provider residual capacity.
    pub fn menu(&self, patient: usize, responded: &[bool], remaining: &[u32]) -> Vec<bool> {
        debug_assert!(!responded[patient], "responding patient cannot have responded already");
        let rows: Vec<usize> = (0..self.inst.n).filter(|&i| !responded[i]).collect();
        let weights: Vec<Vec<T>> = rows.iter().map(|&i| self.inst.theta[i].clone()).collect();
        let assign = max_weight_matching(&weights, remaining);
        let slot = rows
            .iter()
            .position(|&i| i == patient)
            .and_then(|r| assign.provider_of[r]);
        (0..self.inst.m).map(|j| slot == Some(j)).collect()
    }
}

/// Re-solving variant of the assignment policy for availability-reactive
/// settings.
pub fn policy_dynamic_pairwise<T: Scalar>(inst: &Instance<T>) -> DynamicMatcher<'_, T> {
    DynamicMatcher { inst }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_inst(theta: Vec<Vec<f64>>, p: f64) -> Instance<f64> {
        Instance::new(theta, ChoiceModelSpec::Uniform { p })
    }

    #[test]
    fn greedy_offers_everything() {
        let inst = uniform_inst(vec![vec![0.2, 0.8], vec![0.5, 0.1]], 0.5);
        let x = policy_greedy(&inst);
        assert_eq!(x.row_size(0), 2);
        assert_eq!(x.row_size(1), 2);
    }

    #[test]
    fn random_menus_hit_half_density_on_average() {
        let inst = uniform_inst(vec![vec![0.5; 40]; 40], 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = policy_random(&inst, &mut rng);
        let ones: usize = (0..40).map(|i| x.row_size(i)).sum();
        let frac = ones as f64 / 1600.0;
        assert!((frac - 0.5).abs() < 0.05, "offer density {frac} far from 1/2");
    }

    #[test]
    fn pairwise_offers_are_disjoint_singletons() {
        let inst = uniform_inst(
            vec![vec![0.9, 0.1, 0.4], vec![0.8, 0.7, 0.2], vec![0.3, 0.6, 0.5]],
            0.5,
        );
        let x = policy_pairwise(&inst);
        for i in 0..3 {
            assert!(x.row_size(i) <= 1);
        }
        for j in 0..3 {
            assert!(x.column_size(j) <= 1);
        }
        // Weight-optimal: 0->0 (0.9), 1->1 (0.7)… then 2->2 (0.5): total 2.1.
        assert_eq!(x.rows()[0], vec![true, false, false]);
        assert_eq!(x.rows()[1], vec![false, true, false]);
        assert_eq!(x.rows()[2], vec![false, false, true]);
    }

    #[test]
    fn swap_gain_matches_hand_computed_shared_provider_case() {
        // Two patients fighting over one provider, third patient irrelevant:
        // the matched/unmatched pair sharing a 0.7 provider at p = 0.75 gains
        // (expected augmented − expected baseline)/n = (0.65625 − 0.525)/3.
        let inst = uniform_inst(vec![vec![0.7], vec![0.7], vec![0.1]], 0.75);
        let assign = pairwise_assignment(&inst);
        assert_eq!(assign.provider_of, vec![Some(0), None, None]);
        let gain = pairwise_swap_gain(&inst, &assign, 0, 1);
        assert!((gain - 0.04375).abs() < 1e-12, "gain was {gain}");
    }

    #[test]
    fn swap_gain_is_symmetric_in_its_arguments() {
        let inst = uniform_inst(
            vec![vec![0.9, 0.2], vec![0.6, 0.8], vec![0.1, 0.3]],
            0.6,
        );
        let assign = pairwise_assignment(&inst);
        for (i, ip) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let a = pairwise_swap_gain(&inst, &assign, i, ip);
            let b = pairwise_swap_gain(&inst, &assign, ip, i);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_gain_for_two_unassigned_patients_is_zero() {
        let inst = uniform_inst(vec![vec![0.9], vec![0.5], vec![0.4]], 0.5);
        let assign = pairwise_assignment(&inst);
        assert_eq!(assign.provider_of[1], None);
        assert_eq!(assign.provider_of[2], None);
        assert_eq!(pairwise_swap_gain(&inst, &assign, 1, 2), 0.0);
    }

    #[test]
    fn group_policy_reproduces_shared_top_two_menu() {
        // The only positive gain is sharing the 0.7 provider between the two
        // high-quality patients; the group policy must offer it to both and
        // leave the 0.1 patient out.
        let inst = uniform_inst(vec![vec![0.7], vec![0.7], vec![0.1]], 0.75);
        let x = policy_group(&inst);
        assert_eq!(
            x.rows(),
            &[vec![true], vec![true], vec![false]],
            "group menus were {:?}",
            x.rows()
        );
    }

    #[test]
    fn single_provider_rule_drops_the_weak_patient() {
        let inst = uniform_inst(vec![vec![0.7], vec![0.7], vec![0.1]], 0.75);
        let x = single_provider_optimal(&inst);
        assert_eq!(x.rows(), &[vec![true], vec![true], vec![false]]);
    }

    #[test]
    fn single_provider_rule_prefers_smallest_s_on_ties() {
        // Certain acceptance and identical (dyadic, so exactly summable)
        // qualities: every set size scores the same value, and the
        // tie-break must keep the smallest set.
        let inst = uniform_inst(vec![vec![0.5], vec![0.5], vec![0.5]], 1.0);
        let x = single_provider_optimal(&inst);
        assert_eq!(x.rows(), &[vec![true], vec![false], vec![false]]);
    }

    #[test]
    fn dynamic_matcher_reassigns_after_losses() {
        // Patient 1's best provider may be taken; the re-solve hands them the
        // runner-up instead of an empty menu.
        let inst = uniform_inst(vec![vec![0.9, 0.5], vec![0.8, 0.6]], 0.5);
        let dyn_pol = policy_dynamic_pairwise(&inst);
        // Fresh state: assignment is 0->0, 1->1.
        assert_eq!(dyn_pol.menu(1, &[false, false], &[1, 1]), vec![false, true]);
        // Patient 0 responded and took provider 1 somehow; patient 1 now gets
        // provider 0.
        assert_eq!(dyn_pol.menu(1, &[true, false], &[1, 0]), vec![true, false]);
    }

    #[test]
    fn effective_p_reduces_to_p_for_parameterized_models() {
        let inst = uniform_inst(vec![vec![0.5]], 0.3);
        assert_eq!(effective_p(&inst), 0.3);
        let inst = inst.with_choice(ChoiceModelSpec::Threshold { p: 0.8, alpha: 0.2 });
        assert_eq!(effective_p(&inst), 0.8);
    }

    #[test]
    fn effective_p_for_logit_averages_singleton_acceptance() {
        let gamma = 0.4_f64;
        let inst = uniform_inst(vec![vec![0.2, 0.6]], 0.5)
            .with_choice(ChoiceModelSpec::Mnl { gamma });
        let want = (0.2_f64.exp() / (0.2_f64.exp() + gamma.exp())
            + 0.6_f64.exp() / (0.6_f64.exp() + gamma.exp()))
            / 2.0;
        assert!((effective_p(&inst) - want).abs() < 1e-12);
    }
}
