//! Exact expectation oracle for small instances.
//!
//! [`exact_expected_metrics`] computes the expected match rate and match
//! quality of an offer matrix exactly, averaging over every response order
//! and every choice outcome. The recursion conditions on (set of responded
//! patients, remaining capacities): under a uniformly random order, each
//! not-yet-responded patient is equally likely to act next, so that pair
//! determines the remaining expectation and memoizes the `n!` order tree down
//! to a tractable state space. [`exhaustive_optimal_assortment`] wraps it in a
//! full search over all binary offer matrices.
//!
//! These routines are deliberately independent of the policy and simulation
//! code paths: they share only the per-event selection distribution, so they
//! serve as ground truth for both.

use std::collections::HashMap;

use thiserror::Error;

use crate::choice::selection_probabilities;
use crate::model::{Assortment, Instance};
use crate::scalar::{real, Scalar};

/// Exact expectations of a run: both are per-patient averages in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMetrics<T> {
    /// Expected fraction of patients that match.
    pub match_rate: T,
    /// Expected mean matched quality, counting unmatched patients as zero.
    pub match_quality: T,
}

/// Which metric an exhaustive search should maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    MatchRate,
    MatchQuality,
}

/// Enumeration refuses instances whose exact state space would not stay small.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact expectation supports at most {limit} patients, got {n}")]
    TooManyPatients { n: usize, limit: usize },
    #[error("exact expectation state space is {states} capacity profiles, over the {limit} limit")]
    StateSpaceTooLarge { states: u128, limit: u128 },
    #[error("exhaustive search supports at most {limit} offer-matrix cells, got {cells}")]
    MatrixTooLarge { cells: usize, limit: usize },
}

/// Most patients the exact expectation will enumerate.
pub const MAX_ORACLE_PATIENTS: usize = 8;
/// Most distinct remaining-capacity profiles the memo may hold.
pub const MAX_CAPACITY_STATES: u128 = 1 << 20;
/// Most offer-matrix cells the exhaustive search will enumerate.
pub const MAX_EXHAUSTIVE_CELLS: usize = 16;

struct Solver<'a, T, F> {
    inst: &'a Instance<T>,
    menu: F,
    strides: Vec<u64>,
    memo: HashMap<(u32, u64), (T, T)>,
}

impl<T: Scalar, F> Solver<'_, T, F>
where
    F: FnMut(usize, u32, &[u32]) -> Vec<bool>,
{
    fn pack(&self, caps: &[u32]) -> u64 {
        caps.iter()
            .zip(&self.strides)
            .map(|(&c, &s)| u64::from(c) * s)
            .sum()
    }

    /// Expected (matches, quality) still to come, given who already responded
    /// and what capacity remains.
    fn solve(&mut self, responded: u32, caps: &[u32]) -> (T, T) {
        let n = self.inst.n;
        let free = n - responded.count_ones() as usize;
        if free == 0 {
            return (T::zero(), T::zero());
        }
        let key = (responded, self.pack(caps));
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }

        let mut count = T::zero();
        let mut quality = T::zero();
        for i in 0..n {
            if responded >> i & 1 == 1 {
                continue;
            }
            let offered = (self.menu)(i, responded, caps);
            debug_assert_eq!(offered.len(), self.inst.m);
            let mask: Vec<bool> = offered
                .iter()
                .zip(caps)
                .map(|(&o, &c)| o && c > 0)
                .collect();
            let dist = selection_probabilities(&self.inst.choice, &self.inst.theta[i], &mask);
            let next_responded = responded | 1 << i;
            if dist.abstain > T::zero() {
                let (c, q) = self.solve(next_responded, caps);
                count += dist.abstain * c;
                quality += dist.abstain * q;
            }
            let support: Vec<(usize, T)> = dist.support().collect();
            for (j, pj) in support {
                let mut next_caps = caps.to_vec();
                next_caps[j] -= 1;
                let (c, q) = self.solve(next_responded, &next_caps);
                count += pj * (T::one() + c);
                quality += pj * (self.inst.theta[i][j] + q);
            }
        }
        let inv = T::one() / real::<T>(free as f64);
        let out = (count * inv, quality * inv);
        self.memo.insert(key, out);
        out
    }
}

fn guard_and_strides<T: Scalar>(inst: &Instance<T>) -> Result<(Vec<u32>, Vec<u64>), OracleError> {
    if inst.n > MAX_ORACLE_PATIENTS {
        return Err(OracleError::TooManyPatients {
            n: inst.n,
            limit: MAX_ORACLE_PATIENTS,
        });
    }
    // More residual capacity than patients behaves identically to exactly n,
    // so clamp before sizing the state space.
    let caps: Vec<u32> = inst
        .capacities
        .iter()
        .map(|&c| c.min(inst.n as u32))
        .collect();
    let mut states: u128 = 1;
    let mut strides = Vec::with_capacity(inst.m);
    let mut stride: u64 = 1;
    for &c in &caps {
        strides.push(stride);
        states *= u128::from(c) + 1;
        if states > MAX_CAPACITY_STATES {
            return Err(OracleError::StateSpaceTooLarge {
                states,
                limit: MAX_CAPACITY_STATES,
            });
        }
        stride = stride.checked_mul(u64::from(c) + 1).expect("state space fits u64");
    }
    Ok((caps, strides))
}

/// Exact expected metrics of a fixed offer matrix under a uniformly random
/// response order.
pub fn exact_expected_metrics<T: Scalar>(
    inst: &Instance<T>,
    x: &Assortment,
) -> Result<ExactMetrics<T>, OracleError> {
    assert_eq!(x.n(), inst.n, "offer matrix patient count must match the instance");
    assert_eq!(x.m(), inst.m, "offer matrix provider count must match the instance");
    exact_expected_metrics_with(inst, |i, _responded, _caps| x.row(i).to_vec())
}

/// Exact expected metrics when each patient's menu may depend on the run
/// state at their response time.
///
/// `menu(i, responded, caps)` returns the offers shown to patient `i` given
/// the bitmask of patients who already responded and the remaining
/// capacities. The menu must be a pure function of those arguments — the
/// memoization relies on it. Offers to exhausted providers are ignored.
pub fn exact_expected_metrics_with<T: Scalar, F>(
    inst: &Instance<T>,
    menu: F,
) -> Result<ExactMetrics<T>, OracleError>
where
    F: FnMut(usize, u32, &[u32]) -> Vec<bool>,
{
    let (caps, strides) = guard_and_strides(inst)?;
    let mut solver = Solver {
        inst,
        menu,
        strides,
        memo: HashMap::new(),
    };
    let (count, quality) = solver.solve(0, &caps);
    let inv_n = T::one() / real::<T>(inst.n as f64);
    Ok(ExactMetrics {
        match_rate: count * inv_n,
        match_quality: quality * inv_n,
    })
}

/// Searches every binary offer matrix and returns one maximizing the exact
/// expected objective, together with that optimum.
///
/// Matrices are enumerated in lexicographic row-major order and replaced only
/// on strict improvement, so ties resolve to the lexicographically smallest
/// maximizer. Limited to [`MAX_EXHAUSTIVE_CELLS`] cells (and transitively to
/// the exact-expectation guards).
pub fn exhaustive_optimal_assortment<T: Scalar>(
    inst: &Instance<T>,
    objective: Objective,
) -> Result<(Assortment, T), OracleError> {
    let cells = inst.n * inst.m;
    if cells > MAX_EXHAUSTIVE_CELLS {
        return Err(OracleError::MatrixTooLarge {
            cells,
            limit: MAX_EXHAUSTIVE_CELLS,
        });
    }
    let mut best: Option<(Assortment, T)> = None;
    for code in 0u64..(1u64 << cells) {
        let mut x = Assortment::empty(inst.n, inst.m);
        for i in 0..inst.n {
            for j in 0..inst.m {
                // Highest bit first so ascending codes enumerate matrices in
                // lexicographic row-major order.
                let bit = cells - 1 - (i * inst.m + j);
                x.set(i, j, code >> bit & 1 == 1);
            }
        }
        let metrics = exact_expected_metrics(inst, &x)?;
        let value = match objective {
            Objective::MatchRate => metrics.match_rate,
            Objective::MatchQuality => metrics.match_quality,
        };
        if best.as_ref().is_none_or(|&(_, bv)| value > bv) {
            best = Some((x, value));
        }
    }
    Ok(best.expect("at least the empty matrix is enumerated"))
}
