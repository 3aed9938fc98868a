//! Continuous-relaxation menu search by projected gradient ascent.
//!
//! The planner scores a fractional offer matrix `x` with a closed-form
//! estimate of total matched quality: each column gets an availability factor
//! `d_j(x)` (the chance the provider still has a slot when an average-position
//! patient responds), each cell an effective offer weight `h_ij = x_ij d_j`,
//! and each row a preference-ordered acceptance cascade. The estimate and its
//! exact gradient are cheap, so the policy runs multi-restart projected
//! ascent with a binarization penalty annealed in, then rounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{effective_p, pairwise_assignment};
use crate::model::{Assortment, Instance};
use crate::scalar::{real, Scalar};

/// Ascent hyperparameters. The defaults are the ones every benchmark uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GdConfig<T> {
    /// Step size for each ascent iteration.
    pub learning_rate: T,
    /// Ascent iterations per restart.
    pub iterations: usize,
    /// Number of restarts; the first starts at the relaxed assignment menu,
    /// the rest at uniform-random interior points.
    pub restarts: usize,
    /// Binarization penalty weight at the first iteration…
    pub penalty_start: T,
    /// …linearly annealed to this weight at the last iteration.
    pub penalty_end: T,
    /// Iterates are clamped to `[margin, 1 - margin]`.
    pub projection_margin: T,
    /// Cells at or above this value round to an offer.
    pub round_threshold: T,
}

impl<T: Scalar> Default for GdConfig<T> {
    fn default() -> Self {
        GdConfig {
            learning_rate: real(0.05),
            iterations: 2000,
            restarts: 5,
            penalty_start: T::zero(),
            penalty_end: T::one(),
            projection_margin: real(1e-4),
            round_threshold: real(0.5),
        }
    }
}

/// Per-column availability factors and their response to offer mass.
struct Columns<T> {
    /// `d_j`: discount applied to every offer of provider `j`.
    d: Vec<T>,
    /// `∂d_j/∂n_j` via the contention rate — zero wherever the rate clamps.
    slope: Vec<T>,
}

struct Evaluator<'a, T> {
    inst: &'a Instance<T>,
    p: T,
    /// Provider indices of each row sorted by descending quality
    /// (ties toward lower index): the order a patient works down their menu.
    prefs: Vec<Vec<usize>>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(inst: &'a Instance<T>) -> Self {
        let prefs = inst
            .theta
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..inst.m).collect();
                idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
                idx
            })
            .collect();
        Evaluator { inst, p: effective_p(inst), prefs }
    }

    /// Availability factor of every column at offer matrix `x`.
    ///
    /// A provider with offer mass `n_j` sees earlier responders accept with
    /// rate `p'_j = clamp(p (n_j - 1) / (N - 1), 0, p)`. With one slot the
    /// factor averages the survival probabilities `(1 - p'_j)^(t-1)` over the
    /// provider's position `t` in the response sequence. With `c` slots the
    /// survival term is kept while fewer than `c` earlier acceptances are
    /// expected and otherwise replaced by a normal-tail estimate of the
    /// overflow probability (which the clamp floors at zero); only the
    /// survival terms contribute to the slope.
    fn column_availability(&self, x: &[Vec<T>]) -> Columns<T> {
        let n = self.inst.n;
        let nf = real::<T>(n as f64);
        let mut cols = Columns { d: Vec::with_capacity(self.inst.m), slope: Vec::with_capacity(self.inst.m) };
        for j in 0..self.inst.m {
            let mass: T = (0..n).map(|i| x[i][j]).sum();
            let (rate, gamma) = if n == 1 || mass < T::one() {
                (T::zero(), T::zero())
            } else {
                let g = self.p / real::<T>((n - 1) as f64);
                ((g * (mass - T::one())).min(self.p), g)
            };
            let q = T::one() - rate;
            let cap = self.inst.capacities[j];

            let mut d = T::zero();
            let mut dd = T::zero();
            // q^(t-1) and q^(t-2), updated as t advances.
            let mut surv = T::one();
            let mut surv_prev = T::one();
            for t in 1..n + 1 {
                if t == 1 {
                    d += T::one();
                } else {
                    let expected_taken = rate * real::<T>((t - 1) as f64);
                    if cap == 1 || real::<T>((cap - 1) as f64) > expected_taken {
                        d += surv;
                        dd -= real::<T>((t - 1) as f64) * surv_prev;
                    } else if rate < T::one() - real::<T>(1e-12) {
                        let var = expected_taken * q;
                        let z = (real::<T>((cap - 1) as f64) - expected_taken) / var.sqrt();
                        let phi = (-z * z / real::<T>(2.0)).exp()
                            / real::<T>((2.0 * std::f64::consts::PI).sqrt());
                        let tail = z * phi / (z * z + T::one());
                        d += tail.max(T::zero()).min(T::one());
                    }
                    // else: contention is saturated and the slot is gone.
                }
                surv_prev = surv;
                surv *= q;
            }
            cols.d.push(d / nf);
            cols.slope.push(dd / nf * gamma);
        }
        cols
    }

    /// Planned quality of row `i`: the patient walks their preference order
    /// and takes entry `j` with probability `h_ij` times the survival of all
    /// better entries.
    fn row_value(&self, i: usize, x: &[Vec<T>], d: &[T]) -> T {
        let row = &self.inst.theta[i];
        let mut alive = T::one();
        let mut value = T::zero();
        for &j in &self.prefs[i] {
            let h = x[i][j] * d[j];
            value += row[j] * h * alive;
            alive *= T::one() - h;
        }
        value
    }

    fn objective(&self, x: &[Vec<T>]) -> T {
        let cols = self.column_availability(x);
        let total: T = (0..self.inst.n).map(|i| self.row_value(i, x, &cols.d)).sum();
        self.p * total
    }

    /// Value and gradient of the penalized objective
    /// `F(x) - lambda * sum x (1 - x)`.
    fn objective_and_gradient(&self, x: &[Vec<T>], lambda: T) -> (T, Vec<Vec<T>>) {
        let n = self.inst.n;
        let m = self.inst.m;
        let cols = self.column_availability(x);

        // dF/dh for every cell, via a forward survival pass and a backward
        // pass over what the patient would still collect further down the
        // preference order.
        let mut dh = vec![vec![T::zero(); m]; n];
        let mut total = T::zero();
        for i in 0..n {
            let row = &self.inst.theta[i];
            let order = &self.prefs[i];
            let mut alive = vec![T::one(); m];
            let mut running = T::one();
            for (k, &j) in order.iter().enumerate() {
                alive[k] = running;
                let h = x[i][j] * cols.d[j];
                total += row[j] * h * running;
                running *= T::one() - h;
            }
            // remainder[k] = expected pick-up strictly after position k, per
            // unit of survival at position k+1.
            let mut tail = T::zero();
            for k in (0..m).rev() {
                let j = order[k];
                dh[i][j] = self.p * alive[k] * (row[j] - tail);
                let h = x[i][j] * cols.d[j];
                tail = row[j] * h + (T::one() - h) * tail;
            }
        }

        let mut grad = vec![vec![T::zero(); m]; n];
        for j in 0..m {
            // Offer mass moves every cell of the column through d_j.
            let coupled: T = (0..n).map(|i| dh[i][j] * x[i][j]).sum();
            let shared = coupled * cols.slope[j];
            for i in 0..n {
                grad[i][j] = dh[i][j] * cols.d[j] + shared
                    - lambda * (T::one() - real::<T>(2.0) * x[i][j]);
            }
        }
        (self.p * total, grad)
    }
}

/// Planned total matched quality of a (possibly fractional) offer matrix —
/// the quantity the ascent maximizes, summed over patients, not averaged.
pub fn gd_objective<T: Scalar>(inst: &Instance<T>, x: &[Vec<T>]) -> T {
    assert_eq!(x.len(), inst.n);
    Evaluator::new(inst).objective(x)
}

/// Exact gradient of the penalized planning objective at `x` with
/// binarization weight `penalty_weight`.
pub fn gd_gradient<T: Scalar>(inst: &Instance<T>, x: &[Vec<T>], penalty_weight: T) -> Vec<Vec<T>> {
    assert_eq!(x.len(), inst.n);
    Evaluator::new(inst).objective_and_gradient(x, penalty_weight).1
}

/// Multi-restart projected gradient ascent on the planning objective,
/// rounded to a concrete offer matrix.
///
/// Restart 0 starts from the maximum-weight assignment menu pushed to the
/// interior; later restarts start uniform in `[0.25, 0.75]` (drawn row-major
/// from `rng`). Each restart runs a fixed iteration budget with the
/// binarization penalty annealed linearly, and the best rounded matrix under
/// the unpenalized objective wins, earliest restart on ties.
pub fn policy_gradient_descent<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance<T>,
    cfg: &GdConfig<T>,
    rng: &mut R,
) -> Assortment {
    assert!(cfg.restarts >= 1, "need at least one restart");
    assert!(cfg.iterations >= 1, "need at least one iteration");
    assert!(cfg.learning_rate > T::zero());
    assert!(
        cfg.projection_margin > T::zero() && cfg.projection_margin < real(0.5),
        "projection margin must keep the box nonempty"
    );

    let ev = Evaluator::new(inst);
    let lo = cfg.projection_margin;
    let hi = T::one() - cfg.projection_margin;

    let mut best: Option<(T, Assortment)> = None;
    for restart in 0..cfg.restarts {
        let mut x: Vec<Vec<T>> = if restart == 0 {
            pairwise_assignment(inst)
                .to_assortment(inst.m)
                .to_continuous::<T>()
                .into_iter()
                .map(|row| row.into_iter().map(|v| v.max(lo).min(hi)).collect())
                .collect()
        } else {
            (0..inst.n)
                .map(|_| {
                    (0..inst.m)
                        .map(|_| real::<T>(0.25 + 0.5 * rng.gen::<f64>()))
                        .collect()
                })
                .collect()
        };

        for it in 0..cfg.iterations {
            let frac = if cfg.iterations > 1 {
                real::<T>(it as f64 / (cfg.iterations - 1) as f64)
            } else {
                T::one()
            };
            let lambda = cfg.penalty_start + (cfg.penalty_end - cfg.penalty_start) * frac;
            let (_, grad) = ev.objective_and_gradient(&x, lambda);
            for i in 0..inst.n {
                for j in 0..inst.m {
                    x[i][j] = (x[i][j] + cfg.learning_rate * grad[i][j]).max(lo).min(hi);
                }
            }
        }

        let rows: Vec<Vec<bool>> = x
            .iter()
            .map(|row| row.iter().map(|&v| v >= cfg.round_threshold).collect())
            .collect();
        let menu = Assortment::from_rows(rows);
        let score = ev.objective(&menu.to_continuous::<T>());
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, menu));
        }
    }
    best.expect("at least one restart ran").1
}
