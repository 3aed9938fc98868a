//! Response-order structure around the assignment menu.
//!
//! When the response sequence is (partially) known in advance, the assignment
//! menu can be augmented: a patient guaranteed to respond later can safely be
//! offered an earlier patient's provider as a fallback. The envy graph says
//! which patient would take whose provider; scheduling enviers after the
//! patients they envy is what makes the augmentation safe.

use thiserror::Error;

use super::pairwise_assignment;
use crate::matching::PairAssignment;
use crate::model::{Assortment, Instance, ResponseOrder};
use crate::scalar::Scalar;

/// Directed "would rather have theirs" relation between patients.
///
/// An edge `i -> i'` means patient `i` weakly prefers `i'`'s assigned
/// provider to their own (an unassigned `i` envies every assigned `i'`).
/// Construction fails loudly on a cycle — equal-quality ties can create one,
/// and no response order can then put every envied patient first.
#[derive(Debug, Clone)]
pub struct EnvyGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `out[i]`: targets of `i`'s envy. `enviers_of[i]`: patients envying `i`.
    out: Vec<Vec<usize>>,
    enviers_of: Vec<Vec<usize>>,
}

/// The envy relation admits no consistent response order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("envy relation has a cycle among patients {patients:?}; no response order can schedule every envied patient first")]
pub struct EnvyCycleError {
    /// Patients on or feeding the cycle (every node Kahn's algorithm could
    /// not retire), ascending.
    pub patients: Vec<usize>,
}

impl EnvyGraph {
    /// Builds the graph from an explicit edge list, rejecting cycles.
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, EnvyCycleError> {
        let mut out = vec![Vec::new(); n];
        let mut enviers_of = vec![Vec::new(); n];
        for &(i, ip) in &edges {
            assert!(i < n && ip < n && i != ip, "edge ({i}, {ip}) out of range for {n} patients");
            out[i].push(ip);
            enviers_of[ip].push(i);
        }
        let g = EnvyGraph { n, edges, out, enviers_of };
        let order = g.reverse_topological()?;
        debug_assert_eq!(order.len(), n);
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All envy edges `(envier, envied)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Patients ordered so that everyone precedes the patients who envy them
    /// (edges point backward). Ties retire the lowest index first, so the
    /// order is deterministic.
    pub fn reverse_topological(&self) -> Result<Vec<usize>, EnvyCycleError> {
        let mut pending: Vec<usize> = self.out.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..self.n)
            .filter(|&i| pending[i] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &u in &self.enviers_of[v] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.insert(u);
                }
            }
        }
        if order.len() < self.n {
            let patients = (0..self.n).filter(|&i| pending[i] > 0).collect();
            return Err(EnvyCycleError { patients });
        }
        Ok(order)
    }
}

/// Computes the envy graph of an assignment: `i` envies `i'` when both are
/// assigned and `theta[i][v_i] <= theta[i][v_i']`, or when `i` is unassigned
/// and `i'` is not.
pub fn compute_envy_graph<T: Scalar>(
    inst: &Instance<T>,
    assign: &PairAssignment,
) -> Result<EnvyGraph, EnvyCycleError> {
    assert_eq!(assign.n(), inst.n);
    let mut edges = Vec::new();
    for i in 0..inst.n {
        for ip in 0..inst.n {
            if i == ip {
                continue;
            }
            let envies = match (assign.provider_of[i], assign.provider_of[ip]) {
                (Some(vi), Some(vip)) => inst.theta[i][vi] <= inst.theta[i][vip],
                (None, Some(_)) => true,
                _ => false,
            };
            if envies {
                edges.push((i, ip));
            }
        }
    }
    EnvyGraph::from_edges(inst.n, edges)
}

/// A response schedule in contiguous waves.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchPlan {
    /// Waves in response order; every patient appears exactly once.
    pub batches: Vec<Vec<usize>>,
    /// Envy edges whose endpoints share a wave — the edges the schedule
    /// cannot orient.
    pub within_batch_edges: usize,
}

/// Splits the patients into exactly `min(l, n)` nonempty response waves,
/// minimizing the number of envy edges trapped inside a wave.
///
/// The patients are first laid out in the graph's deterministic
/// envied-before-envier order; a dynamic program then picks the best
/// contiguous cuts (ties toward the earliest cut), so two calls always agree.
pub fn topological_batches(graph: &EnvyGraph, l: usize) -> BatchPlan {
    assert!(l >= 1, "need at least one batch");
    let n = graph.n;
    if n == 0 {
        return BatchPlan { batches: Vec::new(), within_batch_edges: 0 };
    }
    let order = graph
        .reverse_topological()
        .expect("constructed graphs are acyclic");
    let mut pos = vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let waves = l.min(n);

    // cost[a][b]: envy edges with both endpoints in positions [a, b).
    let mut cost = vec![vec![0u32; n + 1]; n];
    for a in 0..n {
        let mut cnt = 0u32;
        for b in a + 1..=n {
            let v = order[b - 1];
            for &u in graph.out[v].iter().chain(&graph.enviers_of[v]) {
                if (a..b - 1).contains(&pos[u]) {
                    cnt += 1;
                }
            }
            cost[a][b] = cnt;
        }
    }

    // dp[l][t]: best cost covering the first t positions with l waves.
    let inf = u32::MAX;
    let mut dp = vec![vec![inf; n + 1]; waves + 1];
    let mut cut = vec![vec![0usize; n + 1]; waves + 1];
    for t in 1..=n {
        dp[1][t] = cost[0][t];
    }
    for level in 2..=waves {
        for t in level..=n {
            for s in level - 1..t {
                if dp[level - 1][s] == inf {
                    continue;
                }
                let c = dp[level - 1][s] + cost[s][t];
                if c < dp[level][t] {
                    dp[level][t] = c;
                    cut[level][t] = s;
                }
            }
        }
    }

    let mut bounds = vec![n];
    let mut t = n;
    for level in (2..=waves).rev() {
        t = cut[level][t];
        bounds.push(t);
    }
    bounds.push(0);
    bounds.reverse();
    let batches = bounds
        .windows(2)
        .map(|w| order[w[0]..w[1]].to_vec())
        .collect();
    BatchPlan { batches, within_batch_edges: dp[waves][n] as usize }
}

/// What the planner knows about the response sequence.
#[derive(Debug, Clone, Copy)]
pub enum KnownSchedule<'a> {
    /// The exact order patients will respond in.
    Order(&'a ResponseOrder),
    /// Waves that respond in listed order; within a wave the order is
    /// unknown.
    Batches(&'a [Vec<usize>]),
}

/// Assignment menu augmented with safe fallbacks for a known (partial)
/// response order.
///
/// On top of each patient's assigned provider, patient `i'` is also offered
/// `i`'s provider whenever `i` is guaranteed to respond strictly earlier and
/// `i'` would take it (`i'` is unassigned, or values it at least as much as
/// their own). If the earlier patient accepts, the fallback is gone by the
/// time `i'` responds; if not, it is a free upgrade.
pub fn policy_order_aware<T: Scalar>(inst: &Instance<T>, schedule: KnownSchedule<'_>) -> Assortment {
    let mut rank = vec![usize::MAX; inst.n];
    match schedule {
        KnownSchedule::Order(order) => {
            assert_eq!(order.len(), inst.n);
            for (k, &i) in order.0.iter().enumerate() {
                rank[i] = k;
            }
        }
        KnownSchedule::Batches(batches) => {
            for (k, batch) in batches.iter().enumerate() {
                for &i in batch {
                    rank[i] = k;
                }
            }
        }
    }
    assert!(rank.iter().all(|&r| r != usize::MAX), "schedule must cover every patient");

    let assign = pairwise_assignment(inst);
    let mut x = assign.to_assortment(inst.m);
    for i in 0..inst.n {
        let Some(vi) = assign.provider_of[i] else { continue };
        for ip in 0..inst.n {
            if ip == i || rank[i] >= rank[ip] {
                continue;
            }
            let takes_it = match assign.provider_of[ip] {
                None => true,
                Some(vip) => inst.theta[ip][vi] >= inst.theta[ip][vip],
            };
            if takes_it {
                x.set(ip, vi, true);
            }
        }
    }
    x
}
