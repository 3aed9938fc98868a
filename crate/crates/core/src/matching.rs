//! Exact bipartite matching and the group-selection subproblem.
//!
//! [`max_weight_matching`] assigns patients to providers (respecting provider
//! capacities) to maximize total weight; among weight-optimal solutions it
//! returns one of maximum cardinality. It is solved as a min-cost flow with
//! successive shortest paths under node potentials, which is exact because the
//! constraint matrix is totally unimodular. The cardinality preference is
//! implemented by adding a bonus `eps = (min positive weight) / (2 (n + 1))`
//! to every edge — small enough that `n` bonuses cannot outweigh a genuine
//! weight difference between round-valued solutions, and large enough that
//! zero-weight edges still get matched.
//!
//! [`solve_group_subproblem`] maximizes a pairwise-gain objective
//! `sum_{a<b in S} alpha[a][b]` over subsets `S` of the remaining patients:
//! exactly (subset dynamic program) up to [`EXACT_GROUP_LIMIT`] candidates,
//! and by depth-first branch-and-bound with a positive-part bound plus a
//! deterministic local-search fallback above it. The empty set is always
//! feasible, so the returned value is never negative.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::Assortment;
use crate::scalar::{as_f64, Scalar};

/// Largest candidate count solved by exhaustive subset enumeration.
pub const EXACT_GROUP_LIMIT: usize = 20;

/// Branch-and-bound node budget before falling back to local search.
const GROUP_NODE_BUDGET: usize = 5_000_000;

/// Result of a capacity-respecting assignment of patients to providers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAssignment {
    /// `provider_of[i]` is patient `i`'s assigned provider, if any.
    pub provider_of: Vec<Option<usize>>,
}

impl PairAssignment {
    pub fn n(&self) -> usize {
        self.provider_of.len()
    }

    /// Number of assigned patients.
    pub fn cardinality(&self) -> usize {
        self.provider_of.iter().flatten().count()
    }

    /// Total weight of the assignment under the given weight matrix.
    pub fn total_weight<T: Scalar>(&self, weights: &[Vec<T>]) -> T {
        self.provider_of
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|j| weights[i][j]))
            .sum()
    }

    /// Patients assigned to each provider.
    pub fn provider_load(&self, m: usize) -> Vec<u32> {
        let mut load = vec![0u32; m];
        for j in self.provider_of.iter().flatten() {
            load[*j] += 1;
        }
        load
    }

    /// Offer matrix containing exactly the assigned pairs.
    pub fn to_assortment(&self, m: usize) -> Assortment {
        let mut x = Assortment::empty(self.provider_of.len(), m);
        for (i, v) in self.provider_of.iter().enumerate() {
            if let Some(j) = *v {
                x.set(i, j, true);
            }
        }
        x
    }
}

/// `f64` with a total order; the solver never produces NaN.
#[derive(PartialEq, PartialOrd)]
struct Ord64(f64);

impl Eq for Ord64 {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for Ord64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).expect("costs are finite")
    }
}

struct FlowEdge {
    to: usize,
    cap: u32,
    cost: f64,
    rev: usize,
}

struct FlowGraph {
    adj: Vec<Vec<FlowEdge>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        FlowGraph {
            adj: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u32, cost: f64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(FlowEdge { to, cap, cost, rev: rev_from });
        self.adj[to].push(FlowEdge { to: from, cap: 0, cost: -cost, rev: rev_to });
    }
}

/// Maximum-weight assignment of patients (rows) to providers (columns), with
/// at most `capacities[j]` patients per provider and at most one provider per
/// patient.
///
/// Weights must be finite and non-negative. The result maximizes total
/// weight; among weight-maximal assignments, cardinality is maximized (see
/// the module docs for the tie-break mechanism), so with all-zero weights
/// this degenerates to a maximum-cardinality assignment.
pub fn max_weight_matching<T: Scalar>(weights: &[Vec<T>], capacities: &[u32]) -> PairAssignment {
    let n = weights.len();
    let m = capacities.len();
    if n == 0 || m == 0 {
        return PairAssignment {
            provider_of: vec![None; n],
        };
    }
    debug_assert!(weights.iter().all(|r| r.len() == m));

    let mut min_pos = f64::INFINITY;
    for row in weights {
        for &w in row {
            let w = as_f64(w);
            if w > 0.0 && w < min_pos {
                min_pos = w;
            }
        }
    }
    let eps = if min_pos.is_finite() {
        min_pos / (2.0 * (n as f64 + 1.0))
    } else {
        1.0
    };

    // Node layout: source, patients, providers, sink.
    let source = 0;
    let sink = n + m + 1;
    let mut g = FlowGraph::new(n + m + 2);
    for i in 0..n {
        g.add_edge(source, 1 + i, 1, 0.0);
    }
    for (i, row) in weights.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            g.add_edge(1 + i, 1 + n + j, 1, -(as_f64(w) + eps));
        }
    }
    for (j, &c) in capacities.iter().enumerate() {
        g.add_edge(1 + n + j, sink, c, 0.0);
    }

    // Initial potentials by one relaxation sweep over the layered DAG.
    let nodes = n + m + 2;
    let mut pot = vec![0.0f64; nodes];
    for j in 0..m {
        let best = weights
            .iter()
            .map(|row| -(as_f64(row[j]) + eps))
            .fold(f64::INFINITY, f64::min);
        pot[1 + n + j] = best;
    }
    pot[sink] = (0..m).map(|j| pot[1 + n + j]).fold(f64::INFINITY, f64::min);

    // Successive shortest augmenting paths. Every augmentation strictly
    // improves the bonus-adjusted objective, so we run to maximum flow.
    let mut dist = vec![0.0f64; nodes];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
    loop {
        for d in dist.iter_mut() {
            *d = f64::INFINITY;
        }
        for p in prev.iter_mut() {
            *p = None;
        }
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((Ord64(0.0), source)));
        while let Some(Reverse((Ord64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (idx, e) in g.adj[u].iter().enumerate() {
                if e.cap == 0 {
                    continue;
                }
                let rc = d + e.cost + pot[u] - pot[e.to];
                if rc < dist[e.to] - 1e-15 {
                    dist[e.to] = rc;
                    prev[e.to] = Some((u, idx));
                    heap.push(Reverse((Ord64(rc), e.to)));
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        for (v, d) in pot.iter_mut().zip(&dist) {
            if d.is_finite() {
                *v += d;
            }
        }
        // Walk back along the path, pushing one unit.
        let mut v = sink;
        while let Some((u, idx)) = prev[v] {
            let rev = g.adj[u][idx].rev;
            g.adj[u][idx].cap -= 1;
            g.adj[v][rev].cap += 1;
            v = u;
        }
    }

    // Patient -> provider arcs whose capacity was consumed carry flow.
    let mut provider_of = vec![None; n];
    for (i, assigned) in provider_of.iter_mut().enumerate() {
        for e in &g.adj[1 + i] {
            if e.cap == 0 && (1 + n..1 + n + m).contains(&e.to) {
                *assigned = Some(e.to - 1 - n);
                break;
            }
        }
    }
    PairAssignment { provider_of }
}

/// A chosen patient group and its pairwise-gain objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSelection<T> {
    /// Selected patient indices, ascending. Empty when no group has positive
    /// value.
    pub members: Vec<usize>,
    /// `sum_{a<b in members} alpha[a][b]`; never negative.
    pub value: T,
}

/// Maximizes `sum_{a<b in S} alpha[a][b]` over subsets `S` of `remaining`.
///
/// `alpha` is a full pairwise-gain matrix indexed by patient; it must be
/// symmetric with a zero diagonal. Up to [`EXACT_GROUP_LIMIT`] candidates the
/// optimum is exact (subset enumeration); above it, branch-and-bound prunes
/// with the positive-part bound and, if its node budget runs out, the best
/// node found is polished by deterministic single-move local search. In every
/// case the result is at least as good as the best single pair and at least
/// zero.
pub fn solve_group_subproblem<T: Scalar>(alpha: &[Vec<T>], remaining: &[usize]) -> GroupSelection<T> {
    let k = remaining.len();
    if k < 2 {
        return GroupSelection {
            members: Vec::new(),
            value: T::zero(),
        };
    }
    let pair = |a: usize, b: usize| alpha[remaining[a]][remaining[b]];

    if k <= EXACT_GROUP_LIMIT {
        // f[mask] = objective of the candidate subset `mask`, built by peeling
        // the lowest set bit.
        let mut f = vec![T::zero(); 1usize << k];
        let mut best_mask = 0usize;
        let mut best_val = T::zero();
        for mask in 1..(1usize << k) {
            let b = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            let mut v = f[rest];
            let mut r = rest;
            while r != 0 {
                let i = r.trailing_zeros() as usize;
                v += pair(b, i);
                r &= r - 1;
            }
            f[mask] = v;
            if v > best_val {
                best_val = v;
                best_mask = mask;
            }
        }
        let members = (0..k)
            .filter(|&i| best_mask >> i & 1 == 1)
            .map(|i| remaining[i])
            .collect();
        return GroupSelection {
            members,
            value: best_val,
        };
    }

    branch_and_bound(alpha, remaining)
}

fn branch_and_bound<T: Scalar>(alpha: &[Vec<T>], remaining: &[usize]) -> GroupSelection<T> {
    let k = remaining.len();
    // Candidate order: heaviest positive interaction mass first. A fixed sort
    // keeps the search (and therefore the result) deterministic.
    let mut order: Vec<usize> = (0..k).collect();
    let pos_mass: Vec<f64> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| as_f64(alpha[remaining[a]][remaining[b]]).max(0.0))
                .sum()
        })
        .collect();
    order.sort_by(|&a, &b| {
        pos_mass[b]
            .partial_cmp(&pos_mass[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let cand: Vec<usize> = order.iter().map(|&i| remaining[i]).collect();
    let a = |x: usize, y: usize| as_f64(alpha[cand[x]][cand[y]]);

    // suffix_pairs[idx] = sum of positive gains among candidates idx.. .
    let mut suffix_pairs = vec![0.0f64; k + 1];
    for idx in (0..k).rev() {
        let row: f64 = (idx + 1..k).map(|b| a(idx, b).max(0.0)).sum();
        suffix_pairs[idx] = suffix_pairs[idx + 1] + row;
    }

    // Seed with the best single pair so a budget exhaustion can never return
    // something worse than it.
    let mut best_set: Vec<usize> = Vec::new();
    let mut best_val = 0.0f64;
    for x in 0..k {
        for y in x + 1..k {
            if a(x, y) > best_val {
                best_val = a(x, y);
                best_set = vec![x, y];
            }
        }
    }

    struct Search<'a, F: Fn(usize, usize) -> f64> {
        k: usize,
        a: &'a F,
        suffix_pairs: &'a [f64],
        chosen: Vec<usize>,
        // posgain[u] = sum of positive gains from chosen candidates to u.
        posgain: Vec<f64>,
        best_val: f64,
        best_set: Vec<usize>,
        nodes_left: usize,
    }

    impl<F: Fn(usize, usize) -> f64> Search<'_, F> {
        fn dfs(&mut self, idx: usize, value: f64, suffix_posgain: f64) {
            if self.nodes_left == 0 {
                return;
            }
            self.nodes_left -= 1;
            if value > self.best_val + 1e-15 {
                self.best_val = value;
                self.best_set = self.chosen.clone();
            }
            if idx == self.k {
                return;
            }
            let bound = value + suffix_posgain + self.suffix_pairs[idx];
            if bound <= self.best_val + 1e-15 {
                return;
            }
            // Include idx.
            let gain: f64 = self.chosen.iter().map(|&c| (self.a)(c, idx)).sum();
            let mut added = 0.0;
            for u in idx + 1..self.k {
                let g = (self.a)(idx, u).max(0.0);
                self.posgain[u] += g;
                added += g;
            }
            self.chosen.push(idx);
            // posgain[idx] leaves the undecided suffix; idx's own gains enter.
            let next_suffix = suffix_posgain - self.posgain[idx] + added;
            self.dfs(idx + 1, value + gain, next_suffix);
            self.chosen.pop();
            for u in idx + 1..self.k {
                self.posgain[u] -= (self.a)(idx, u).max(0.0);
            }
            // Exclude idx.
            self.dfs(idx + 1, value, suffix_posgain - self.posgain[idx]);
        }
    }

    let mut search = Search {
        k,
        a: &a,
        suffix_pairs: &suffix_pairs,
        chosen: Vec::new(),
        posgain: vec![0.0; k],
        best_val,
        best_set,
        nodes_left: GROUP_NODE_BUDGET,
    };
    search.dfs(0, 0.0, 0.0);
    let exhausted = search.nodes_left == 0;
    let mut members = search.best_set;
    let mut value = search.best_val;

    if exhausted {
        // Deterministic single-move polish: best add or drop until fixpoint.
        let mut in_set = vec![false; k];
        for &c in &members {
            in_set[c] = true;
        }
        for _ in 0..10 * k {
            let mut best_move: Option<(usize, f64)> = None;
            for u in 0..k {
                let delta: f64 = (0..k)
                    .filter(|&v| v != u && in_set[v])
                    .map(|v| a(u, v))
                    .sum();
                let delta = if in_set[u] { -delta } else { delta };
                if delta > 1e-12 && best_move.is_none_or(|(_, d)| delta > d) {
                    best_move = Some((u, delta));
                }
            }
            match best_move {
                Some((u, d)) => {
                    in_set[u] = !in_set[u];
                    value += d;
                }
                None => break,
            }
        }
        members = (0..k).filter(|&u| in_set[u]).collect();
    }

    let mut members: Vec<usize> = members.into_iter().map(|c| cand[c]).collect();
    members.sort_unstable();
    if value <= 0.0 {
        members.clear();
        value = 0.0;
    }
    GroupSelection {
        members,
        value: T::from_f64(value).unwrap(),
    }
}
