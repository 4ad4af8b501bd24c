// Copyright 2026 The omega-search Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Resumable best-first search over layer 0.
//!
//! One step expands the closest unexpanded candidate and scores every
//! neighbor not seen before. The search set is unbounded: it holds every
//! scored id, so nothing found is ever evicted.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use super::GraphIndex;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trajectory::{extract_features, FeatureVector, Trajectory};
use crate::vectorstore::Neighbor;

pub const DEFAULT_WINDOW: usize = 100;

/// Per-query search progress. Owned by one query; never shared.
#[derive(Debug, Clone)]
pub struct SearchState<T> {
    frontier: BinaryHeap<Reverse<Neighbor<T>>>,
    search_set: BTreeSet<Neighbor<T>>,
    visited: Vec<u64>,
    masked: HashSet<u32>,
    trajectory: Trajectory,
    steps_taken: usize,
    hops: usize,
    cmps: usize,
    dist_start: T,
    exhausted: bool,
}

impl<T: Scalar> SearchState<T> {
    fn new(n: usize, window: usize) -> Self {
        Self {
            frontier: BinaryHeap::new(),
            search_set: BTreeSet::new(),
            visited: vec![0; n.div_ceil(64)],
            masked: HashSet::new(),
            trajectory: Trajectory::new(window),
            steps_taken: 0,
            hops: 0,
            cmps: 0,
            dist_start: T::zero(),
            exhausted: false,
        }
    }

    #[inline]
    fn mark(&mut self, id: u32) -> bool {
        let (w, b) = (id as usize / 64, id % 64);
        let fresh = self.visited[w] & (1 << b) == 0;
        self.visited[w] |= 1 << b;
        fresh
    }

    #[inline]
    fn record(&mut self, d: T) {
        self.cmps += 1;
        self.trajectory.push(d.as_f64());
    }

    /// Whether `id` has been scored on layer 0 (equivalently, is in the
    /// search set).
    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.visited
            .get(id as usize / 64)
            .is_some_and(|w| w & (1 << (id % 64)) != 0)
    }

    pub fn visited_count(&self) -> usize {
        self.search_set.len()
    }

    pub fn search_set_len(&self) -> usize {
        self.search_set.len()
    }

    /// Search set in ascending (distance, id) order.
    pub fn ranked(&self) -> impl Iterator<Item = &Neighbor<T>> + '_ {
        self.search_set.iter()
    }

    pub fn best_unmasked(&self, masked: &HashSet<u32>) -> Option<Neighbor<T>> {
        self.search_set.iter().find(|n| !masked.contains(&n.id)).copied()
    }

    /// The `k` best entries not in `masked`, ascending.
    pub fn current_topk_neighbors(&self, k: usize, masked: &HashSet<u32>) -> Vec<Neighbor<T>> {
        self.search_set
            .iter()
            .filter(|n| !masked.contains(&n.id))
            .take(k)
            .copied()
            .collect()
    }

    pub fn current_topk(&self, k: usize, masked: &HashSet<u32>) -> Vec<u32> {
        self.current_topk_neighbors(k, masked)
            .into_iter()
            .map(|n| n.id)
            .collect()
    }

    pub fn masked(&self) -> &HashSet<u32> {
        &self.masked
    }

    pub(crate) fn masked_mut(&mut self) -> &mut HashSet<u32> {
        &mut self.masked
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn cmps(&self) -> usize {
        self.cmps
    }

    pub fn dist_start(&self) -> T {
        self.dist_start
    }

    /// True once a step found nothing left to expand, or the frontier is
    /// already empty.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted || self.frontier.is_empty()
    }

    /// Set only by a step call that found the frontier empty.
    pub fn exhausted_flag(&self) -> bool {
        self.exhausted
    }

    /// Features with this state's own mask set.
    pub fn features(&self, w: usize) -> Result<FeatureVector> {
        extract_features(&self.trajectory, self, &self.masked, w)
    }
}

/// Result of a bounded classic search.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOutcome {
    pub ids: Vec<u32>,
    pub steps: usize,
    pub cmps: usize,
}

impl<T: Scalar> GraphIndex<T> {
    /// Greedy descent through the upper layers, counting each evaluation
    /// and each move. Returns the layer-0 entry.
    fn descend(&self, query: &[T], mut on_eval: impl FnMut(T), hops: &mut usize) -> Neighbor<T> {
        let ds = self.dataset();
        let d0 = ds.eval(query, self.entry_point() as usize);
        on_eval(d0);
        let mut best = Neighbor::new(self.entry_point(), d0);
        for layer in (1..=self.max_level()).rev() {
            loop {
                let mut moved = false;
                for &nb in self.neighbors(best.id, layer) {
                    let d = ds.eval(query, nb as usize);
                    on_eval(d);
                    let cand = Neighbor::new(nb, d);
                    if cand < best {
                        best = cand;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
                *hops += 1;
            }
        }
        best
    }

    pub fn init_search(&self, query: &[T]) -> Result<SearchState<T>> {
        self.init_search_with_window(query, DEFAULT_WINDOW)
    }

    /// Seeds a state with the layer-0 entry found by upper-layer descent.
    /// `window` sizes the incremental trajectory statistics.
    pub fn init_search_with_window(&self, query: &[T], window: usize) -> Result<SearchState<T>> {
        self.dataset().check_query(query)?;
        if window == 0 {
            return Err(Error::InvalidParameter("window size must be >= 1".into()));
        }
        let mut st = SearchState::new(self.len(), window);
        let mut hops = 0;
        let mut evals = Vec::new();
        let entry = self.descend(query, |d| evals.push(d), &mut hops);
        for d in evals {
            st.record(d);
        }
        st.hops = hops;
        st.dist_start = entry.dist;
        st.mark(entry.id);
        st.frontier.push(Reverse(entry));
        st.search_set.insert(entry);
        Ok(st)
    }

    /// Expands the closest frontier candidate. No-op (and flags the state)
    /// when nothing is left to expand.
    pub fn search_one_step(&self, query: &[T], state: &mut SearchState<T>) {
        let Some(Reverse(node)) = state.frontier.pop() else {
            state.exhausted = true;
            return;
        };
        let ds = self.dataset();
        for &nb in self.neighbors(node.id, 0) {
            if !state.mark(nb) {
                continue;
            }
            let d = ds.eval(query, nb as usize);
            state.record(d);
            let cand = Neighbor::new(nb, d);
            state.frontier.push(Reverse(cand));
            state.search_set.insert(cand);
        }
        state.steps_taken += 1;
        state.hops += 1;
    }

    /// Up to `steps` expansions; stops early on exhaustion. Returns the
    /// number actually taken.
    pub fn search_multiple_steps(&self, query: &[T], state: &mut SearchState<T>, steps: usize) -> usize {
        let start = state.steps_taken;
        for _ in 0..steps {
            if state.frontier.is_empty() {
                state.exhausted = true;
                break;
            }
            self.search_one_step(query, state);
        }
        state.steps_taken - start
    }

    /// Classic HNSW search with result width `ef`.
    pub fn fixed_search(&self, query: &[T], k: usize, ef: usize) -> Result<FixedOutcome> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if ef < k {
            return Err(Error::InvalidParameter(format!("ef ({ef}) must be >= k ({k})")));
        }
        self.dataset().check_query(query)?;
        let ds = self.dataset();
        let mut cmps = 0usize;
        let mut hops = 0usize;
        let ep = self.descend(query, |_| cmps += 1, &mut hops);

        let mut seen = vec![0u64; self.len().div_ceil(64)];
        let mut mark = |id: u32| {
            let (w, b) = (id as usize / 64, id % 64);
            let fresh = seen[w] & (1 << b) == 0;
            seen[w] |= 1 << b;
            fresh
        };
        mark(ep.id);
        let mut frontier = BinaryHeap::from([Reverse(ep)]);
        let mut results = BinaryHeap::from([ep]);
        let mut steps = 0usize;
        while let Some(Reverse(c)) = frontier.pop() {
            if results.len() >= ef && results.peek().is_some_and(|w| c > *w) {
                break;
            }
            steps += 1;
            for &nb in self.neighbors(c.id, 0) {
                if !mark(nb) {
                    continue;
                }
                cmps += 1;
                let cand = Neighbor::new(nb, ds.eval(query, nb as usize));
                if results.len() < ef || results.peek().is_some_and(|w| cand < *w) {
                    frontier.push(Reverse(cand));
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        let ids = results
            .into_sorted_vec()
            .into_iter()
            .take(k)
            .map(|n| n.id)
            .collect();
        Ok(FixedOutcome { ids, steps, cmps })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::GraphConfig;
    use crate::vectorstore::{brute_force_topk, recall_at_k, Dataset, Distribution, SynthSpec};

    fn index(n: usize, seed: u64, m: usize) -> (GraphIndex<f32>, SynthSpec) {
        let spec = SynthSpec::new(n, 8, seed, Distribution::GaussianClusters);
        let ds = Arc::new(spec.generate().unwrap());
        let cfg = GraphConfig { m, ef_construction: 64.max(m), ..Default::default() };
        (GraphIndex::build(ds, cfg).unwrap(), spec)
    }

    fn oracle(ds: &Dataset<f32>, q: &[f32], k: usize) -> Vec<u32> {
        brute_force_topk(ds, q, k).unwrap().iter().map(|n| n.id).collect()
    }

    #[test]
    fn init_contains_only_entry() {
        let (g, spec) = index(200, 1, 8);
        let q = spec.queries::<f32>(1, 0).unwrap().remove(0);
        let st = g.init_search(&q).unwrap();
        assert_eq!(st.search_set_len(), 1);
        let entry = *st.ranked().next().unwrap();
        assert_eq!(st.dist_start(), entry.dist);
        assert_eq!(st.dist_start(), g.dataset().distance_to(&q, entry.id as usize).unwrap());
        assert_eq!(st.trajectory().len(), st.cmps());
        assert_eq!(st.steps_taken(), 0);
    }

    #[test]
    fn init_rejects_wrong_dimension() {
        let (g, _) = index(50, 1, 4);
        assert!(matches!(
            g.init_search(&[0.0; 3]),
            Err(Error::DimensionMismatch { expected: 8, found: 3 })
        ));
    }

    #[test]
    fn step_counts_new_neighbors() {
        let (g, spec) = index(300, 2, 8);
        let q = spec.queries::<f32>(1, 0).unwrap().remove(0);
        let mut st = g.init_search(&q).unwrap();
        let entry = st.ranked().next().unwrap().id;
        let fresh = g.neighbors(entry, 0).iter().filter(|&&nb| !st.contains(nb)).count();
        let (c0, t0) = (st.cmps(), st.trajectory().len());
        g.search_one_step(&q, &mut st);
        assert_eq!(st.cmps() - c0, fresh);
        assert_eq!(st.trajectory().len() - t0, fresh);
        assert_eq!(st.steps_taken(), 1);
    }

    #[test]
    fn exhausted_step_is_noop() {
        let ds = Arc::new(Dataset::from_rows(&[vec![0.0f32], vec![1.0]], Default::default()).unwrap());
        let g = GraphIndex::build(ds, GraphConfig { m: 2, ef_construction: 2, ..Default::default() })
            .unwrap();
        let mut st = g.init_search(&[0.2]).unwrap();
        while !st.exhausted_flag() {
            g.search_one_step(&[0.2], &mut st);
        }
        let (steps, cmps, len) = (st.steps_taken(), st.cmps(), st.search_set_len());
        g.search_one_step(&[0.2], &mut st);
        assert!(st.exhausted_flag());
        assert_eq!((st.steps_taken(), st.cmps(), st.search_set_len()), (steps, cmps, len));
        assert_eq!(len, 2);
    }

    #[test]
    fn multiple_steps_compose() {
        let (g, spec) = index(300, 3, 8);
        let q = spec.queries::<f32>(1, 4).unwrap().remove(0);
        let mut a = g.init_search(&q).unwrap();
        let mut b = g.init_search(&q).unwrap();
        let mut c = g.init_search(&q).unwrap();
        g.search_multiple_steps(&q, &mut a, 1);
        g.search_one_step(&q, &mut c);
        assert_eq!(a.current_topk(50, &HashSet::new()), c.current_topk(50, &HashSet::new()));
        g.search_multiple_steps(&q, &mut a, 6);
        g.search_multiple_steps(&q, &mut b, 7);
        assert_eq!(a.cmps(), b.cmps());
        assert_eq!(a.current_topk(300, &HashSet::new()), b.current_topk(300, &HashSet::new()));
        assert_eq!(a.trajectory().as_slice(), b.trajectory().as_slice());
    }

    #[test]
    fn unlimited_steps_exhaust_small_graph() {
        let (g, spec) = index(100, 4, 8);
        let q = spec.queries::<f32>(1, 0).unwrap().remove(0);
        let mut st = g.init_search(&q).unwrap();
        g.search_multiple_steps(&q, &mut st, 100 * 8);
        assert!(st.is_exhausted());
        assert_eq!(st.search_set_len(), g.reachable_from_entry());
    }

    #[test]
    fn exhaustive_top1_matches_oracle() {
        let (g, spec) = index(100, 5, 8);
        let queries = spec.queries::<f32>(100, 0).unwrap();
        let hits = queries
            .iter()
            .filter(|q| {
                let mut st = g.init_search(q).unwrap();
                g.search_multiple_steps(q, &mut st, usize::MAX);
                st.current_topk(1, &HashSet::new()) == oracle(g.dataset(), q, 1)
            })
            .count();
        assert!(hits >= 99, "{hits}/100");
    }

    #[test]
    fn exhaustive_top5_matches_oracle() {
        let (g, spec) = index(200, 6, 8);
        let queries = spec.queries::<f32>(100, 0).unwrap();
        let hits = queries
            .iter()
            .filter(|q| {
                let mut st = g.init_search(q).unwrap();
                g.search_multiple_steps(q, &mut st, usize::MAX);
                st.current_topk(5, &HashSet::new()) == oracle(g.dataset(), q, 5)
            })
            .count();
        assert!(hits >= 99, "{hits}/100");
    }

    #[test]
    fn topk_respects_mask_and_size() {
        let (g, spec) = index(200, 7, 8);
        let q = spec.queries::<f32>(1, 0).unwrap().remove(0);
        let mut st = g.init_search(&q).unwrap();
        g.search_multiple_steps(&q, &mut st, 4);
        let full = st.current_topk(10, &HashSet::new());
        let masked: HashSet<u32> = [full[0]].into();
        assert_eq!(st.current_topk(9, &masked), full[1..10].to_vec());
        let all = st.current_topk(10_000, &HashSet::new());
        assert_eq!(all.len(), st.search_set_len());
    }

    #[test]
    fn search_monotonicity() {
        let (g, spec) = index(500, 8, 8);
        for q in spec.queries::<f32>(20, 2).unwrap() {
            let mut st = g.init_search(&q).unwrap();
            let mut prev_visited: Vec<u32> = st.ranked().map(|n| n.id).collect();
            let mut prev_best = st.ranked().next().unwrap().dist;
            for _ in 0..60 {
                g.search_one_step(&q, &mut st);
                assert!(prev_visited.iter().all(|&id| st.contains(id)));
                let best = st.ranked().next().unwrap().dist;
                assert!(best <= prev_best);
                assert_eq!(st.cmps(), st.trajectory().len());
                prev_best = best;
                prev_visited = st.ranked().map(|n| n.id).collect();
            }
        }
    }

    #[test]
    fn fixed_search_full_ef_is_exact() {
        let (g, spec) = index(150, 9, 8);
        for q in spec.queries::<f32>(20, 1).unwrap() {
            let out = g.fixed_search(&q, 5, 150).unwrap();
            assert_eq!(out.ids, oracle(g.dataset(), &q, 5));
        }
    }

    #[test]
    fn fixed_search_larger_ef_helps_on_average() {
        let (g, spec) = index(2_000, 10, 6);
        let queries = spec.queries::<f32>(100, 3).unwrap();
        let k = 10;
        let mean = |ef: usize| {
            queries
                .iter()
                .map(|q| {
                    let truth = oracle(g.dataset(), q, k);
                    recall_at_k(&truth, &g.fixed_search(q, k, ef).unwrap().ids, k)
                })
                .sum::<f64>()
                / queries.len() as f64
        };
        assert!(mean(k) <= mean(4 * k));
    }

    #[test]
    fn fixed_search_stored_vector_is_rank_one() {
        let (g, _) = index(400, 11, 8);
        for id in [0usize, 17, 399] {
            let q = g.dataset().vector(id).to_vec();
            for ef in [1, 4] {
                assert_eq!(g.fixed_search(&q, 1, ef).unwrap().ids[0], id as u32);
            }
        }
    }

    #[test]
    fn fixed_search_rejects_small_ef() {
        let (g, _) = index(50, 1, 4);
        assert!(g.fixed_search(&[0.0; 8], 5, 4).is_err());
    }

    #[test]
    fn build_recall_at_full_ef() {
        let spec = SynthSpec::new(1_000, 8, 12, Distribution::Uniform);
        let ds = Arc::new(spec.generate::<f32>().unwrap());
        let g = GraphIndex::build(
            ds.clone(),
            GraphConfig { m: 16, ef_construction: 200, ..Default::default() },
        )
        .unwrap();
        let perfect = spec
            .queries::<f32>(100, 0)
            .unwrap()
            .iter()
            .filter(|q| {
                let ids = g.fixed_search(q, 10, 1_000).unwrap().ids;
                recall_at_k(&oracle(&ds, q, 10), &ids, 10) == 1.0
            })
            .count();
        assert!(perfect >= 99, "{perfect}/100");
    }
}
