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

//! Hierarchical proximity graph with a resumable best-first search.
//!
//! Construction follows the usual HNSW recipe: geometric level assignment,
//! greedy descent through the upper layers, an `ef_construction` beam on
//! each layer the node lives in, and the diversity heuristic for picking
//! neighbors. Layer 0 keeps up to `2 * m` links per node, upper layers `m`.

mod search;
mod serial;

pub use search::{FixedOutcome, SearchState, DEFAULT_WINDOW};
pub use serial::{load_index, save_index, INDEX_MAGIC, INDEX_VERSION};

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectorstore::{Dataset, Neighbor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    /// Max links per node on upper layers; layer 0 allows `2 * m`.
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
    /// Level multiplier `mL`; a node reaches level `floor(-ln(U) * mL)`.
    /// `None` selects `1 / ln(m)`.
    pub level_mult: Option<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            seed: 0x5eed,
            level_mult: None,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidParameter(format!("m must be >= 2, got {}", self.m)));
        }
        if self.ef_construction < self.m {
            return Err(Error::InvalidParameter(format!(
                "ef_construction ({}) must be >= m ({})",
                self.ef_construction, self.m
            )));
        }
        if let Some(ml) = self.level_mult {
            if !(ml.is_finite() && ml >= 0.0) {
                return Err(Error::InvalidParameter("level_mult must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn effective_level_mult(&self) -> f64 {
        self.level_mult.unwrap_or(1.0 / (self.m as f64).ln())
    }

    pub fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

/// Immutable layered proximity graph over a shared [`Dataset`].
#[derive(Debug, Clone)]
pub struct GraphIndex<T> {
    dataset: Arc<Dataset<T>>,
    config: GraphConfig,
    /// `layers[l][node]`; empty for nodes whose level is below `l`.
    layers: Vec<Vec<Vec<u32>>>,
    levels: Vec<u8>,
    entry: u32,
}

/// Reusable visited marks keyed by an epoch counter.
struct Marks {
    epoch: u32,
    marks: Vec<u32>,
}

impl Marks {
    fn new(n: usize) -> Self {
        Self {
            epoch: 0,
            marks: vec![0; n],
        }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Returns true if `id` was not yet marked.
    fn insert(&mut self, id: u32) -> bool {
        let m = &mut self.marks[id as usize];
        if *m == self.epoch {
            false
        } else {
            *m = self.epoch;
            true
        }
    }
}

impl<T: Scalar> GraphIndex<T> {
    /// Builds the graph single-threaded; a fixed seed gives identical
    /// adjacency on every run.
    pub fn build(dataset: Arc<Dataset<T>>, config: GraphConfig) -> Result<Self> {
        config.validate()?;
        dataset.validate()?;
        let n = dataset.len();
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter("collection exceeds u32 ids".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let ml = config.effective_level_mult();
        let levels: Vec<u8> = (0..n)
            .map(|_| {
                let u: f64 = 1.0 - rng.gen::<f64>();
                ((-u.ln() * ml).floor() as usize).min(u8::MAX as usize - 1) as u8
            })
            .collect();
        let top = levels.iter().copied().max().unwrap_or(0) as usize;
        let layers = (0..=top)
            .map(|l| {
                levels
                    .iter()
                    .map(|&lv| {
                        if lv as usize >= l {
                            Vec::with_capacity(config.max_degree(l) + 1)
                        } else {
                            Vec::new()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut index = Self {
            dataset,
            config,
            layers,
            levels,
            entry: 0,
        };
        let mut marks = Marks::new(n);
        let mut max_level = index.levels[0] as usize;
        for id in 1..n as u32 {
            index.insert(id, max_level, &mut marks);
            if index.levels[id as usize] as usize > max_level {
                max_level = index.levels[id as usize] as usize;
                index.entry = id;
            }
        }
        Ok(index)
    }

    fn insert(&mut self, id: u32, max_level: usize, marks: &mut Marks) {
        let level = self.levels[id as usize] as usize;
        let query = self.dataset.vector(id as usize).to_vec();
        let mut ep = Neighbor::new(self.entry, self.dataset.eval(&query, self.entry as usize));
        for l in ((level + 1)..=max_level).rev() {
            ep = self.greedy_closest(&query, ep, l);
        }
        for l in (0..=level.min(max_level)).rev() {
            let candidates = self.beam(&query, ep, self.config.ef_construction, l, marks);
            let chosen = self.select_neighbors(&candidates, self.config.m);
            for &nb in &chosen {
                self.link(nb.id, id, nb.dist, l);
            }
            self.layers[l][id as usize] = chosen.iter().map(|n| n.id).collect();
            ep = candidates[0];
        }
    }

    fn link(&mut self, from: u32, to: u32, dist: T, layer: usize) {
        let cap = self.config.max_degree(layer);
        let list = &mut self.layers[layer][from as usize];
        if list.contains(&to) {
            return;
        }
        if list.len() < cap {
            list.push(to);
            return;
        }
        let base = self.dataset.vector(from as usize);
        let mut cands: Vec<Neighbor<T>> = list
            .iter()
            .map(|&x| Neighbor::new(x, self.dataset.eval(base, x as usize)))
            .collect();
        cands.push(Neighbor::new(to, dist));
        cands.sort_unstable();
        let kept = self.select_neighbors(&cands, cap);
        self.layers[layer][from as usize] = kept.iter().map(|n| n.id).collect();
    }

    /// Diversity heuristic: keep a candidate only if it is closer to the base
    /// than to every neighbor already kept. `candidates` must be ascending.
    fn select_neighbors(&self, candidates: &[Neighbor<T>], cap: usize) -> Vec<Neighbor<T>> {
        let mut kept: Vec<Neighbor<T>> = Vec::with_capacity(cap);
        for &c in candidates {
            if kept.len() >= cap {
                break;
            }
            let cv = self.dataset.vector(c.id as usize);
            let diverse = kept
                .iter()
                .all(|k| self.dataset.eval(cv, k.id as usize) > c.dist);
            if diverse {
                kept.push(c);
            }
        }
        kept
    }

    fn greedy_closest(&self, query: &[T], mut best: Neighbor<T>, layer: usize) -> Neighbor<T> {
        loop {
            let mut moved = false;
            for &nb in &self.layers[layer][best.id as usize] {
                let cand = Neighbor::new(nb, self.dataset.eval(query, nb as usize));
                if cand < best {
                    best = cand;
                    moved = true;
                }
            }
            if !moved {
                return best;
            }
        }
    }

    /// Bounded beam search on one layer; returns up to `ef` ascending results.
    fn beam(
        &self,
        query: &[T],
        ep: Neighbor<T>,
        ef: usize,
        layer: usize,
        marks: &mut Marks,
    ) -> Vec<Neighbor<T>> {
        marks.reset();
        marks.insert(ep.id);
        let mut frontier = BinaryHeap::from([Reverse(ep)]);
        let mut results = BinaryHeap::from([ep]);
        while let Some(Reverse(c)) = frontier.pop() {
            if results.len() >= ef && results.peek().is_some_and(|w| c > *w) {
                break;
            }
            for &nb in &self.layers[layer][c.id as usize] {
                if !marks.insert(nb) {
                    continue;
                }
                let cand = Neighbor::new(nb, self.dataset.eval(query, nb as usize));
                if results.len() < ef || results.peek().is_some_and(|w| cand < *w) {
                    frontier.push(Reverse(cand));
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    pub fn dataset(&self) -> &Arc<Dataset<T>> {
        &self.dataset
    }

    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn entry_point(&self) -> u32 {
        self.entry
    }

    pub fn max_level(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn level_of(&self, id: u32) -> usize {
        self.levels[id as usize] as usize
    }

    pub fn neighbors(&self, id: u32, layer: usize) -> &[u32] {
        self.layers
            .get(layer)
            .map(|l| l[id as usize].as_slice())
            .unwrap_or(&[])
    }

    /// Layer-major adjacency, for equality checks and serialization.
    pub fn adjacency(&self) -> &[Vec<Vec<u32>>] {
        &self.layers
    }

    /// Ids reachable from the entry point on layer 0.
    pub fn reachable_from_entry(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![self.entry];
        seen[self.entry as usize] = true;
        let mut count = 0;
        while let Some(id) = stack.pop() {
            count += 1;
            for &nb in self.neighbors(id, 0) {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    stack.push(nb);
                }
            }
        }
        count
    }

    pub(crate) fn from_parts(
        dataset: Arc<Dataset<T>>,
        config: GraphConfig,
        layers: Vec<Vec<Vec<u32>>>,
        levels: Vec<u8>,
        entry: u32,
    ) -> Self {
        Self {
            dataset,
            config,
            layers,
            levels,
            entry,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorstore::{Distribution, Metric, SynthSpec};

    fn synth(n: usize, seed: u64) -> Arc<Dataset<f32>> {
        Arc::new(
            SynthSpec::new(n, 8, seed, Distribution::Uniform)
                .generate()
                .unwrap(),
        )
    }

    #[test]
    fn single_node() {
        let ds = Arc::new(Dataset::from_rows(&[vec![1.0f32, 2.0]], Metric::SquaredEuclidean).unwrap());
        let g = GraphIndex::build(ds, GraphConfig::default()).unwrap();
        assert_eq!(g.entry_point(), 0);
        assert_eq!(g.len(), 1);
        assert!(g.neighbors(0, 0).is_empty());
    }

    #[test]
    fn config_validation() {
        let bad = GraphConfig { m: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = GraphConfig { m: 16, ef_construction: 8, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deterministic_adjacency() {
        let ds = synth(500, 3);
        let cfg = GraphConfig { m: 8, ef_construction: 40, ..Default::default() };
        let a = GraphIndex::build(ds.clone(), cfg).unwrap();
        let b = GraphIndex::build(ds, cfg).unwrap();
        assert_eq!(a.adjacency(), b.adjacency());
        assert_eq!(a.entry_point(), b.entry_point());
    }

    #[test]
    fn degree_caps_and_valid_edges() {
        let ds = synth(800, 5);
        let cfg = GraphConfig { m: 6, ef_construction: 30, ..Default::default() };
        let g = GraphIndex::build(ds, cfg).unwrap();
        for (l, layer) in g.adjacency().iter().enumerate() {
            for (id, list) in layer.iter().enumerate() {
                assert!(list.len() <= cfg.max_degree(l));
                if !list.is_empty() {
                    assert!(g.level_of(id as u32) >= l);
                }
                for &nb in list {
                    assert!((nb as usize) < g.len());
                    assert!(g.level_of(nb) >= l);
                    assert_ne!(nb as usize, id);
                }
            }
        }
        assert_eq!(g.adjacency()[0].len(), 800);
        assert_eq!(g.reachable_from_entry(), 800);
    }
}
