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

//! Conditional probability table `P[N][r]`: the chance that the rank-`r`
//! true neighbor is already in the search set, given that ranks `1..=N`
//! are all present.

use std::fs;
use std::path::Path;

use log::debug;
use rayon::prelude::*;

use crate::codec::{put_f64, put_u32, put_u64, Reader};
use crate::error::{Error, Result};
use crate::graph::GraphIndex;
use crate::scalar::Scalar;
use crate::vectorstore::GroundTruth;

pub const TABLE_MAGIC: &[u8; 4] = b"OMGT";
pub const TABLE_VERSION: u32 = 1;

/// Table covering `N` in `0..=n_max` and `r` in `1..=r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    n_max: usize,
    r_max: usize,
    /// Row-major `(n_max + 1) x r_max`; column `r - 1`.
    prob: Vec<f64>,
    /// Observations (weighted by steps) per row.
    observations: Vec<u64>,
    /// Observations in which rank `r` was present, same layout as `prob`.
    hits: Vec<u64>,
    /// Largest decrease in `N` found in the raw estimates before the
    /// monotone adjustment.
    raw_violation: f64,
}

/// Weighted pool-adjacent-violators: the nondecreasing sequence closest to
/// `values` in weighted least squares.
pub fn isotonic_nondecreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            let m = if w > 0.0 { (m1 * w1 + m2 * w2) / w } else { (m1 + m2) / 2.0 };
            blocks.push((m, w, c1 + c2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, c)| std::iter::repeat_n(m, c))
        .collect()
}

impl ProbTable {
    pub fn new(n_max: usize, r_max: usize) -> Result<Self> {
        if r_max == 0 {
            return Err(Error::InvalidParameter("r_max must be >= 1".into()));
        }
        let cells = (n_max + 1) * r_max;
        Ok(Self {
            n_max,
            r_max,
            prob: vec![0.0; cells],
            observations: vec![0; n_max + 1],
            hits: vec![0; cells],
            raw_violation: 0.0,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    #[inline]
    fn cell(&self, n: usize, r: usize) -> usize {
        n * self.r_max + (r - 1)
    }

    /// `P[n][r]` for `r >= 1`. Ranks covered by the found prefix are 1;
    /// `n` beyond the table uses the last row. Ranks past `r_max` are not
    /// stored and return `None`.
    pub fn get(&self, n: usize, r: usize) -> Option<f64> {
        if r <= n {
            return Some(1.0);
        }
        if r == 0 || r > self.r_max {
            return None;
        }
        Some(self.prob[self.cell(n.min(self.n_max), r)])
    }

    pub fn observations(&self, n: usize) -> u64 {
        self.observations.get(n).copied().unwrap_or(0)
    }

    pub fn hits(&self, n: usize, r: usize) -> u64 {
        self.hits[self.cell(n, r)]
    }

    pub fn raw_violation(&self) -> f64 {
        self.raw_violation
    }

    /// Folds `weight` observations of state `(n, present)` into the counts.
    /// `present[r - 1]` tells whether rank `r` is in the search set.
    pub fn observe(&mut self, n: usize, present: &[bool], weight: u64) {
        if n > self.n_max || weight == 0 {
            return;
        }
        self.observations[n] += weight;
        for (r, &p) in present.iter().enumerate().take(self.r_max) {
            if p {
                let c = self.cell(n, r + 1);
                self.hits[c] += weight;
            }
        }
    }

    fn merge(&mut self, other: &ProbTable) {
        for (a, b) in self.observations.iter_mut().zip(&other.observations) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
    }

    /// Turns counts into probabilities: empirical means, prefix cells forced
    /// to 1, unobserved rows copied from the nearest observed row below,
    /// then a weighted isotonic pass per column so rows never decrease in N.
    pub fn finalize(&mut self) {
        let (n_max, r_max) = (self.n_max, self.r_max);
        let mut last_observed: Option<usize> = None;
        for n in 0..=n_max {
            let obs = self.observations[n];
            for r in 1..=r_max {
                let c = self.cell(n, r);
                self.prob[c] = if r <= n {
                    1.0
                } else if obs > 0 {
                    self.hits[c] as f64 / obs as f64
                } else if let Some(src) = last_observed {
                    self.prob[self.cell(src, r)]
                } else {
                    0.0
                };
            }
            if obs > 0 {
                last_observed = Some(n);
            }
        }

        let mut violation: f64 = 0.0;
        for r in 1..=r_max {
            let col: Vec<f64> = (0..=n_max).map(|n| self.prob[self.cell(n, r)]).collect();
            for w in col.windows(2) {
                violation = violation.max(w[0] - w[1]);
            }
            let weights: Vec<f64> = (0..=n_max)
                .map(|n| self.observations[n].max(1) as f64)
                .collect();
            let fitted = isotonic_nondecreasing(&col, &weights);
            for (n, v) in fitted.into_iter().enumerate() {
                let c = self.cell(n, r);
                self.prob[c] = if r <= n { 1.0 } else { v.clamp(0.0, 1.0) };
            }
        }
        self.raw_violation = violation;
        debug!("probability table finalized, max raw decrease in N = {violation:.4}");
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TABLE_MAGIC);
        put_u32(&mut out, TABLE_VERSION);
        put_u32(&mut out, self.n_max as u32);
        put_u32(&mut out, self.r_max as u32);
        put_f64(&mut out, self.raw_violation);
        self.prob.iter().for_each(|&p| put_f64(&mut out, p));
        self.observations.iter().for_each(|&o| put_u64(&mut out, o));
        self.hits.iter().for_each(|&h| put_u64(&mut out, h));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(TABLE_MAGIC, TABLE_VERSION)?;
        let n_max = r.u32()? as usize;
        let r_max = r.u32()? as usize;
        let mut t = Self::new(n_max, r_max).map_err(|e| Error::Corrupt(e.to_string()))?;
        t.raw_violation = r.f64()?;
        for p in t.prob.iter_mut() {
            *p = r.f64()?;
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Corrupt(format!("probability {p} out of range")));
            }
        }
        for o in t.observations.iter_mut() {
            *o = r.u64()?;
        }
        for h in t.hits.iter_mut() {
            *h = r.u64()?;
        }
        r.finish()?;
        Ok(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Replays one query and accumulates its observations. Consecutive steps
/// with an identical state are folded into a single weighted observation.
fn profile_query<T: Scalar>(
    index: &GraphIndex<T>,
    query: &[T],
    truth: &[u32],
    table: &mut ProbTable,
    step_cap: usize,
) -> Result<()> {
    let r_max = table.r_max;
    let n_max = table.n_max;
    let mut st = index.init_search(query)?;
    let mut present = vec![false; r_max];
    let mut missing: Vec<usize> = (0..r_max).collect();
    let mut prefix = 0usize;
    let mut run = 0u64;
    loop {
        let newly: Vec<usize> = missing
            .iter()
            .copied()
            .filter(|&r| st.contains(truth[r]))
            .collect();
        if !newly.is_empty() {
            table.observe(prefix, &present, run);
            run = 0;
            newly.iter().for_each(|&r| present[r] = true);
            missing.retain(|&r| !present[r]);
            while prefix < r_max && present[prefix] {
                prefix += 1;
            }
        }
        run += 1;
        if prefix >= n_max || prefix >= r_max || st.is_exhausted() || st.steps_taken() >= step_cap {
            break;
        }
        index.search_one_step(query, &mut st);
    }
    table.observe(prefix, &present, run);
    Ok(())
}

/// Profiles `P[N][r]` by replaying every query step by step. Each step
/// after init is one observation of `(N, ranks present)`, where `N` is the
/// length of the true-rank prefix fully present. A replay ends once that
/// prefix reaches the table bound, on exhaustion, or at `step_cap`.
pub fn build_prob_table<T: Scalar>(
    index: &GraphIndex<T>,
    queries: &[Vec<T>],
    ground_truth: &GroundTruth<T>,
    n_max: usize,
    r_max: usize,
    step_cap: usize,
) -> Result<ProbTable> {
    let empty = ProbTable::new(n_max, r_max)?;
    if ground_truth.len() < queries.len() {
        return Err(Error::MissingGroundTruth(ground_truth.len()));
    }
    let depth = ground_truth.depth();
    if depth < r_max {
        return Err(Error::GroundTruthTooShallow {
            depth,
            required: r_max,
        });
    }
    let partials = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let truth: Vec<u32> = ground_truth.row(i).expect("checked")[..r_max]
                .iter()
                .map(|n| n.id)
                .collect();
            let mut t = empty.clone();
            profile_query(index, q, &truth, &mut t, step_cap)?;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = empty;
    for p in &partials {
        table.merge(p);
    }
    table.finalize();
    Ok(table)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::graph::GraphConfig;
    use crate::vectorstore::{brute_force_ground_truth, Distribution, SynthSpec};

    fn profiled(n_max: usize, r_max: usize) -> ProbTable {
        let spec = SynthSpec::new(3_000, 8, 31, Distribution::GaussianClusters);
        let ds = Arc::new(spec.generate::<f32>().unwrap());
        let g = GraphIndex::build(ds.clone(), GraphConfig { m: 8, ef_construction: 60, ..Default::default() })
            .unwrap();
        let qs = spec.queries(80, 0).unwrap();
        let gt = brute_force_ground_truth(&ds, &qs, r_max).unwrap();
        build_prob_table(&g, &qs, &gt, n_max, r_max, usize::MAX).unwrap()
    }

    #[test]
    fn table_invariants() {
        let t = profiled(30, 30);
        for n in 0..=30 {
            for r in 1..=30 {
                let p = t.get(n, r).unwrap();
                assert!((0.0..=1.0).contains(&p));
                if r <= n {
                    assert_eq!(p, 1.0);
                }
                if n > 0 {
                    assert!(p >= t.get(n - 1, r).unwrap());
                }
            }
        }
        // every replay ends with the full prefix present
        assert!(t.observations(30) >= 80);
        assert_eq!(t.hits(30, 30), t.observations(30));
    }

    #[test]
    fn shallow_ground_truth_rejected() {
        let spec = SynthSpec::new(200, 4, 1, Distribution::Uniform);
        let ds = Arc::new(spec.generate::<f32>().unwrap());
        let g = GraphIndex::build(ds.clone(), GraphConfig { m: 4, ef_construction: 8, ..Default::default() })
            .unwrap();
        let qs = spec.queries(3, 0).unwrap();
        let gt = brute_force_ground_truth(&ds, &qs, 5).unwrap();
        assert!(matches!(
            build_prob_table(&g, &qs, &gt, 10, 10, usize::MAX),
            Err(Error::GroundTruthTooShallow { depth: 5, required: 10 })
        ));
    }

    #[test]
    fn unobserved_rows_copy_lower_row() {
        let mut t = ProbTable::new(3, 4).unwrap();
        t.observe(0, &[false, true, false, false], 4);
        t.observe(0, &[true, true, false, false], 4);
        t.observe(3, &[true, true, true, true], 1);
        t.finalize();
        assert_eq!(t.get(0, 1), Some(0.5));
        assert_eq!(t.get(0, 2), Some(1.0));
        assert_eq!(t.get(1, 3), Some(0.0));
        assert_eq!(t.get(2, 4), Some(0.0));
        assert_eq!(t.get(2, 2), Some(1.0));
        assert_eq!(t.get(3, 4), Some(1.0));
        assert_eq!(t.get(9, 4), Some(1.0));
        assert_eq!(t.get(0, 5), None);
    }

    #[test]
    fn isotonic_fixes_violations() {
        let mut t = ProbTable::new(2, 3).unwrap();
        t.observe(0, &[false, false, true], 10);
        t.observe(1, &[true, false, false], 10);
        t.observe(2, &[true, true, false], 10);
        t.finalize();
        assert!(t.raw_violation() > 0.99);
        let col: Vec<f64> = (0..=2).map(|n| t.get(n, 3).unwrap()).collect();
        assert!(col.windows(2).all(|w| w[0] <= w[1]));
        assert!((col[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn serialization_round_trip() {
        let t = profiled(10, 12);
        let back = ProbTable::from_bytes(&t.to_bytes()).unwrap();
        assert_eq!(back, t);
        let bytes = t.to_bytes();
        assert!(ProbTable::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    proptest! {
        #[test]
        fn pav_output_is_monotone_and_mean_preserving(
            vals in prop::collection::vec(0.0f64..1.0, 1..40),
            ws in prop::collection::vec(0.1f64..10.0, 40),
        ) {
            let w = &ws[..vals.len()];
            let fit = isotonic_nondecreasing(&vals, w);
            prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
            let before: f64 = vals.iter().zip(w).map(|(v, w)| v * w).sum();
            let after: f64 = fit.iter().zip(w).map(|(v, w)| v * w).sum();
            prop_assert!((before - after).abs() < 1e-9);
            let again = isotonic_nondecreasing(&fit, w);
            for (a, b) in again.iter().zip(&fit) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
