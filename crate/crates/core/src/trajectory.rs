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

//! Distance trajectories and the fixed-arity feature vector fed to the stop
//! model.
//!
//! Every distance evaluated during a search is appended to the trajectory.
//! The model sees summary statistics over the most recent `w` entries plus
//! four progress scalars. Masking removes ids from the `dist_1st` feature
//! only; the trajectory itself is never rewritten.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::SearchState;
use crate::scalar::Scalar;

pub const FEATURE_COUNT: usize = 11;

/// Frozen feature order. Model files depend on it.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "window_mean",
    "window_variance",
    "window_min",
    "window_max",
    "window_median",
    "window_p25",
    "window_p75",
    "curr_hops",
    "curr_cmps",
    "dist_1st",
    "dist_start",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub w: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { w: 100 }
    }
}

impl WindowConfig {
    pub fn new(w: usize) -> Result<Self> {
        if w == 0 {
            return Err(Error::InvalidParameter("window size must be >= 1".into()));
        }
        Ok(Self { w })
    }
}

/// Order statistics and moments of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Linear interpolation between order statistics at index `q * (n - 1)`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl WindowStats {
    /// Statistics of an ascending, nonempty slice.
    pub fn from_sorted(sorted: &[f64]) -> Self {
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let variance = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean,
            variance,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            median: percentile_sorted(sorted, 0.5),
            p25: percentile_sorted(sorted, 0.25),
            p75: percentile_sorted(sorted, 0.75),
        }
    }

    /// Recomputes from scratch; `None` on an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self::from_sorted(&sorted))
    }
}

/// Ring buffer of the last `cap` values plus a sorted mirror kept in step,
/// so order statistics never need a full sort.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    cap: usize,
    ring: VecDeque<f64>,
    sorted: Vec<f64>,
}

impl SlidingWindow {
    pub fn new(cap: usize) -> Self {
        assert!(cap >= 1, "window size must be >= 1");
        Self {
            cap,
            ring: VecDeque::with_capacity(cap + 1),
            sorted: Vec::with_capacity(cap + 1),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn push(&mut self, v: f64) {
        self.ring.push_back(v);
        let at = self.sorted.partition_point(|x| x.total_cmp(&v).is_lt());
        self.sorted.insert(at, v);
        if self.ring.len() > self.cap {
            let old = self.ring.pop_front().expect("nonempty");
            let at = self.sorted.partition_point(|x| x.total_cmp(&old).is_lt());
            self.sorted.remove(at);
        }
    }

    pub fn stats(&self) -> Option<WindowStats> {
        (!self.sorted.is_empty()).then(|| WindowStats::from_sorted(&self.sorted))
    }
}

/// Append-only distance sequence in evaluation order.
#[derive(Debug, Clone)]
pub struct Trajectory {
    values: Vec<f64>,
    window: SlidingWindow,
}

impl Trajectory {
    pub fn new(w: usize) -> Self {
        Self {
            values: Vec::new(),
            window: SlidingWindow::new(w),
        }
    }

    #[inline]
    pub fn push(&mut self, d: f64) {
        self.values.push(d);
        self.window.push(d);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn window_size(&self) -> usize {
        self.window.cap()
    }

    /// Statistics over the last `min(w, len)` entries.
    pub fn window_stats(&self, w: usize) -> Option<WindowStats> {
        if w == self.window.cap() {
            return self.window.stats();
        }
        let start = self.values.len().saturating_sub(w);
        WindowStats::of(&self.values[start..])
    }
}

/// Model input: window statistics followed by progress scalars, in
/// [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub window: WindowStats,
    pub curr_hops: f64,
    pub curr_cmps: f64,
    pub dist_1st: f64,
    pub dist_start: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        let w = &self.window;
        [
            w.mean,
            w.variance,
            w.min,
            w.max,
            w.median,
            w.p25,
            w.p75,
            self.curr_hops,
            self.curr_cmps,
            self.dist_1st,
            self.dist_start,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        Self {
            window: WindowStats {
                mean: a[0],
                variance: a[1],
                min: a[2],
                max: a[3],
                median: a[4],
                p25: a[5],
                p75: a[6],
            },
            curr_hops: a[7],
            curr_cmps: a[8],
            dist_1st: a[9],
            dist_start: a[10],
        }
    }
}

/// Features of `state` given `trajectory` (normally `state.trajectory()`),
/// excluding `masked` ids from `dist_1st`. When every id in the search set
/// is masked `dist_1st` falls back to `dist_start`.
pub fn extract_features<T: Scalar>(
    trajectory: &Trajectory,
    state: &SearchState<T>,
    masked: &HashSet<u32>,
    w: usize,
) -> Result<FeatureVector> {
    if w == 0 {
        return Err(Error::InvalidParameter("window size must be >= 1".into()));
    }
    let window = trajectory.window_stats(w).ok_or(Error::EmptyTrajectory)?;
    let dist_start = state.dist_start().as_f64();
    let dist_1st = state
        .best_unmasked(masked)
        .map_or(dist_start, |n| n.dist.as_f64());
    Ok(FeatureVector {
        window,
        curr_hops: state.hops() as f64,
        curr_cmps: state.cmps() as f64,
        dist_1st,
        dist_start,
    })
}

/// Masks the ids at ranks `1..=n` of the search set (all entries, masked or
/// not). Ranks beyond the set size are ignored. Returns the number of ids
/// newly masked.
pub fn mask_top<T: Scalar>(state: &mut SearchState<T>, n: usize) -> usize {
    let ids: Vec<u32> = state.ranked().take(n).map(|c| c.id).collect();
    ids.into_iter().filter(|&id| state.masked_mut().insert(id)).count()
}

/// Masks explicit ids; each must already be in the search set.
pub fn mask_ids<T: Scalar>(state: &mut SearchState<T>, ids: &[u32]) -> Result<()> {
    if let Some(&bad) = ids.iter().find(|&&id| !state.contains(id)) {
        return Err(Error::NotInSearchSet(bad));
    }
    state.masked_mut().extend(ids.iter().copied());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use proptest::prelude::*;

    use crate::graph::{GraphConfig, GraphIndex};
    use crate::vectorstore::{Distribution, SynthSpec};

    /// Chronological-order recomputation, independent of the sorted-buffer
    /// path used by `WindowStats::from_sorted`.
    fn naive(values: &[f64]) -> [f64; 7] {
        let n = values.len() as f64;
        let mut mean = 0.0;
        for v in values {
            mean += v;
        }
        mean /= n;
        let mut var = 0.0;
        for v in values {
            var += (v - mean) * (v - mean);
        }
        var /= n;
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pct = |q: f64| {
            let pos = q * (s.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            s[lo] * (1.0 - (pos - lo as f64)) + s[hi] * (pos - lo as f64)
        };
        [mean, var, s[0], s[s.len() - 1], pct(0.5), pct(0.25), pct(0.75)]
    }

    fn as_array(s: &WindowStats) -> [f64; 7] {
        [s.mean, s.variance, s.min, s.max, s.median, s.p25, s.p75]
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn constant_window() {
        let s = WindowStats::of(&[5.0; 100]).unwrap();
        assert_eq!(as_array(&s), [5.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn one_to_hundred() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let expected = naive(&values);
        // frozen from the naive oracle
        assert_eq!(expected[0], 50.5);
        assert_eq!(expected[4], 50.5);
        assert_eq!(expected[5], 25.75);
        assert_eq!(expected[6], 75.25);
        let mut win = SlidingWindow::new(100);
        values.iter().rev().for_each(|&v| win.push(v));
        let got = as_array(&win.stats().unwrap());
        for (g, e) in got.iter().zip(expected) {
            assert!(close(*g, e), "{g} vs {e}");
        }
    }

    #[test]
    fn single_entry_variance_is_zero() {
        let s = WindowStats::of(&[3.5]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.p25, 3.5);
    }

    proptest! {
        #[test]
        fn incremental_window_matches_naive(
            values in prop::collection::vec(-1e3f64..1e3, 1..600),
            cap in 1usize..150,
        ) {
            let mut win = SlidingWindow::new(cap);
            for (i, &v) in values.iter().enumerate() {
                win.push(v);
                let start = (i + 1).saturating_sub(cap);
                let expect = naive(&values[start..=i]);
                let got = as_array(&win.stats().unwrap());
                for (g, e) in got.iter().zip(expect) {
                    prop_assert!(close(*g, e), "{} vs {}", g, e);
                }
            }
        }
    }

    fn small_index() -> GraphIndex<f32> {
        let ds = Arc::new(
            SynthSpec::new(300, 6, 11, Distribution::GaussianClusters)
                .generate()
                .unwrap(),
        );
        GraphIndex::build(ds, GraphConfig { m: 8, ef_construction: 40, ..Default::default() })
            .unwrap()
    }

    #[test]
    fn features_at_init() {
        let g = small_index();
        let q = g.dataset().vector(7).to_vec();
        let st = g.init_search(&q).unwrap();
        let f = extract_features(st.trajectory(), &st, &HashSet::new(), 100).unwrap();
        assert_eq!(f.dist_1st, f.dist_start);
        assert_eq!(f.curr_cmps as usize, st.trajectory().len());
    }

    #[test]
    fn masking_changes_only_dist_1st() {
        let g = small_index();
        let q = SynthSpec::new(300, 6, 11, Distribution::GaussianClusters)
            .queries::<f32>(1, 0)
            .unwrap()
            .remove(0);
        let mut st = g.init_search(&q).unwrap();
        g.search_multiple_steps(&q, &mut st, 10);
        let before = st.features(100).unwrap();
        let ranked: Vec<_> = st.ranked().take(2).copied().collect();
        assert_eq!(before.dist_1st, ranked[0].dist as f64);
        assert_eq!(mask_top(&mut st, 1), 1);
        let after = st.features(100).unwrap();
        assert_eq!(after.window, before.window);
        assert_eq!(after.curr_cmps, before.curr_cmps);
        assert_eq!(after.dist_1st, ranked[1].dist as f64);
        assert_eq!(mask_top(&mut st, 0), 0);
    }

    #[test]
    fn mask_everything_falls_back_to_dist_start() {
        let g = small_index();
        let q = g.dataset().vector(0).to_vec();
        let mut st = g.init_search(&q).unwrap();
        g.search_one_step(&q, &mut st);
        let n = st.search_set_len();
        mask_top(&mut st, n + 5);
        let f = st.features(100).unwrap();
        assert_eq!(f.dist_1st, f.dist_start);
    }

    #[test]
    fn masking_unknown_id_fails() {
        let g = small_index();
        let q = g.dataset().vector(0).to_vec();
        let mut st = g.init_search(&q).unwrap();
        let outside = (0..300u32).find(|&id| !st.contains(id)).unwrap();
        assert!(matches!(mask_ids(&mut st, &[outside]), Err(Error::NotInSearchSet(_))));
        let inside = st.ranked().next().unwrap().id;
        mask_ids(&mut st, &[inside]).unwrap();
        assert!(st.masked().contains(&inside));
    }

    #[test]
    fn window_larger_than_trajectory_is_irrelevant() {
        let g = small_index();
        let q = g.dataset().vector(3).to_vec();
        let mut st = g.init_search(&q).unwrap();
        g.search_multiple_steps(&q, &mut st, 3);
        let len = st.trajectory().len();
        let empty = HashSet::new();
        let a = extract_features(st.trajectory(), &st, &empty, len).unwrap();
        let b = extract_features(st.trajectory(), &st, &empty, len + 1000).unwrap();
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!(close(*x, y));
        }
    }

    #[test]
    fn feature_array_round_trip() {
        let a: [f64; FEATURE_COUNT] = std::array::from_fn(|i| i as f64 * 1.5);
        assert_eq!(FeatureVector::from_array(a).to_array(), a);
    }
}
