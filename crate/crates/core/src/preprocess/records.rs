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

//! Training records from replayed top-1 searches.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gbdt::TrainingRecord;
use crate::graph::GraphIndex;
use crate::scalar::Scalar;
use crate::vectorstore::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordConfig {
    /// Steps between snapshots; a snapshot is also taken right after init.
    pub checkpoint_interval: usize,
    /// Replays run for this many times the steps needed to reach the true
    /// nearest neighbor.
    pub replay_multiplier: usize,
    /// Lower bound on the replay length, in steps.
    pub min_replay_steps: usize,
    pub window: usize,
}

impl Default for RecordConfig {
    fn default() -> Self {
        Self {
            checkpoint_interval: 1,
            replay_multiplier: 4,
            min_replay_steps: 0,
            window: 100,
        }
    }
}

/// Replays one query and snapshots features every `checkpoint_interval`
/// steps. The label is whether the current best candidate is `truth`.
pub fn replay_query<T: Scalar>(
    index: &GraphIndex<T>,
    query: &[T],
    truth: u32,
    cfg: &RecordConfig,
) -> Result<Vec<TrainingRecord>> {
    let mut st = index.init_search_with_window(query, cfg.window)?;
    let mut out = Vec::new();
    let mut cap: Option<usize> = None;
    loop {
        let steps = st.steps_taken();
        if cap.is_none() && st.contains(truth) {
            cap = Some((cfg.replay_multiplier * steps).max(cfg.min_replay_steps));
        }
        if steps % cfg.checkpoint_interval == 0 {
            let label = st.ranked().next().map(|n| n.id) == Some(truth);
            out.push(TrainingRecord {
                features: st.features(cfg.window)?,
                label,
            });
        }
        if cap.is_some_and(|c| steps >= c) || st.is_exhausted() {
            break;
        }
        index.search_one_step(query, &mut st);
    }
    Ok(out)
}

/// Records for every query, in query order.
pub fn generate_training_records<T: Scalar>(
    index: &GraphIndex<T>,
    queries: &[Vec<T>],
    ground_truth: &GroundTruth<T>,
    cfg: &RecordConfig,
) -> Result<Vec<TrainingRecord>> {
    if cfg.checkpoint_interval == 0 || cfg.window == 0 {
        return Err(Error::InvalidParameter(
            "checkpoint_interval and window must be >= 1".into(),
        ));
    }
    let per_query = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let truth = ground_truth
                .row(i)
                .and_then(|r| r.first())
                .ok_or(Error::MissingGroundTruth(i))?;
            replay_query(index, q, truth.id, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_query.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::GraphConfig;
    use crate::vectorstore::{brute_force_ground_truth, Distribution, SynthSpec};

    fn setup() -> (GraphIndex<f32>, Vec<Vec<f32>>) {
        let spec = SynthSpec::new(2_000, 8, 21, Distribution::GaussianClusters);
        let ds = Arc::new(spec.generate().unwrap());
        let g = GraphIndex::build(ds, GraphConfig { m: 8, ef_construction: 50, ..Default::default() })
            .unwrap();
        (g, spec.queries(60, 0).unwrap())
    }

    #[test]
    fn labels_never_revert() {
        let (g, qs) = setup();
        let gt = brute_force_ground_truth(g.dataset(), &qs, 1).unwrap();
        let cfg = RecordConfig { checkpoint_interval: 2, ..Default::default() };
        for (i, q) in qs.iter().enumerate() {
            let recs = replay_query(&g, q, gt.row(i).unwrap()[0].id, &cfg).unwrap();
            assert!(!recs.is_empty());
            let first_pos = recs.iter().position(|r| r.label).unwrap_or(recs.len());
            assert!(recs[first_pos..].iter().all(|r| r.label));
            for w in recs.windows(2) {
                assert!(w[1].features.curr_hops > w[0].features.curr_hops);
            }
        }
    }

    #[test]
    fn stored_vector_query_labels_once_visited() {
        let (g, _) = setup();
        let id = 1234u32;
        let q = g.dataset().vector(id as usize).to_vec();
        let cfg = RecordConfig { checkpoint_interval: 1, ..Default::default() };
        let recs = replay_query(&g, &q, id, &cfg).unwrap();
        let mut st = g.init_search(&q).unwrap();
        let mut step = 0;
        while !st.contains(id) {
            g.search_one_step(&q, &mut st);
            step += 1;
        }
        assert!(!recs[..step].iter().any(|r| r.label));
        assert!(recs[step].label);
    }

    #[test]
    fn first_snapshot_is_post_init() {
        let (g, qs) = setup();
        let gt = brute_force_ground_truth(g.dataset(), &qs, 1).unwrap();
        let recs = generate_training_records(&g, &qs, &gt, &RecordConfig::default()).unwrap();
        assert!(recs.len() >= qs.len());
        for (i, q) in qs.iter().enumerate() {
            let st = g.init_search(q).unwrap();
            let best = st.ranked().next().unwrap().id;
            let r = replay_query(&g, q, gt.row(i).unwrap()[0].id, &RecordConfig::default()).unwrap();
            assert_eq!(r[0].label, best == gt.row(i).unwrap()[0].id);
            assert_eq!(r[0].features.dist_1st, r[0].features.dist_start);
        }
    }

    #[test]
    fn missing_ground_truth() {
        let (g, qs) = setup();
        let gt = brute_force_ground_truth(g.dataset(), &qs[..3], 1).unwrap();
        assert!(matches!(
            generate_training_records(&g, &qs[..5], &gt, &RecordConfig::default()),
            Err(Error::MissingGroundTruth(3))
        ));
    }
}
