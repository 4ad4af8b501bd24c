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

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use omega_core::gbdt::{train_dense, Tree};
use omega_core::preprocess::{isotonic_nondecreasing, Forecaster, ProbTable};
use omega_core::vectorstore::{brute_force_topk, Distribution, SynthSpec};
use omega_core::{
    adaptive_interval, basic_search, forecast_recall, GbdtModel, GraphConfig, GraphIndex32, OmegaParams,
    OracleStop, TrainConfig,
};
use proptest::prelude::*;

fn small_index() -> &'static (GraphIndex32, SynthSpec) {
    static I: OnceLock<(GraphIndex32, SynthSpec)> = OnceLock::new();
    I.get_or_init(|| {
        let spec = SynthSpec::new(2_000, 8, 13, Distribution::GaussianClusters);
        let ds = Arc::new(spec.generate::<f32>().unwrap());
        let cfg = GraphConfig { m: 10, ef_construction: 60, ..Default::default() };
        (GraphIndex32::build(ds, cfg).unwrap(), spec)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interval_bounds(p in 0.0f64..=1.0, r_t in 0.01f64..=1.0, base in 1usize..200) {
        let i = adaptive_interval(p, r_t, base);
        prop_assert!((1..=base).contains(&i));
        if p >= r_t {
            prop_assert_eq!(i, 1);
        }
        // Lower predictions never shorten the stride.
        prop_assert!(adaptive_interval(p * 0.5, r_t, base) >= i);
    }

    #[test]
    fn finalized_table_invariants(
        obs in prop::collection::vec((0usize..=6, prop::collection::vec(any::<bool>(), 6), 1u64..5), 1..60)
    ) {
        let mut t = ProbTable::new(6, 6).unwrap();
        for (n, present, w) in &obs {
            t.observe(*n, present, *w);
        }
        t.finalize();
        for r in 1..=6 {
            let mut prev = 0.0;
            for n in 0..=6 {
                let p = t.get(n, r).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                if r <= n {
                    prop_assert_eq!(p, 1.0);
                }
                prop_assert!(p + 1e-12 >= prev);
                prev = p;
            }
        }
        let f = Forecaster::new(t);
        for k in 1..=9 {
            let at_k = forecast_recall(&f, k, k, 0.9, 0.5);
            prop_assert!(at_k >= 0.9);
            for n in 0..k {
                let v = forecast_recall(&f, n, k, 0.9, 0.5);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn isotonic_is_monotone_and_mean_preserving(
        v in prop::collection::vec((0.0f64..1.0, 0.1f64..5.0), 1..40)
    ) {
        let (vals, ws): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let out = isotonic_nondecreasing(&vals, &ws);
        prop_assert!(out.windows(2).all(|p| p[0] <= p[1] + 1e-12));
        let before: f64 = vals.iter().zip(&ws).map(|(a, b)| a * b).sum();
        let after: f64 = out.iter().zip(&ws).map(|(a, b)| a * b).sum();
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn predictions_are_probabilities(
        leaves in prop::collection::vec((0u32..11, -5.0f64..5.0, -3.0f64..3.0, -3.0f64..3.0), 0..30),
        x in prop::collection::vec(-10.0f64..10.0, 11),
    ) {
        let mut m = GbdtModel::constant(0.3, 0.1);
        for (f, thr, l, r) in leaves {
            m.push_tree(Tree::stump(f, thr, l, r)).unwrap();
        }
        let p = m.predict(&x).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
        // Adding a tree with nonnegative leaves never lowers the prediction.
        let mut up = m.clone();
        up.push_tree(Tree::stump(0, 0.0, 0.5, 1.5)).unwrap();
        prop_assert!(up.predict(&x).unwrap() >= p);
    }

    #[test]
    fn search_monotonicity(qi in 0u64..1_000, steps in 1usize..120) {
        let (index, spec) = small_index();
        let q = spec.queries::<f32>(1, qi + 10).unwrap().remove(0);
        let mut st = index.init_search(&q).unwrap();
        let mut prev: BTreeSet<u32> = st.ranked().map(|n| n.id).collect();
        let mut best = st.ranked().next().unwrap().dist;
        for _ in 0..steps {
            index.search_one_step(&q, &mut st);
            let now: BTreeSet<u32> = st.ranked().map(|n| n.id).collect();
            prop_assert!(prev.is_subset(&now));
            let b = st.ranked().next().unwrap().dist;
            prop_assert!(b <= best);
            prop_assert_eq!(st.cmps(), st.trajectory().len());
            prev = now;
            best = b;
        }
    }

    #[test]
    fn oracle_search_matches_brute_force(qi in 0u64..1_000, k in 1usize..25) {
        let (index, spec) = small_index();
        let q = spec.queries::<f32>(1, qi + 5_000).unwrap().remove(0);
        let exact = brute_force_topk(index.dataset(), &q, 60).unwrap();
        let ids: Vec<u32> = exact.iter().map(|n| n.id).collect();
        let out = basic_search(index, &OracleStop::new(ids.clone()), &q, k, &OmegaParams::algorithm1(1.0)).unwrap();
        prop_assert_eq!(&out.ids[..], &ids[..k]);
    }
}

#[test]
fn effort_grows_with_k() {
    let (index, spec) = small_index();
    let qs = spec.queries::<f32>(30, 77).unwrap();
    let mean_cmps = |k: usize| {
        qs.iter()
            .map(|q| {
                let exact = brute_force_topk(index.dataset(), q, 80).unwrap();
                let o = OracleStop::new(exact.iter().map(|n| n.id).collect());
                basic_search(index, &o, q, k, &OmegaParams::algorithm1(1.0)).unwrap().metrics.cmps as f64
            })
            .sum::<f64>()
            / qs.len() as f64
    };
    let c: Vec<f64> = [1, 5, 20, 50].iter().map(|&k| mean_cmps(k)).collect();
    assert!(c.windows(2).all(|w| w[0] <= w[1]), "{c:?}");
}

#[test]
fn threshold_task_holdout_accuracy() {
    let n = 10_000;
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect();
    let y: Vec<bool> = x.iter().map(|r| r[0] > 0.5).collect();
    let (m, rep) = train_dense(&x, &y, vec!["x".into()], &TrainConfig::default()).unwrap();
    assert!(rep.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let correct = (0..2_000)
        .filter(|i| {
            let v = (*i as f64 + 0.25) / 2_000.0;
            (m.predict(&[v]).unwrap() > 0.5) == (v > 0.5)
        })
        .count();
    assert!(correct as f64 / 2_000.0 >= 0.99);
}
