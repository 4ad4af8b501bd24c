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

//! Top-K search as K successive top-1 refinements, with optional
//! table-driven early exit.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gbdt::GbdtModel;
use crate::graph::{GraphIndex, SearchState};
use crate::preprocess::Forecaster;
use crate::scalar::Scalar;
use crate::trajectory::{mask_top, FeatureVector};

/// Probability that the best unmasked candidate is the top-1 of the masked
/// instance.
pub trait StopModel<T> {
    fn predict_top1(&self, features: &FeatureVector, state: &SearchState<T>) -> Result<f64>;
}

impl<T: Scalar> StopModel<T> for GbdtModel {
    fn predict_top1(&self, features: &FeatureVector, _state: &SearchState<T>) -> Result<f64> {
        self.predict_features(features)
    }
}

/// Perfect predictor built from exact ground truth. Answers 1 iff the best
/// unmasked candidate is the nearest id outside the mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleStop {
    truth: Vec<u32>,
}

impl OracleStop {
    /// `truth` is the exact ranking, nearest first. It should be deeper
    /// than the largest K searched.
    pub fn new(truth: Vec<u32>) -> Self {
        Self { truth }
    }
}

impl<T: Scalar> StopModel<T> for OracleStop {
    fn predict_top1(&self, _features: &FeatureVector, state: &SearchState<T>) -> Result<f64> {
        let masked = state.masked();
        let Some(target) = self.truth.iter().find(|id| !masked.contains(id)) else {
            return Ok(1.0);
        };
        let best = state.best_unmasked(masked).map(|n| n.id);
        Ok(if best == Some(*target) { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaParams {
    pub r_t: f64,
    pub alpha: f64,
    pub w: usize,
    pub base_interval: usize,
    pub adaptive: bool,
    pub forecast: bool,
    /// `None` searches until the stop rule fires or the graph is exhausted.
    pub step_cap: Option<usize>,
}

impl Default for OmegaParams {
    fn default() -> Self {
        Self {
            r_t: 0.95,
            alpha: 0.95,
            w: 100,
            base_interval: 50,
            adaptive: true,
            forecast: true,
            step_cap: None,
        }
    }
}

impl OmegaParams {
    /// One model call per step, no forecast.
    pub fn algorithm1(r_t: f64) -> Self {
        Self {
            r_t,
            base_interval: 1,
            adaptive: false,
            forecast: false,
            ..Default::default()
        }
    }

    pub fn with_target(mut self, r_t: f64) -> Self {
        self.r_t = r_t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r_t) {
            return Err(Error::InvalidParameter(format!("r_t must be in [0, 1], got {}", self.r_t)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.w == 0 || self.base_interval == 0 {
            return Err(Error::InvalidParameter("w and base_interval must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchMetrics {
    pub steps: usize,
    pub cmps: usize,
    pub model_invocations: usize,
    pub forecast_stop: bool,
    /// Ranks decided by the model before the search ended.
    pub ranks_confirmed: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub ids: Vec<u32>,
    pub metrics: SearchMetrics,
}

/// Steps until the next model call: the full `base_interval` when the
/// prediction is 0, shrinking linearly to 1 as it approaches `r_t`.
pub fn adaptive_interval(predicted: f64, r_t: f64, base_interval: usize) -> usize {
    let base = base_interval.max(1);
    if predicted >= r_t || r_t <= 0.0 {
        return 1;
    }
    let gap = ((r_t - predicted.max(0.0)) / r_t).min(1.0);
    ((base as f64 * gap).ceil() as usize).clamp(1, base)
}

/// `(N (r_t + alpha (1 - r_t)) + sum_{r=N+1..K} T(N, r)) / K`.
pub fn forecast_recall(forecaster: &Forecaster, n: usize, k: usize, r_t: f64, alpha: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let found = n.min(k) as f64 * (r_t + alpha * (1.0 - r_t));
    let rest: f64 = (n + 1..=k).map(|r| forecaster.prob(n, r)).sum();
    (found + rest) / k as f64
}

/// Rank-by-rank search driven by `model` alone. Honors `adaptive`,
/// `base_interval` and `step_cap`; `forecast` is ignored.
pub fn basic_search<T: Scalar, M: StopModel<T> + ?Sized>(
    index: &GraphIndex<T>,
    model: &M,
    query: &[T],
    k: usize,
    params: &OmegaParams,
) -> Result<SearchOutcome> {
    run(index, model, None, query, k, params)
}

/// [`basic_search`] plus the forecast exit before each rank when
/// `params.forecast` is set.
pub fn optimized_search<T: Scalar, M: StopModel<T> + ?Sized>(
    index: &GraphIndex<T>,
    model: &M,
    forecaster: &Forecaster,
    query: &[T],
    k: usize,
    params: &OmegaParams,
) -> Result<SearchOutcome> {
    let f = params.forecast.then_some(forecaster);
    run(index, model, f, query, k, params)
}

fn run<T: Scalar, M: StopModel<T> + ?Sized>(
    index: &GraphIndex<T>,
    model: &M,
    forecaster: Option<&Forecaster>,
    query: &[T],
    k: usize,
    params: &OmegaParams,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    params.validate()?;
    let cap = params.step_cap.unwrap_or(usize::MAX);
    let mut st = index.init_search_with_window(query, params.w)?;
    let mut m = SearchMetrics::default();
    let mut n = 0;
    while n < k {
        if let Some(f) = forecaster {
            if st.search_set_len() >= k && forecast_recall(f, n, k, params.r_t, params.alpha) >= params.r_t {
                m.forecast_stop = true;
                break;
            }
        }
        mask_top(&mut st, n);
        let mut decided = false;
        loop {
            let p = model.predict_top1(&st.features(params.w)?, &st)?;
            m.model_invocations += 1;
            if p >= params.r_t {
                decided = true;
                break;
            }
            if st.is_exhausted() || st.steps_taken() >= cap {
                break;
            }
            let stride = if params.adaptive {
                adaptive_interval(p, params.r_t, params.base_interval)
            } else {
                params.base_interval
            };
            let budget = stride.min(cap - st.steps_taken());
            index.search_multiple_steps(query, &mut st, budget);
        }
        if !decided {
            break;
        }
        n += 1;
    }
    m.ranks_confirmed = n;
    m.steps = st.steps_taken();
    m.cmps = st.cmps();
    let ids = st.current_topk(k, &Default::default());
    m.wall_time = start.elapsed();
    Ok(SearchOutcome { ids, metrics: m })
}
