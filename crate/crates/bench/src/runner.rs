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

//! Trace replay against one search method.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use omega_core::omega::SearchMetrics;
use omega_core::vectorstore::recall_at_k;
use omega_core::{
    basic_search, optimized_search, Forecaster, GbdtModel, GraphIndex, GroundTruth, OmegaParams,
    Scalar, StopModel,
};
use rayon::prelude::*;

use crate::report::{QueryRow, RunReport};
use crate::trace::QueryTrace;
use crate::{BenchError, FITS_FILE, MODEL_FILE, TABLE_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classic search with `ef = ceil(c * K)`.
    Fixed,
    OmegaBasic,
    OmegaOpt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fixed => "fixed",
            Method::OmegaBasic => "omega-basic",
            Method::OmegaOpt => "omega-opt",
        })
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(Method::Fixed),
            "omega-basic" => Ok(Method::OmegaBasic),
            "omega-opt" => Ok(Method::OmegaOpt),
            other => Err(BenchError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub params: OmegaParams,
    pub fixed_c: f64,
    /// 0 uses the global rayon pool.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::OmegaOpt,
            params: OmegaParams::default(),
            fixed_c: 4.0,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn fixed_ef(&self, k: usize) -> usize {
        ((self.fixed_c * k as f64).ceil() as usize).max(k)
    }

    fn meta(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut m = vec![("param.method".to_string(), self.method.to_string())];
        let mut put = |k: &str, v: String| m.push((format!("param.{k}"), v));
        match self.method {
            Method::Fixed => put("fixed_c", self.fixed_c.to_string()),
            _ => {
                put("r_t", p.r_t.to_string());
                put("alpha", p.alpha.to_string());
                put("w", p.w.to_string());
                put("base_interval", p.base_interval.to_string());
                put("adaptive", p.adaptive.to_string());
                put("forecast", (p.forecast && self.method == Method::OmegaOpt).to_string());
                put("step_cap", p.step_cap.map_or("none".into(), |c| c.to_string()));
            }
        }
        put("workers", self.workers.to_string());
        m
    }
}

/// Trained stop model plus the forecast table.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub model: GbdtModel,
    pub forecaster: Forecaster,
}

impl Artifacts {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, BenchError> {
        let dir = dir.as_ref();
        for f in [MODEL_FILE, TABLE_FILE, FITS_FILE] {
            if !dir.join(f).is_file() {
                return Err(BenchError::MissingArtifacts(format!("{} not found", dir.join(f).display())));
            }
        }
        Ok(Self {
            model: GbdtModel::load(dir.join(MODEL_FILE))?,
            forecaster: Forecaster::load(dir.join(TABLE_FILE), dir.join(FITS_FILE))?,
        })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), BenchError> {
        let dir = dir.as_ref();
        self.model.save(dir.join(MODEL_FILE))?;
        self.forecaster.save(dir.join(TABLE_FILE), dir.join(FITS_FILE))?;
        Ok(())
    }
}

/// Replays `trace` with the trained artifacts (ignored by `fixed`).
pub fn replay<T: Scalar>(
    index: &GraphIndex<T>,
    queries: &[Vec<T>],
    truth: &GroundTruth<T>,
    trace: &QueryTrace,
    artifacts: Option<&Artifacts>,
    cfg: &RunConfig,
) -> Result<RunReport, BenchError> {
    match (cfg.method, artifacts) {
        (Method::Fixed, _) => replay_with::<T, GbdtModel>(index, queries, truth, trace, None, None, cfg),
        (_, Some(a)) => replay_with(index, queries, truth, trace, Some(&a.model), Some(&a.forecaster), cfg),
        (m, None) => Err(BenchError::MissingArtifacts(format!("method {m} needs a model and table"))),
    }
}

/// Replays `trace` with any stop model.
pub fn replay_with<T: Scalar, M: StopModel<T> + Sync>(
    index: &GraphIndex<T>,
    queries: &[Vec<T>],
    truth: &GroundTruth<T>,
    trace: &QueryTrace,
    model: Option<&M>,
    forecaster: Option<&Forecaster>,
    cfg: &RunConfig,
) -> Result<RunReport, BenchError> {
    trace.check_ids(queries.len())?;
    if truth.len() < queries.len() {
        return Err(BenchError::Mismatch(format!(
            "ground truth covers {} of {} queries",
            truth.len(),
            queries.len()
        )));
    }
    if truth.depth() < trace.max_k() {
        return Err(BenchError::Mismatch(format!(
            "ground truth depth {} is below the largest K {}",
            truth.depth(),
            trace.max_k()
        )));
    }
    cfg.params.validate()?;
    if cfg.fixed_c.is_nan() || cfg.fixed_c <= 0.0 {
        return Err(BenchError::Config("fixed_c must be > 0".into()));
    }
    let one = |i: usize| -> Result<QueryRow, BenchError> {
        let e = trace.entries[i];
        let q = &queries[e.query_id];
        let start = Instant::now();
        let (ids, m) = match cfg.method {
            Method::Fixed => {
                let out = index.fixed_search(q, e.k, cfg.fixed_ef(e.k))?;
                let m = SearchMetrics {
                    steps: out.steps,
                    cmps: out.cmps,
                    ..Default::default()
                };
                (out.ids, m)
            }
            method => {
                let model = model.ok_or_else(|| BenchError::MissingArtifacts("no stop model".into()))?;
                let out = match (method, forecaster) {
                    (Method::OmegaOpt, Some(f)) => optimized_search(index, model, f, q, e.k, &cfg.params)?,
                    (Method::OmegaOpt, None) => {
                        return Err(BenchError::MissingArtifacts("omega-opt needs a table".into()))
                    }
                    _ => basic_search(index, model, q, e.k, &cfg.params)?,
                };
                (out.ids, out.metrics)
            }
        };
        let wall = start.elapsed();
        let gt = truth.ids(e.query_id).expect("checked above");
        let got: HashSet<u32> = ids.iter().copied().collect();
        Ok(QueryRow {
            query_id: e.query_id,
            k: e.k,
            recall: recall_at_k(&gt, &ids, e.k),
            steps: m.steps,
            cmps: m.cmps,
            model_invocations: m.model_invocations,
            forecast_stop: m.forecast_stop as u8,
            ranks_confirmed: m.ranks_confirmed,
            prefix_found: gt.iter().take(e.k).take_while(|id| got.contains(id)).count(),
            wall_us: wall.as_secs_f64() * 1e6,
        })
    };
    let started = Instant::now();
    let run = || (0..trace.len()).into_par_iter().map(one).collect::<Result<Vec<_>, _>>();
    let rows = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?
            .install(run)?
    } else {
        run()?
    };
    let mut meta = cfg.meta();
    meta.push(("replay_wall_secs".into(), format!("{:.3}", started.elapsed().as_secs_f64())));
    Ok(RunReport {
        method: cfg.method.to_string(),
        target: cfg.params.r_t,
        rows,
        meta,
    })
}
