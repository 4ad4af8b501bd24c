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

//! Offline preparation: ground truth, training records, the stop model, the
//! probability table and its decay fits.

mod decay;
mod records;
mod table;

pub use decay::{fit_decay, DecayFit, Forecaster};
pub use records::{generate_training_records, replay_query, RecordConfig};
pub use table::{build_prob_table, isotonic_nondecreasing, ProbTable, TABLE_MAGIC, TABLE_VERSION};

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gbdt::{train_with_report, GbdtModel, TrainConfig, TrainReport};
use crate::graph::{GraphConfig, GraphIndex};
use crate::scalar::Scalar;
use crate::vectorstore::{brute_force_ground_truth, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub records: RecordConfig,
    pub num_training_queries: usize,
    pub n_max: usize,
    pub r_max: usize,
    /// Bound on steps per profiling replay.
    pub table_step_cap: usize,
    /// Chooses which queries are used when more than needed are supplied.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            graph: GraphConfig::default(),
            train: TrainConfig::default(),
            records: RecordConfig::default(),
            num_training_queries: 4_000,
            n_max: 200,
            r_max: 200,
            table_step_cap: usize::MAX,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineReport {
    pub training_queries: usize,
    pub records: usize,
    pub positive_records: usize,
    pub window: usize,
    pub train: TrainReport,
    pub table_raw_violation: f64,
    pub build_time: Duration,
    pub ground_truth_time: Duration,
    pub records_time: Duration,
    pub train_time: Duration,
    pub table_time: Duration,
    pub total_time: Duration,
}

impl PipelineReport {
    /// `key,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k},{v}");
        };
        kv("training_queries", self.training_queries.to_string());
        kv("records", self.records.to_string());
        kv("positive_records", self.positive_records.to_string());
        kv("window", self.window.to_string());
        kv("train_size", self.train.train_size.to_string());
        kv("valid_size", self.train.valid_size.to_string());
        kv("rounds_run", self.train.rounds_run.to_string());
        kv("stopping_round", self.train.best_round.to_string());
        kv("stopped_early", self.train.stopped_early.to_string());
        kv(
            "validation_loss",
            self.train.best_valid_loss().map_or("nan".into(), |v| v.to_string()),
        );
        kv("table_raw_violation", self.table_raw_violation.to_string());
        for (k, d) in [
            ("build_secs", self.build_time),
            ("ground_truth_secs", self.ground_truth_time),
            ("records_secs", self.records_time),
            ("train_secs", self.train_time),
            ("table_secs", self.table_time),
            ("total_secs", self.total_time),
        ] {
            kv(k, format!("{:.3}", d.as_secs_f64()));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput<T> {
    pub index: GraphIndex<T>,
    pub model: GbdtModel,
    pub forecaster: Forecaster,
    pub report: PipelineReport,
}

/// Builds the index, then runs [`run_pipeline_on`].
pub fn run_pipeline<T: Scalar>(
    dataset: Arc<Dataset<T>>,
    queries: &[Vec<T>],
    config: &PipelineConfig,
) -> Result<PipelineOutput<T>> {
    let t0 = Instant::now();
    let index = GraphIndex::build(dataset, config.graph)?;
    let build_time = t0.elapsed();
    info!("index built in {:.2}s", build_time.as_secs_f64());
    let mut out = run_pipeline_on(index, queries, config)?;
    out.report.build_time = build_time;
    out.report.total_time += build_time;
    Ok(out)
}

/// Ground truth, records, model, table and fits for an existing index.
pub fn run_pipeline_on<T: Scalar>(
    index: GraphIndex<T>,
    queries: &[Vec<T>],
    config: &PipelineConfig,
) -> Result<PipelineOutput<T>> {
    let start = Instant::now();
    if config.num_training_queries == 0 {
        return Err(Error::InvalidParameter("num_training_queries must be >= 1".into()));
    }
    if queries.len() < config.num_training_queries {
        return Err(Error::InvalidParameter(format!(
            "{} training queries requested but only {} supplied",
            config.num_training_queries,
            queries.len()
        )));
    }
    let mut order: Vec<usize> = (0..queries.len()).collect();
    if queries.len() > config.num_training_queries {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
        order.truncate(config.num_training_queries);
    }
    let selected: Vec<Vec<T>> = order.iter().map(|&i| queries[i].clone()).collect();
    let mut report = PipelineReport {
        training_queries: selected.len(),
        window: config.records.window,
        ..Default::default()
    };

    let t = Instant::now();
    let depth = config.r_max.max(1).min(index.len());
    let gt = brute_force_ground_truth(index.dataset(), &selected, depth)?;
    report.ground_truth_time = t.elapsed();

    let t = Instant::now();
    let records = generate_training_records(&index, &selected, &gt, &config.records)?;
    report.records = records.len();
    report.positive_records = records.iter().filter(|r| r.label).count();
    report.records_time = t.elapsed();

    let t = Instant::now();
    let (model, train_report) = train_with_report(&records, &config.train)?;
    report.train = train_report;
    report.train_time = t.elapsed();
    info!(
        "model trained on {} records ({} positive), kept {} of {} rounds",
        report.records, report.positive_records, report.train.best_round, report.train.rounds_run
    );

    let t = Instant::now();
    let table = build_prob_table(
        &index,
        &selected,
        &gt,
        config.n_max.min(depth),
        config.r_max.min(depth),
        config.table_step_cap,
    )?;
    report.table_raw_violation = table.raw_violation();
    let forecaster = Forecaster::new(table);
    report.table_time = t.elapsed();
    report.total_time = start.elapsed();
    info!(
        "ground truth took {:.1}% of training time",
        100.0 * report.ground_truth_time.as_secs_f64() / report.train_time.as_secs_f64().max(1e-9)
    );

    Ok(PipelineOutput {
        index,
        model,
        forecaster,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorstore::{Distribution, SynthSpec};

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            graph: GraphConfig { m: 8, ef_construction: 40, ..Default::default() },
            records: RecordConfig { checkpoint_interval: 5, ..Default::default() },
            num_training_queries: 150,
            n_max: 20,
            r_max: 20,
            ..Default::default()
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let spec = SynthSpec::new(1_500, 8, 2, Distribution::GaussianClusters);
        let ds = Arc::new(spec.generate::<f32>().unwrap());
        let qs = spec.queries(200, 0).unwrap();
        let a = run_pipeline(ds.clone(), &qs, &small_config()).unwrap();
        let b = run_pipeline(ds, &qs, &small_config()).unwrap();
        assert_eq!(a.model.to_bytes(), b.model.to_bytes());
        assert_eq!(a.forecaster.table().to_bytes(), b.forecaster.table().to_bytes());
        assert!(a.report.records >= 150);
        assert!(a.report.positive_records > 0 && a.report.positive_records < a.report.records);
        assert!(a.report.to_csv().contains("stopping_round,"));
    }

    #[test]
    fn too_few_queries() {
        let spec = SynthSpec::new(100, 4, 2, Distribution::Uniform);
        let ds = Arc::new(spec.generate::<f32>().unwrap());
        let qs = spec.queries(10, 0).unwrap();
        assert!(run_pipeline(ds, &qs, &small_config()).is_err());
    }
}
