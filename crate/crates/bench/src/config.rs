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

//! Declarative run configuration. Every field is optional in the file;
//! missing fields take the library defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use omega_core::preprocess::RecordConfig;
use omega_core::{GraphConfig, OmegaParams, PipelineConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
    pub level_mult: Option<f64>,
}

impl Default for GraphSection {
    fn default() -> Self {
        let g = GraphConfig::default();
        Self {
            m: g.m,
            ef_construction: g.ef_construction,
            seed: g.seed,
            level_mult: g.level_mult,
        }
    }
}

impl GraphSection {
    pub fn to_core(&self) -> GraphConfig {
        GraphConfig {
            m: self.m,
            ef_construction: self.ef_construction,
            seed: self.seed,
            level_mult: self.level_mult,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub num_training_queries: usize,
    pub checkpoint_interval: usize,
    pub replay_multiplier: usize,
    pub min_replay_steps: usize,
    pub window: usize,
    pub n_max: usize,
    pub r_max: usize,
    pub table_step_cap: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            num_training_queries: p.num_training_queries,
            checkpoint_interval: p.records.checkpoint_interval,
            replay_multiplier: p.records.replay_multiplier,
            min_replay_steps: p.records.min_replay_steps,
            window: p.records.window,
            n_max: p.n_max,
            r_max: p.r_max,
            table_step_cap: None,
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub max_rounds: usize,
    pub max_leaves: usize,
    pub min_samples_per_leaf: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub early_stop_patience: usize,
    pub early_stop_tolerance: f64,
    pub seed: u64,
    pub l2_reg: f64,
    pub max_bins: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            max_rounds: t.max_rounds,
            max_leaves: t.max_leaves,
            min_samples_per_leaf: t.min_samples_per_leaf,
            learning_rate: t.learning_rate,
            validation_fraction: t.validation_fraction,
            early_stop_patience: t.early_stop_patience,
            early_stop_tolerance: t.early_stop_tolerance,
            seed: t.seed,
            l2_reg: t.l2_reg,
            max_bins: t.max_bins,
        }
    }
}

impl TrainSection {
    pub fn to_core(&self) -> TrainConfig {
        TrainConfig {
            max_rounds: self.max_rounds,
            max_leaves: self.max_leaves,
            min_samples_per_leaf: self.min_samples_per_leaf,
            learning_rate: self.learning_rate,
            validation_fraction: self.validation_fraction,
            early_stop_patience: self.early_stop_patience,
            early_stop_tolerance: self.early_stop_tolerance,
            seed: self.seed,
            l2_reg: self.l2_reg,
            max_bins: self.max_bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub r_t: f64,
    pub alpha: f64,
    pub w: usize,
    pub base_interval: usize,
    pub adaptive: bool,
    pub forecast: bool,
    pub step_cap: Option<usize>,
    pub fixed_c: f64,
    pub workers: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        let p = OmegaParams::default();
        Self {
            r_t: p.r_t,
            alpha: p.alpha,
            w: p.w,
            base_interval: p.base_interval,
            adaptive: p.adaptive,
            forecast: p.forecast,
            step_cap: p.step_cap,
            fixed_c: 4.0,
            workers: 0,
        }
    }
}

impl SearchSection {
    pub fn params(&self) -> OmegaParams {
        OmegaParams {
            r_t: self.r_t,
            alpha: self.alpha,
            w: self.w,
            base_interval: self.base_interval,
            adaptive: self.adaptive,
            forecast: self.forecast,
            step_cap: self.step_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub graph: GraphSection,
    pub pipeline: PipelineSection,
    pub train: TrainSection,
    pub search: SearchSection,
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Defaults when `path` is `None`.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, BenchError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        let p = &self.pipeline;
        PipelineConfig {
            graph: self.graph.to_core(),
            train: self.train.to_core(),
            records: RecordConfig {
                checkpoint_interval: p.checkpoint_interval,
                replay_multiplier: p.replay_multiplier,
                min_replay_steps: p.min_replay_steps,
                window: p.window,
            },
            num_training_queries: p.num_training_queries,
            n_max: p.n_max,
            r_max: p.r_max,
            table_step_cap: p.table_step_cap.unwrap_or(usize::MAX),
            seed: p.seed,
        }
    }

    /// Flattened `section.key,value` pairs for reports.
    pub fn flat_pairs(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).expect("config is always serializable");
        let mut out = Vec::new();
        if let toml::Value::Table(sections) = value {
            for (s, body) in sections {
                if let toml::Value::Table(fields) = body {
                    for (k, v) in fields {
                        let mut text = String::new();
                        let _ = write!(text, "{v}");
                        out.push((format!("config.{s}.{k}"), text));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(BenchConfig::parse("").unwrap(), BenchConfig::default());
        assert_eq!(BenchConfig::default().pipeline_config(), PipelineConfig::default());
        assert_eq!(BenchConfig::default().search.params(), OmegaParams::default());
    }

    #[test]
    fn partial_override() {
        let c = BenchConfig::parse("[graph]\nm = 8\n[search]\nr_t = 0.9\nadaptive = false\n").unwrap();
        assert_eq!(c.graph.m, 8);
        assert_eq!(c.graph.ef_construction, 200);
        assert_eq!(c.search.params().r_t, 0.9);
        assert!(!c.search.params().adaptive);
        assert_eq!(BenchConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(BenchConfig::parse("[graph]\nmm = 8\n").is_err());
        assert!(BenchConfig::parse("[nope]\n").is_err());
    }

    #[test]
    fn flat_pairs_cover_sections() {
        let pairs = BenchConfig::default().flat_pairs();
        assert!(pairs.iter().any(|(k, v)| k == "config.search.alpha" && v == "0.95"));
        assert!(pairs.iter().any(|(k, _)| k == "config.graph.m"));
    }
}
