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

//! Experiment harness: trace replay, baselines, paired comparison and CSV
//! metrics on top of `omega-core`.

pub mod compare;
pub mod config;
pub mod report;
pub mod runner;
pub mod trace;

pub const MODEL_FILE: &str = "model.omgb";
pub const TABLE_FILE: &str = "table.omgt";
pub const FITS_FILE: &str = "fits.csv";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] omega_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error("unknown method {0:?} (expected fixed, omega-basic or omega-opt)")]
    UnknownMethod(String),
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
}
