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

//! Per-query rows and the aggregates derived from them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use omega_core::trajectory::percentile_sorted;
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// One replayed query. `forecast_stop` is 0 or 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub query_id: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub recall: f64,
    pub steps: usize,
    pub cmps: usize,
    pub model_invocations: usize,
    pub forecast_stop: u8,
    /// Ranks the stop model confirmed.
    pub ranks_confirmed: usize,
    /// Longest prefix of true ranks present in the result.
    pub prefix_found: usize,
    pub wall_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        v.sort_by(f64::total_cmp);
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p50: percentile_sorted(&v, 0.5),
            p90: percentile_sorted(&v, 0.9),
            p99: percentile_sorted(&v, 0.99),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub count: usize,
    pub recall: Stat,
    pub cmps: Stat,
    pub steps: Stat,
    pub model_invocations: Stat,
    pub wall_us: Stat,
    /// Share of queries with recall at or above the target.
    pub frac_at_target: f64,
    pub forecast_stops: usize,
    /// Forecast stops where the confirmed-rank count differs from the true
    /// prefix found.
    pub prefix_divergence: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub method: String,
    pub target: f64,
    pub rows: Vec<QueryRow>,
    /// Extra `key,value` pairs copied into the summary (parameters, timings).
    pub meta: Vec<(String, String)>,
}

impl RunReport {
    pub fn summary(&self) -> Summary {
        summarize(&self.rows, self.target)
    }

    pub fn rows_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let body = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
        Ok(format!("{ROW_HEADER}\n{}", String::from_utf8_lossy(&body)))
    }

    /// `metric,value` lines.
    pub fn summary_csv(&self) -> String {
        let s = self.summary();
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "method,{}", self.method);
        let _ = writeln!(out, "target,{}", self.target);
        let _ = writeln!(out, "count,{}", s.count);
        for (name, st) in [
            ("recall", s.recall),
            ("cmps", s.cmps),
            ("steps", s.steps),
            ("model_invocations", s.model_invocations),
            ("wall_us", s.wall_us),
        ] {
            let _ = writeln!(out, "{name}_mean,{}", st.mean);
            let _ = writeln!(out, "{name}_p50,{}", st.p50);
            let _ = writeln!(out, "{name}_p90,{}", st.p90);
            let _ = writeln!(out, "{name}_p99,{}", st.p99);
        }
        let _ = writeln!(out, "frac_recall_at_target,{}", s.frac_at_target);
        let _ = writeln!(out, "forecast_stops,{}", s.forecast_stops);
        let _ = writeln!(out, "prefix_divergence,{}", s.prefix_divergence);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn save(&self, rows_path: impl AsRef<Path>, summary_path: impl AsRef<Path>) -> Result<(), BenchError> {
        fs::write(rows_path, self.rows_csv()?)?;
        fs::write(summary_path, self.summary_csv())?;
        Ok(())
    }

    pub fn load_rows(path: impl AsRef<Path>) -> Result<Vec<QueryRow>, BenchError> {
        parse_rows(&fs::read_to_string(path)?)
    }

    /// Rows with the given K.
    pub fn slice_k(&self, k: usize) -> Vec<QueryRow> {
        self.rows.iter().filter(|r| r.k == k).cloned().collect()
    }
}

pub const ROW_HEADER: &str =
    "query_id,K,recall,steps,cmps,model_invocations,forecast_stop,ranks_confirmed,prefix_found,wall_us";

pub fn parse_rows(text: &str) -> Result<Vec<QueryRow>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<Result<Vec<QueryRow>, _>>()?;
    Ok(rows)
}

pub fn summarize(rows: &[QueryRow], target: f64) -> Summary {
    let f = |g: fn(&QueryRow) -> f64| Stat::of(rows.iter().map(g));
    let n = rows.len();
    Summary {
        count: n,
        recall: f(|r| r.recall),
        cmps: f(|r| r.cmps as f64),
        steps: f(|r| r.steps as f64),
        model_invocations: f(|r| r.model_invocations as f64),
        wall_us: f(|r| r.wall_us),
        frac_at_target: if n == 0 {
            0.0
        } else {
            rows.iter().filter(|r| r.recall >= target - 1e-12).count() as f64 / n as f64
        },
        forecast_stops: rows.iter().filter(|r| r.forecast_stop != 0).count(),
        prefix_divergence: rows
            .iter()
            .filter(|r| r.forecast_stop != 0 && r.ranks_confirmed != r.prefix_found)
            .count(),
    }
}
