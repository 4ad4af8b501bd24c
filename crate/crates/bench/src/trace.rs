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

//! Query traces: which stored query is asked, with which K.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub query_id: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryTrace {
    pub entries: Vec<TraceEntry>,
}

impl QueryTrace {
    /// Parses `query_id,K` lines. A first line that does not start with a
    /// digit is taken as a header; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 && !line.starts_with(|c: char| c.is_ascii_digit()) {
                continue;
            }
            let bad = || BenchError::Trace(format!("line {}: expected `query_id,K`, got {raw:?}", lineno + 1));
            let (q, k) = line.split_once(',').ok_or_else(bad)?;
            let query_id: usize = q.trim().parse().map_err(|_| bad())?;
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            if k == 0 {
                return Err(BenchError::Trace(format!("line {}: K must be >= 1", lineno + 1)));
            }
            entries.push(TraceEntry { query_id, k });
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("query_id,K\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{}", e.query_id, e.k);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BenchError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_k(&self) -> usize {
        self.entries.iter().map(|e| e.k).max().unwrap_or(0)
    }

    /// Fails on ids outside `0..num_queries`.
    pub fn check_ids(&self, num_queries: usize) -> Result<(), BenchError> {
        match self.entries.iter().find(|e| e.query_id >= num_queries) {
            Some(e) => Err(BenchError::Trace(format!(
                "query id {} out of range ({num_queries} queries)",
                e.query_id
            ))),
            None => Ok(()),
        }
    }

    /// Entries with the given K.
    pub fn slice_k(&self, k: usize) -> Self {
        Self {
            entries: self.entries.iter().copied().filter(|e| e.k == k).collect(),
        }
    }
}

/// Explicit K weights, parsed from `K:weight` pairs separated by commas.
#[derive(Debug, Clone, PartialEq)]
pub struct KMix {
    pub weights: Vec<(usize, f64)>,
}

impl KMix {
    pub fn uniform(ks: &[usize]) -> Self {
        Self {
            weights: ks.iter().map(|&k| (k, 1.0)).collect(),
        }
    }
}

impl std::str::FromStr for KMix {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut weights = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || BenchError::Trace(format!("bad K weight {part:?}, expected K:weight"));
            let (k, w) = part.split_once(':').ok_or_else(bad)?;
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            let w: f64 = w.trim().parse().map_err(|_| bad())?;
            if k == 0 || !w.is_finite() || w < 0.0 {
                return Err(bad());
            }
            weights.push((k, w));
        }
        if weights.is_empty() || weights.iter().all(|&(_, w)| w == 0.0) {
            return Err(BenchError::Trace("K mix needs a positive weight".into()));
        }
        Ok(Self { weights })
    }
}

/// `count` entries whose query ids cycle through `0..num_queries` from a
/// seeded offset, each with K drawn from `mix`.
pub fn synth_trace(num_queries: usize, count: usize, mix: &KMix, seed: u64) -> Result<QueryTrace, BenchError> {
    if num_queries == 0 && count > 0 {
        return Err(BenchError::Trace("no queries to draw from".into()));
    }
    let dist = WeightedIndex::new(mix.weights.iter().map(|&(_, w)| w))
        .map_err(|e| BenchError::Trace(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = if num_queries > 0 { rng.gen_range(0..num_queries) } else { 0 };
    let entries = (0..count)
        .map(|i| TraceEntry {
            query_id: (offset + i) % num_queries,
            k: mix.weights[dist.sample(&mut rng)].0,
        })
        .collect();
    Ok(QueryTrace { entries })
}

/// Every query once per listed K, grouped by K.
pub fn sweep_trace(num_queries: usize, ks: &[usize]) -> QueryTrace {
    QueryTrace {
        entries: ks
            .iter()
            .flat_map(|&k| (0..num_queries).map(move |query_id| TraceEntry { query_id, k }))
            .collect(),
    }
}
