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

//! Paired comparison of two reports over the same trace.

use std::fmt::Write as _;

use crate::report::QueryRow;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub query_id: usize,
    pub k: usize,
    pub recall_a: f64,
    pub recall_b: f64,
    pub cmps_a: usize,
    pub cmps_b: usize,
    pub invocations_a: usize,
    pub invocations_b: usize,
}

impl PairRow {
    pub fn recall_delta(&self) -> f64 {
        self.recall_b - self.recall_a
    }

    /// `cmps_b / cmps_a`; 1 when both are zero.
    pub fn cmps_ratio(&self) -> f64 {
        ratio(self.cmps_b as f64, self.cmps_a as f64)
    }
}

fn ratio(b: f64, a: f64) -> f64 {
    if a == 0.0 {
        if b == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        b / a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<PairRow>,
}

impl Comparison {
    /// Pairs rows by position; both reports must list the same
    /// `(query_id, K)` sequence.
    pub fn new(a: &[QueryRow], b: &[QueryRow]) -> Result<Self, BenchError> {
        if a.len() != b.len() {
            return Err(BenchError::Mismatch(format!("{} rows vs {} rows", a.len(), b.len())));
        }
        let rows = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| {
                if (x.query_id, x.k) != (y.query_id, y.k) {
                    return Err(BenchError::Mismatch(format!(
                        "row {i}: ({}, K={}) vs ({}, K={})",
                        x.query_id, x.k, y.query_id, y.k
                    )));
                }
                Ok(PairRow {
                    query_id: x.query_id,
                    k: x.k,
                    recall_a: x.recall,
                    recall_b: y.recall,
                    cmps_a: x.cmps,
                    cmps_b: y.cmps,
                    invocations_a: x.model_invocations,
                    invocations_b: y.model_invocations,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rows })
    }

    pub fn mean_recall_delta(&self) -> f64 {
        mean(self.rows.iter().map(PairRow::recall_delta))
    }

    /// Ratio of total cmps, b over a.
    pub fn cmps_ratio(&self) -> f64 {
        ratio(
            self.rows.iter().map(|r| r.cmps_b as f64).sum(),
            self.rows.iter().map(|r| r.cmps_a as f64).sum(),
        )
    }

    /// Percentage of a's model calls that b avoids.
    pub fn invocation_reduction_pct(&self) -> f64 {
        let a: f64 = self.rows.iter().map(|r| r.invocations_a as f64).sum();
        let b: f64 = self.rows.iter().map(|r| r.invocations_b as f64).sum();
        if a == 0.0 {
            0.0
        } else {
            100.0 * (a - b) / a
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "query_id,K,recall_a,recall_b,recall_delta,cmps_a,cmps_b,cmps_ratio,invocations_a,invocations_b,invocation_reduction_pct\n",
        );
        for r in &self.rows {
            let red = if r.invocations_a == 0 {
                0.0
            } else {
                100.0 * (r.invocations_a as f64 - r.invocations_b as f64) / r.invocations_a as f64
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.query_id,
                r.k,
                r.recall_a,
                r.recall_b,
                r.recall_delta(),
                r.cmps_a,
                r.cmps_b,
                r.cmps_ratio(),
                r.invocations_a,
                r.invocations_b,
                red
            );
        }
        let _ = writeln!(
            out,
            "all,all,{},{},{},{},{},{},{},{},{}",
            mean(self.rows.iter().map(|r| r.recall_a)),
            mean(self.rows.iter().map(|r| r.recall_b)),
            self.mean_recall_delta(),
            self.rows.iter().map(|r| r.cmps_a).sum::<usize>(),
            self.rows.iter().map(|r| r.cmps_b).sum::<usize>(),
            self.cmps_ratio(),
            self.rows.iter().map(|r| r.invocations_a).sum::<usize>(),
            self.rows.iter().map(|r| r.invocations_b).sum::<usize>(),
            self.invocation_reduction_pct()
        );
        out
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: usize, k: usize, recall: f64, cmps: usize, inv: usize) -> QueryRow {
        QueryRow {
            query_id: id,
            k,
            recall,
            steps: 1,
            cmps,
            model_invocations: inv,
            forecast_stop: 0,
            ranks_confirmed: 0,
            prefix_found: 0,
            wall_us: 1.0,
        }
    }

    #[test]
    fn self_comparison_is_neutral() {
        let a = vec![row(0, 10, 0.9, 100, 8), row(1, 1, 1.0, 40, 2)];
        let c = Comparison::new(&a, &a).unwrap();
        assert_eq!(c.mean_recall_delta(), 0.0);
        assert_eq!(c.cmps_ratio(), 1.0);
        assert_eq!(c.invocation_reduction_pct(), 0.0);
        assert!(c.to_csv().lines().last().unwrap().ends_with(",1,10,10,0"));
    }

    #[test]
    fn reduction_column() {
        let a = vec![row(0, 10, 0.9, 100, 10), row(1, 10, 1.0, 100, 10)];
        let b = vec![row(0, 10, 1.0, 50, 5), row(1, 10, 1.0, 100, 10)];
        let c = Comparison::new(&a, &b).unwrap();
        assert!((c.invocation_reduction_pct() - 25.0).abs() < 1e-12);
        assert!((c.cmps_ratio() - 0.75).abs() < 1e-12);
        assert!((c.mean_recall_delta() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn mismatched_traces() {
        let a = vec![row(0, 10, 0.9, 100, 10)];
        assert!(Comparison::new(&a, &[row(1, 10, 0.9, 100, 10)]).is_err());
        assert!(Comparison::new(&a, &[row(0, 5, 0.9, 100, 10)]).is_err());
        assert!(Comparison::new(&a, &[]).is_err());
    }
}
