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

//! Vector collections, distance metrics and the exact nearest neighbor
//! oracle every approximate path is scored against.

mod io;
mod synth;

pub use io::{
    load_dataset, load_ground_truth, load_vectors, save_ground_truth, write_bvecs, write_fvecs,
    write_ivecs, VecFormat,
};
pub use synth::{Distribution, SynthSpec};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{cmp_scalar, Scalar};

/// Similarity used to rank vectors. Every variant is expressed as a value
/// to be minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    SquaredEuclidean,
    /// Negated dot product.
    InnerProduct,
    /// Negated cosine similarity.
    Cosine,
}

impl Metric {
    pub fn as_u8(self) -> u8 {
        match self {
            Metric::SquaredEuclidean => 0,
            Metric::InnerProduct => 1,
            Metric::Cosine => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Metric::SquaredEuclidean),
            1 => Some(Metric::InnerProduct),
            2 => Some(Metric::Cosine),
            _ => None,
        }
    }

    /// Unchecked evaluation used on hot paths. Inputs were validated when the
    /// dataset or query entered the system.
    #[inline]
    pub(crate) fn eval<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        match self {
            Metric::SquaredEuclidean => a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
                let d = x - y;
                acc + d * d
            }),
            Metric::InnerProduct => -dot(a, b),
            Metric::Cosine => -dot(a, b) / (norm(a) * norm(b)),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::SquaredEuclidean => "l2sq",
            Metric::InnerProduct => "ip",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" | "l2sq" | "euclidean" | "squared-euclidean" => Ok(Metric::SquaredEuclidean),
            "ip" | "inner-product" | "dot" => Ok(Metric::InnerProduct),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Distance between two vectors under `metric`.
///
/// Squared euclidean is never rooted. Cosine rejects zero-norm inputs
/// instead of returning NaN.
pub fn distance<T: Scalar>(a: &[T], b: &[T], metric: Metric) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if metric == Metric::Cosine && (norm(a) == T::zero() || norm(b) == T::zero()) {
        return Err(Error::ZeroNorm);
    }
    Ok(metric.eval(a, b))
}

/// Storage kind the vectors were ingested from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElementKind {
    #[default]
    Float,
    Byte,
}

/// Immutable collection of `len()` vectors of identical dimension, stored
/// row-major. Ids are dense `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    data: Vec<T>,
    dim: usize,
    metric: Metric,
    element_kind: ElementKind,
}

impl<T: Scalar> Dataset<T> {
    pub fn from_flat(data: Vec<T>, dim: usize, metric: Metric) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidParameter("dataset must hold at least one vector".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(Self {
            data,
            dim,
            metric,
            element_kind: ElementKind::Float,
        })
    }

    pub fn from_rows(rows: &[Vec<T>], metric: Metric) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim, metric)
    }

    pub(crate) fn with_element_kind(mut self, kind: ElementKind) -> Self {
        self.element_kind = kind;
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn element_kind(&self) -> ElementKind {
        self.element_kind
    }

    #[inline]
    pub fn vector(&self, id: usize) -> &[T] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Checked distance from `query` to stored vector `id`.
    pub fn distance_to(&self, query: &[T], id: usize) -> Result<T> {
        distance(query, self.vector(id), self.metric)
    }

    #[inline]
    pub(crate) fn eval(&self, query: &[T], id: usize) -> T {
        self.metric.eval(query, self.vector(id))
    }

    /// Checks that `query` can be scored against this collection.
    pub fn check_query(&self, query: &[T]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        if self.metric == Metric::Cosine && norm(query) == T::zero() {
            return Err(Error::ZeroNorm);
        }
        Ok(())
    }

    /// Fails if the metric cannot be evaluated on some stored vector.
    pub fn validate(&self) -> Result<()> {
        if self.metric == Metric::Cosine && self.iter().any(|v| norm(v) == T::zero()) {
            return Err(Error::ZeroNorm);
        }
        Ok(())
    }
}

/// A scored id. Orders by distance, then by id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub id: u32,
    pub dist: T,
}

impl<T: Scalar> Neighbor<T> {
    pub fn new(id: u32, dist: T) -> Self {
        Self { id, dist }
    }
}

impl<T: Scalar> Eq for Neighbor<T> {}

impl<T: Scalar> PartialOrd for Neighbor<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Neighbor<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_scalar(self.dist, other.dist).then(self.id.cmp(&other.id))
    }
}

/// Exact ranked neighbor lists, one row per query.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T> {
    rows: Vec<Vec<Neighbor<T>>>,
}

impl<T: Scalar> GroundTruth<T> {
    pub fn new(rows: Vec<Vec<Neighbor<T>>>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Smallest row length.
    pub fn depth(&self) -> usize {
        self.rows.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn row(&self, query: usize) -> Option<&[Neighbor<T>]> {
        self.rows.get(query).map(Vec::as_slice)
    }

    pub fn ids(&self, query: usize) -> Option<Vec<u32>> {
        self.row(query).map(|r| r.iter().map(|n| n.id).collect())
    }

    pub fn rows(&self) -> &[Vec<Neighbor<T>>] {
        &self.rows
    }
}

/// Exact `k` nearest ids of `query`, ties broken by lower id.
pub fn brute_force_topk<T: Scalar>(
    dataset: &Dataset<T>,
    query: &[T],
    k: usize,
) -> Result<Vec<Neighbor<T>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > dataset.len() {
        return Err(Error::KTooLarge {
            k,
            n: dataset.len(),
        });
    }
    dataset.check_query(query)?;
    // Max-heap of the k best seen so far; the root is the current worst.
    let mut heap: BinaryHeap<Neighbor<T>> = BinaryHeap::with_capacity(k + 1);
    for (id, v) in dataset.iter().enumerate() {
        let cand = Neighbor::new(id as u32, dataset.metric().eval(query, v));
        if heap.len() < k {
            heap.push(cand);
        } else if let Some(worst) = heap.peek() {
            if cand < *worst {
                heap.pop();
                heap.push(cand);
            }
        }
    }
    Ok(heap.into_sorted_vec())
}

/// Ground truth for every query, computed in parallel. Output order follows
/// `queries` regardless of scheduling.
pub fn brute_force_ground_truth<T: Scalar>(
    dataset: &Dataset<T>,
    queries: &[Vec<T>],
    k: usize,
) -> Result<GroundTruth<T>> {
    let rows = queries
        .par_iter()
        .map(|q| brute_force_topk(dataset, q, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth::new(rows))
}

/// |G ∩ R| / K where G is the first `k` ids of `truth` and R the first `k`
/// of `result`.
pub fn recall_at_k(truth: &[u32], result: &[u32], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let g = &truth[..k.min(truth.len())];
    let hits = result.iter().take(k).filter(|id| g.contains(id)).count();
    hits as f64 / k as f64
}
