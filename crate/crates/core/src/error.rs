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

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("zero-norm vector under cosine metric")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("k = {k} exceeds collection size {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("id {0} is not in the search set")]
    NotInSearchSet(u32),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("feature arity mismatch: model expects {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("corrupt artifact: {0}")]
    Corrupt(String),

    #[error("unsupported artifact version {found} (expected {expected})")]
    UnsupportedVersion { expected: u32, found: u32 },

    #[error("no ground truth for query {0}")]
    MissingGroundTruth(usize),

    #[error("ground truth depth {depth} is shallower than required {required}")]
    GroundTruthTooShallow { depth: usize, required: usize },

    #[error("decay fit needs at least 2 points, row {row} has {points}")]
    NotEnoughPoints { row: usize, points: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}
