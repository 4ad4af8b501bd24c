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

//! Learned early termination for proximity-graph nearest neighbor search
//! that serves any top-K from a single top-1 stop model.
//!
//! A top-K query is answered as K successive top-1 problems: after each
//! rank is confirmed, the confirmed ids are masked and the same model
//! decides when the next-best candidate is final. Trajectory statistics
//! make the model insensitive to masking, and a profiled probability table
//! lets the search stop before all K ranks are confirmed.
//!
//! Numeric code is generic over [`Scalar`]; the `*32` / `*64` aliases fix
//! the element type.

mod codec;
pub mod error;
pub mod gbdt;
pub mod graph;
pub mod omega;
pub mod preprocess;
pub mod scalar;
pub mod trajectory;
pub mod vectorstore;

pub use error::{Error, Result};
pub use gbdt::{GbdtModel, TrainConfig, TrainingRecord};
pub use graph::{FixedOutcome, GraphConfig, GraphIndex, SearchState};
pub use omega::{
    adaptive_interval, basic_search, forecast_recall, optimized_search, OmegaParams, OracleStop,
    SearchOutcome, StopModel,
};
pub use preprocess::{DecayFit, Forecaster, PipelineConfig, PipelineOutput, ProbTable};
pub use scalar::Scalar;
pub use trajectory::{FeatureVector, Trajectory, WindowConfig, FEATURE_COUNT, FEATURE_NAMES};
pub use vectorstore::{Dataset, GroundTruth, Metric, Neighbor};

pub type Dataset32 = Dataset<f32>;
pub type Dataset64 = Dataset<f64>;
pub type GraphIndex32 = GraphIndex<f32>;
pub type GraphIndex64 = GraphIndex<f64>;
pub type SearchState32 = SearchState<f32>;
pub type SearchState64 = SearchState<f64>;
pub type GroundTruth32 = GroundTruth<f32>;
pub type GroundTruth64 = GroundTruth<f64>;
pub type PipelineOutput32 = PipelineOutput<f32>;
pub type PipelineOutput64 = PipelineOutput<f64>;
