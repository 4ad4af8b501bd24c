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

//! Gradient-boosted regression trees with logistic loss.
//!
//! The model outputs the probability that the current best unmasked
//! candidate is the true nearest neighbor of the (masked) query.

mod io;
mod train;

pub use io::{MODEL_MAGIC, MODEL_VERSION};
pub use train::{train, train_dense, train_with_report, TrainReport};

use crate::error::{Error, Result};
use crate::trajectory::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Log-odds of `p`, clamped away from 0 and 1.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

/// One labelled snapshot of a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRecord {
    pub features: FeatureVector,
    /// True iff the best unmasked candidate was the true nearest neighbor.
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_rounds: usize,
    pub max_leaves: usize,
    pub min_samples_per_leaf: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub early_stop_patience: usize,
    /// Minimum absolute drop in validation log-loss that counts as progress.
    pub early_stop_tolerance: f64,
    pub seed: u64,
    /// L2 penalty on leaf values.
    pub l2_reg: f64,
    /// Histogram bins per feature, at most 256.
    pub max_bins: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_rounds: 100,
            max_leaves: 31,
            min_samples_per_leaf: 20,
            learning_rate: 0.1,
            validation_fraction: 0.2,
            early_stop_patience: 5,
            early_stop_tolerance: 1e-4,
            seed: 7,
            l2_reg: 1.0,
            max_bins: 255,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must be in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be >= 2");
        }
        if self.min_samples_per_leaf == 0 {
            return bad("min_samples_per_leaf must be >= 1");
        }
        if !(2..=256).contains(&self.max_bins) {
            return bad("max_bins must be in 2..=256");
        }
        if !(self.l2_reg >= 0.0 && self.early_stop_tolerance >= 0.0) {
            return bad("l2_reg and early_stop_tolerance must be >= 0");
        }
        Ok(())
    }
}

/// Tree node. Splits send `x[feature] <= threshold` left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// Axis-aligned regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn stump(feature: u32, threshold: f64, left: f64, right: f64) -> Self {
        Self {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: left },
                Node::Leaf { value: right },
            ],
        }
    }

    /// Checks that children point forward and features fit `arity`, which
    /// rules out cycles.
    pub fn from_nodes(nodes: Vec<Node>, arity: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Corrupt("tree without nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                left,
                right,
                threshold,
            } = *node
            {
                let ok = (feature as usize) < arity
                    && (left as usize) > i
                    && (right as usize) > i
                    && (left as usize) < nodes.len()
                    && (right as usize) < nodes.len()
                    && !threshold.is_nan();
                if !ok {
                    return Err(Error::Corrupt(format!("malformed split at node {i}")));
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

/// Boosted ensemble: `sigmoid(base_score + learning_rate * sum(tree(x)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    base_score: f64,
    learning_rate: f64,
    feature_names: Vec<String>,
    trees: Vec<Tree>,
}

impl GbdtModel {
    /// Empty ensemble over the frozen trajectory feature order.
    pub fn constant(base_score: f64, learning_rate: f64) -> Self {
        Self::with_features(
            base_score,
            learning_rate,
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn with_features(base_score: f64, learning_rate: f64, feature_names: Vec<String>) -> Self {
        Self {
            base_score,
            learning_rate,
            feature_names,
            trees: Vec::new(),
        }
    }

    pub fn push_tree(&mut self, tree: Tree) -> Result<()> {
        let tree = Tree::from_nodes(tree.nodes, self.arity())?;
        self.trees.push(tree);
        Ok(())
    }

    pub(crate) fn truncate(&mut self, rounds: usize) {
        self.trees.truncate(rounds);
    }

    pub fn arity(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Log-odds before the sigmoid. Caller guarantees arity.
    #[inline]
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.eval(x)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                found: x.len(),
            });
        }
        Ok(sigmoid(self.raw_score(x)))
    }

    /// Probability that the top-1 is found, for a trajectory feature vector.
    pub fn predict_features(&self, f: &FeatureVector) -> Result<f64> {
        self.predict(&f.to_array())
    }

    /// Errors unless the model consumes the trajectory feature layout.
    pub fn check_feature_contract(&self) -> Result<()> {
        if self.arity() != FEATURE_COUNT {
            return Err(Error::ArityMismatch {
                expected: FEATURE_COUNT,
                found: self.arity(),
            });
        }
        if self.feature_names.iter().zip(FEATURE_NAMES).any(|(a, b)| a != b) {
            return Err(Error::Corrupt("feature order differs from the trajectory layout".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn empty_model_is_sigmoid_of_base() {
        let m = GbdtModel::with_features(0.7, 0.1, names(3));
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]).unwrap(), sigmoid(0.7));
    }

    #[test]
    fn arity_mismatch() {
        let m = GbdtModel::constant(0.0, 0.1);
        assert!(matches!(m.predict(&[1.0]), Err(Error::ArityMismatch { .. })));
        assert!(m.check_feature_contract().is_ok());
        assert!(GbdtModel::with_features(0.0, 0.1, names(2)).check_feature_contract().is_err());
    }

    #[test]
    fn malformed_tree_rejected() {
        let mut m = GbdtModel::with_features(0.0, 0.1, names(2));
        assert!(m.push_tree(Tree::stump(5, 0.0, 1.0, 1.0)).is_err());
        let cyclic = vec![
            Node::Split { feature: 0, threshold: 0.0, left: 0, right: 1 },
            Node::Leaf { value: 1.0 },
        ];
        assert!(Tree::from_nodes(cyclic, 2).is_err());
    }

    #[test]
    fn nonnegative_tree_never_lowers_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = GbdtModel::with_features(-0.3, 0.5, names(2));
        m.push_tree(Tree::stump(0, 0.2, -1.0, 0.4)).unwrap();
        let xs: Vec<[f64; 2]> = (0..200).map(|_| [rng.gen(), rng.gen()]).collect();
        let before: Vec<f64> = xs.iter().map(|x| m.predict(x).unwrap()).collect();
        m.push_tree(Tree::stump(1, 0.5, 0.0, 0.3)).unwrap();
        for (x, b) in xs.iter().zip(before) {
            assert!(m.predict(x).unwrap() >= b);
        }
    }
}
