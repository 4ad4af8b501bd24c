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

//! Model file layout, little-endian:
//!
//! ```text
//! magic      4  b"OMGB"
//! version    u32 (1)
//! arity      u32, then per feature: name_len u32, utf-8 bytes
//! base       f64
//! lr         f64
//! n_trees    u32
//! per tree:  n_nodes u32, then per node
//!              tag u8 = 0: value f64
//!              tag u8 = 1: feature u32, threshold f64, left u32, right u32
//! ```
//!
//! Floats are stored as raw bits, so a loaded model predicts bit-identically.

use std::fs;
use std::path::Path;

use super::{GbdtModel, Node, Tree};
use crate::error::{Error, Result};
use crate::codec::{put_f64, put_u32, Reader};

pub const MODEL_MAGIC: &[u8; 4] = b"OMGB";
pub const MODEL_VERSION: u32 = 1;

impl GbdtModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        put_u32(&mut out, MODEL_VERSION);
        put_u32(&mut out, self.arity() as u32);
        for name in self.feature_names() {
            put_u32(&mut out, name.len() as u32);
            out.extend_from_slice(name.as_bytes());
        }
        put_f64(&mut out, self.base_score());
        put_f64(&mut out, self.learning_rate());
        put_u32(&mut out, self.trees().len() as u32);
        for tree in self.trees() {
            put_u32(&mut out, tree.nodes().len() as u32);
            for node in tree.nodes() {
                match *node {
                    Node::Leaf { value } => {
                        out.push(0);
                        put_f64(&mut out, value);
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.push(1);
                        put_u32(&mut out, feature);
                        put_f64(&mut out, threshold);
                        put_u32(&mut out, left);
                        put_u32(&mut out, right);
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MODEL_MAGIC, MODEL_VERSION)?;
        let arity = r.u32()? as usize;
        let mut names = Vec::with_capacity(arity.min(1024));
        for _ in 0..arity {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Corrupt("feature name is not utf-8".into()))?;
            names.push(name.to_string());
        }
        let base = r.f64()?;
        let lr = r.f64()?;
        if !(base.is_finite() && lr > 0.0 && lr <= 1.0) {
            return Err(Error::Corrupt("bad base score or learning rate".into()));
        }
        let mut model = GbdtModel::with_features(base, lr, names);
        let n_trees = r.u32()?;
        for _ in 0..n_trees {
            let n_nodes = r.u32()? as usize;
            let mut nodes = Vec::with_capacity(n_nodes.min(1 << 16));
            for _ in 0..n_nodes {
                nodes.push(match r.u8()? {
                    0 => Node::Leaf { value: r.f64()? },
                    1 => Node::Split {
                        feature: r.u32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    t => return Err(Error::Corrupt(format!("unknown node tag {t}"))),
                });
            }
            model.trees.push(Tree::from_nodes(nodes, arity)?);
        }
        r.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
