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

//! Binary index container. All integers little-endian.
//!
//! ```text
//! magic        4   b"OMGX"
//! version      u32 (1)
//! scalar_tag   u8  (4 = f32, 8 = f64)
//! metric       u8  (0 = l2sq, 1 = ip, 2 = cosine)
//! n            u64
//! dim          u32
//! m            u32
//! ef_constr    u32
//! seed         u64
//! has_ml       u8, then level_mult f64
//! entry        u32
//! num_layers   u32
//! levels       n x u8
//! adjacency    for each layer l, for each node with level >= l:
//!                count u32, then count x u32 ids
//! ```
//!
//! Vectors are not stored; loading needs the dataset the index was built on.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{GraphConfig, GraphIndex};
use crate::codec::{put_f64, put_u32, put_u64, Reader};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectorstore::{Dataset, Metric};

pub const INDEX_MAGIC: &[u8; 4] = b"OMGX";
pub const INDEX_VERSION: u32 = 1;

impl<T: Scalar> GraphIndex<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let ds = self.dataset();
        let cfg = self.config();
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        put_u32(&mut out, INDEX_VERSION);
        out.push(T::TAG);
        out.push(ds.metric().as_u8());
        put_u64(&mut out, self.len() as u64);
        put_u32(&mut out, ds.dim() as u32);
        put_u32(&mut out, cfg.m as u32);
        put_u32(&mut out, cfg.ef_construction as u32);
        put_u64(&mut out, cfg.seed);
        out.push(cfg.level_mult.is_some() as u8);
        put_f64(&mut out, cfg.level_mult.unwrap_or(0.0));
        put_u32(&mut out, self.entry_point());
        put_u32(&mut out, self.adjacency().len() as u32);
        out.extend_from_slice(&self.levels);
        for (l, layer) in self.adjacency().iter().enumerate() {
            for (id, list) in layer.iter().enumerate() {
                if self.levels[id] as usize >= l {
                    put_u32(&mut out, list.len() as u32);
                    list.iter().for_each(|&x| put_u32(&mut out, x));
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], dataset: Arc<Dataset<T>>) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(INDEX_MAGIC, INDEX_VERSION)?;
        let tag = r.u8()?;
        if tag != T::TAG {
            return Err(Error::Corrupt(format!("scalar width {tag} does not match {}", T::TAG)));
        }
        let metric = Metric::from_u8(r.u8()?).ok_or_else(|| Error::Corrupt("bad metric".into()))?;
        let n = r.u64()? as usize;
        let dim = r.u32()? as usize;
        if n != dataset.len() || dim != dataset.dim() || metric != dataset.metric() {
            return Err(Error::Corrupt(format!(
                "index shape {n}x{dim}/{metric} does not match dataset {}x{}/{}",
                dataset.len(),
                dataset.dim(),
                dataset.metric()
            )));
        }
        let m = r.u32()? as usize;
        let ef_construction = r.u32()? as usize;
        let seed = r.u64()?;
        let has_ml = r.u8()? != 0;
        let ml = r.f64()?;
        let config = GraphConfig {
            m,
            ef_construction,
            seed,
            level_mult: has_ml.then_some(ml),
        };
        config.validate().map_err(|e| Error::Corrupt(e.to_string()))?;
        let entry = r.u32()?;
        let num_layers = r.u32()? as usize;
        let levels = r.take(n)?.to_vec();
        if entry as usize >= n || num_layers == 0 || levels.iter().any(|&l| l as usize >= num_layers) {
            return Err(Error::Corrupt("inconsistent levels or entry point".into()));
        }
        let mut layers = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let mut layer = vec![Vec::new(); n];
            for (id, list) in layer.iter_mut().enumerate() {
                if levels[id] as usize >= l {
                    let count = r.u32()? as usize;
                    if count > config.max_degree(l) {
                        return Err(Error::Corrupt(format!("degree {count} over cap at node {id}")));
                    }
                    for _ in 0..count {
                        let nb = r.u32()?;
                        if nb as usize >= n {
                            return Err(Error::Corrupt(format!("edge to unknown id {nb}")));
                        }
                        list.push(nb);
                    }
                }
            }
            layers.push(layer);
        }
        r.finish()?;
        Ok(GraphIndex::from_parts(dataset, config, layers, levels, entry))
    }
}

pub fn save_index<T: Scalar>(index: &GraphIndex<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, index.to_bytes())?;
    Ok(())
}

pub fn load_index<T: Scalar>(path: impl AsRef<Path>, dataset: Arc<Dataset<T>>) -> Result<GraphIndex<T>> {
    GraphIndex::from_bytes(&fs::read(path)?, dataset)
}
