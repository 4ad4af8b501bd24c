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

//! Readers and writers for the `.fvecs` / `.bvecs` / `.ivecs` benchmark
//! formats. Every record is a little-endian `i32` dimension followed by that
//! many elements (4-byte floats or ints, or single bytes for `bvecs`).
//!
//! `raw-f32` is a single little-endian `u32` dimension header followed by
//! contiguous `f32` rows with no per-record header.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{Dataset, ElementKind, GroundTruth, Metric, Neighbor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecFormat {
    Fvecs,
    Bvecs,
    Ivecs,
    RawF32,
}

impl VecFormat {
    /// Guess from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "f32" | "bin" => Ok(VecFormat::RawF32),
            other => other.parse(),
        }
    }

    fn elem_size(self) -> usize {
        match self {
            VecFormat::Bvecs => 1,
            _ => 4,
        }
    }
}

impl FromStr for VecFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fvecs" => Ok(VecFormat::Fvecs),
            "bvecs" => Ok(VecFormat::Bvecs),
            "ivecs" => Ok(VecFormat::Ivecs),
            "raw-f32" => Ok(VecFormat::RawF32),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn decode<T: Scalar>(format: VecFormat, raw: &[u8]) -> T {
    match format {
        VecFormat::Bvecs => T::from_f64_lossy(raw[0] as f64),
        VecFormat::Ivecs => T::from_f64_lossy(read_u32(raw, 0) as i32 as f64),
        VecFormat::Fvecs | VecFormat::RawF32 => {
            T::from_f64_lossy(f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64)
        }
    }
}

/// Parses `bytes` into rows of a common dimension.
fn parse_records<T: Scalar>(bytes: &[u8], format: VecFormat) -> Result<(Vec<T>, usize)> {
    if format == VecFormat::RawF32 {
        if bytes.len() < 4 {
            return Err(Error::Truncated("missing raw-f32 dimension header".into()));
        }
        let dim = read_u32(bytes, 0) as usize;
        let body = &bytes[4..];
        if dim == 0 || !body.len().is_multiple_of(4 * dim) {
            return Err(Error::Truncated(format!(
                "raw-f32 body of {} bytes is not a multiple of {} rows",
                body.len(),
                dim
            )));
        }
        let data = body.chunks_exact(4).map(|c| decode(format, c)).collect();
        return Ok((data, dim));
    }

    let es = format.elem_size();
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    let mut at = 0;
    while at < bytes.len() {
        if at + 4 > bytes.len() {
            return Err(Error::Truncated(format!("record header at byte {at}")));
        }
        let d = read_u32(bytes, at) as i32;
        if d <= 0 {
            return Err(Error::Corrupt(format!("non-positive dimension {d} at byte {at}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::DimensionMismatch { expected, found: d });
            }
            _ => {}
        }
        at += 4;
        let end = at + d * es;
        if end > bytes.len() {
            return Err(Error::Truncated(format!("record body at byte {at}")));
        }
        data.extend(bytes[at..end].chunks_exact(es).map(|c| decode::<T>(format, c)));
        at = end;
    }
    let dim = dim.ok_or_else(|| Error::Truncated("file holds no records".into()))?;
    Ok((data, dim))
}

/// Loads a dataset. Metric defaults to squared euclidean; use
/// [`Dataset::with_metric`] to change it.
pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>, format: VecFormat) -> Result<Dataset<T>> {
    let bytes = fs::read(path)?;
    let (data, dim) = parse_records::<T>(&bytes, format)?;
    let kind = if format == VecFormat::Bvecs {
        ElementKind::Byte
    } else {
        ElementKind::Float
    };
    Ok(Dataset::from_flat(data, dim, Metric::SquaredEuclidean)?.with_element_kind(kind))
}

/// Loads rows without wrapping them in a [`Dataset`], e.g. query sets.
pub fn load_vectors<T: Scalar>(path: impl AsRef<Path>, format: VecFormat) -> Result<Vec<Vec<T>>> {
    let bytes = fs::read(path)?;
    let (data, dim) = parse_records::<T>(&bytes, format)?;
    Ok(data.chunks_exact(dim).map(<[T]>::to_vec).collect())
}

fn write_records<R: AsRef<[E]>, E: Copy>(
    path: &Path,
    rows: &[R],
    mut put: impl FnMut(E, &mut Vec<u8>),
) -> Result<()> {
    let mut out = Vec::new();
    for row in rows {
        let row = row.as_ref();
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        for &x in row {
            put(x, &mut out);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_fvecs<R: AsRef<[f32]>>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    write_records(path.as_ref(), rows, |x: f32, out| out.extend_from_slice(&x.to_le_bytes()))
}

pub fn write_ivecs<R: AsRef<[i32]>>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    write_records(path.as_ref(), rows, |x: i32, out| out.extend_from_slice(&x.to_le_bytes()))
}

pub fn write_bvecs<R: AsRef<[u8]>>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    write_records(path.as_ref(), rows, |x: u8, out| out.push(x))
}

/// Persists ground truth as an ivecs file of ids and an fvecs file of
/// distances with identical row shapes.
pub fn save_ground_truth<T: Scalar>(
    gt: &GroundTruth<T>,
    ids_path: impl AsRef<Path>,
    dists_path: impl AsRef<Path>,
) -> Result<()> {
    let ids: Vec<Vec<i32>> = gt
        .rows()
        .iter()
        .map(|r| r.iter().map(|n| n.id as i32).collect())
        .collect();
    let dists: Vec<Vec<f32>> = gt
        .rows()
        .iter()
        .map(|r| r.iter().map(|n| n.dist.as_f64() as f32).collect())
        .collect();
    write_ivecs(ids_path, &ids)?;
    write_fvecs(dists_path, &dists)
}

pub fn load_ground_truth<T: Scalar>(
    ids_path: impl AsRef<Path>,
    dists_path: impl AsRef<Path>,
) -> Result<GroundTruth<T>> {
    let ids = load_vectors::<f64>(ids_path, VecFormat::Ivecs)?;
    let dists = load_vectors::<T>(dists_path, VecFormat::Fvecs)?;
    if ids.len() != dists.len() {
        return Err(Error::Corrupt(format!(
            "ground truth has {} id rows but {} distance rows",
            ids.len(),
            dists.len()
        )));
    }
    let rows = ids
        .into_iter()
        .zip(dists)
        .map(|(i, d)| {
            i.into_iter()
                .zip(d)
                .map(|(id, dist)| Neighbor::new(id as u32, dist))
                .collect()
        })
        .collect();
    Ok(GroundTruth::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        (dir, p)
    }

    #[test]
    fn fvecs_single_record() {
        let (_d, p) = tmp("a.fvecs");
        write_fvecs(&p, &[vec![3.0f32, 4.0]]).unwrap();
        let ds = load_dataset::<f32>(&p, VecFormat::Fvecs).unwrap();
        assert_eq!((ds.len(), ds.dim()), (1, 2));
        assert_eq!(ds.vector(0), &[3.0, 4.0]);
    }

    #[test]
    fn bvecs_bytes_are_identity() {
        let (_d, p) = tmp("a.bvecs");
        write_bvecs(&p, &[vec![1u8, 2, 3, 4]]).unwrap();
        let ds = load_dataset::<f64>(&p, VecFormat::Bvecs).unwrap();
        assert_eq!(ds.vector(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.element_kind(), ElementKind::Byte);
    }

    #[test]
    fn dimension_mismatch_between_records() {
        let (_d, p) = tmp("bad.fvecs");
        write_fvecs(&p, &[vec![1.0f32, 2.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            load_dataset::<f32>(&p, VecFormat::Fvecs),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn truncated_file() {
        let (_d, p) = tmp("t.fvecs");
        write_fvecs(&p, &[vec![1.0f32, 2.0, 3.0]]).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 2);
        fs::write(&p, bytes).unwrap();
        assert!(matches!(
            load_dataset::<f32>(&p, VecFormat::Fvecs),
            Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn unknown_format() {
        assert!(matches!("hdf5".parse::<VecFormat>(), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn raw_f32_layout() {
        let (_d, p) = tmp("r.f32");
        let mut bytes = 3u32.to_le_bytes().to_vec();
        for x in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        fs::write(&p, &bytes).unwrap();
        let ds = load_dataset::<f32>(&p, VecFormat::from_path(&p).unwrap()).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 3));
        assert_eq!(ds.vector(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn ground_truth_pair_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let gt = GroundTruth::new(vec![
            vec![Neighbor::new(3, 0.5f32), Neighbor::new(1, 2.0)],
            vec![Neighbor::new(0, 0.0), Neighbor::new(2, 7.25)],
        ]);
        let (ip, dp) = (dir.path().join("gt.ivecs"), dir.path().join("gt.fvecs"));
        save_ground_truth(&gt, &ip, &dp).unwrap();
        assert_eq!(load_ground_truth::<f32>(&ip, &dp).unwrap(), gt);
    }
}
