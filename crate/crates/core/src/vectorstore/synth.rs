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

//! Deterministic synthetic collections for desk-scale experiments.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use super::{Dataset, Metric};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    /// Independent components in `[0, 1)`.
    Uniform,
    /// Isotropic gaussian blobs around `ceil(sqrt(n))` centers drawn
    /// uniformly in the unit cube.
    #[default]
    GaussianClusters,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "gaussian-clusters" | "clusters" => Ok(Distribution::GaussianClusters),
            other => Err(Error::InvalidParameter(format!("unknown distribution `{other}`"))),
        }
    }
}

/// Parameters of a synthetic collection. The same spec always yields the
/// same vectors, and [`SynthSpec::queries`] draws from the same centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub distribution: Distribution,
    /// Per-component standard deviation around a cluster center.
    pub cluster_std: f64,
}

impl SynthSpec {
    pub fn new(n: usize, dim: usize, seed: u64, distribution: Distribution) -> Self {
        Self {
            n,
            dim,
            seed,
            distribution,
            cluster_std: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::InvalidParameter("synthetic n and dim must be >= 1".into()));
        }
        if !(self.cluster_std.is_finite() && self.cluster_std >= 0.0) {
            return Err(Error::InvalidParameter("cluster_std must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn num_centers(&self) -> usize {
        (self.n as f64).sqrt().ceil() as usize
    }

    fn centers(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..self.num_centers())
            .map(|_| (0..self.dim).map(|_| rng.gen::<f64>()).collect())
            .collect()
    }

    fn draw<T: Scalar>(&self, count: usize, centers: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<T> {
        let mut out = Vec::with_capacity(count * self.dim);
        match self.distribution {
            Distribution::Uniform => {
                out.extend((0..count * self.dim).map(|_| T::from_f64_lossy(rng.gen::<f64>())));
            }
            Distribution::GaussianClusters => {
                let noise = Normal::new(0.0, self.cluster_std).expect("validated std");
                for _ in 0..count {
                    let c = &centers[rng.gen_range(0..centers.len())];
                    out.extend(c.iter().map(|&x| T::from_f64_lossy(x + noise.sample(rng))));
                }
            }
        }
        out
    }

    pub fn generate<T: Scalar>(&self) -> Result<Dataset<T>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let centers = match self.distribution {
            Distribution::GaussianClusters => self.centers(&mut rng),
            Distribution::Uniform => Vec::new(),
        };
        let data = self.draw(self.n, &centers, &mut rng);
        Dataset::from_flat(data, self.dim, Metric::SquaredEuclidean)
    }

    /// `count` query vectors from the same distribution. Different `stream`
    /// values give independent query sets.
    pub fn queries<T: Scalar>(&self, count: usize, stream: u64) -> Result<Vec<Vec<T>>> {
        self.validate()?;
        let centers = match self.distribution {
            Distribution::GaussianClusters => self.centers(&mut ChaCha8Rng::seed_from_u64(self.seed)),
            Distribution::Uniform => Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.wrapping_add(1));
        let flat = self.draw::<T>(count, &centers, &mut rng);
        Ok(flat.chunks_exact(self.dim).map(<[T]>::to_vec).collect())
    }
}
