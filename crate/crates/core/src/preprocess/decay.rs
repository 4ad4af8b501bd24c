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

//! Logarithmic decay extrapolation of table rows past `r_max`, and the
//! combined lookup used by the forecast.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::table::ProbTable;
use crate::error::{Error, Result};

/// `p(r) = clamp(a - b * ln r, 0, 1)` with `b >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub a: f64,
    pub b: f64,
}

impl DecayFit {
    pub fn eval(&self, r: usize) -> f64 {
        (self.a - self.b * (r as f64).ln()).clamp(0.0, 1.0)
    }

    /// Least squares over `(r, p)` points. A rising fit is flattened to its
    /// mean so the curve never increases with `r`.
    pub fn fit_points(points: &[(usize, f64)]) -> Result<Self> {
        let distinct = {
            let mut rs: Vec<usize> = points.iter().map(|p| p.0).collect();
            rs.sort_unstable();
            rs.dedup();
            rs.len()
        };
        if distinct < 2 || points.iter().any(|p| p.0 == 0) {
            return Err(Error::NotEnoughPoints {
                row: 0,
                points: distinct,
            });
        }
        let n = points.len() as f64;
        let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
        let b = -sxy / sxx;
        if b < 0.0 {
            return Ok(Self { a: my, b: 0.0 });
        }
        Ok(Self { a: my + b * mx, b })
    }
}

/// Fits row `n` of `table` over its cells with `r > n`.
pub fn fit_decay(table: &ProbTable, n: usize) -> Result<DecayFit> {
    if n > table.n_max() {
        return Err(Error::InvalidParameter(format!(
            "row {n} outside table with n_max {}",
            table.n_max()
        )));
    }
    let points: Vec<(usize, f64)> = ((n + 1)..=table.r_max())
        .map(|r| (r, table.get(n, r).expect("r within table")))
        .collect();
    DecayFit::fit_points(&points).map_err(|_| Error::NotEnoughPoints {
        row: n,
        points: points.len(),
    })
}

/// A finalized table plus one optional decay fit per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    table: ProbTable,
    fits: Vec<Option<DecayFit>>,
}

impl Forecaster {
    /// Fits every row that has at least two cells past its prefix.
    pub fn new(table: ProbTable) -> Self {
        let fits = (0..=table.n_max()).map(|n| fit_decay(&table, n).ok()).collect();
        Self { table, fits }
    }

    pub fn from_parts(table: ProbTable, fits: Vec<Option<DecayFit>>) -> Result<Self> {
        if fits.len() != table.n_max() + 1 {
            return Err(Error::Corrupt(format!(
                "{} decay rows for a table with {} rows",
                fits.len(),
                table.n_max() + 1
            )));
        }
        Ok(Self { table, fits })
    }

    pub fn table(&self) -> &ProbTable {
        &self.table
    }

    pub fn fits(&self) -> &[Option<DecayFit>] {
        &self.fits
    }

    /// `T(n, r)`: 1 inside the found prefix, the table where it has data,
    /// the row's decay curve past `r_max` (or the row's last cell if the row
    /// has no fit). Rows past `n_max` use row `n_max`.
    pub fn prob(&self, n: usize, r: usize) -> f64 {
        if let Some(p) = self.table.get(n, r) {
            return p;
        }
        let row = n.min(self.table.n_max());
        match self.fits[row] {
            Some(fit) => fit.eval(r),
            None => self.table.get(row, self.table.r_max()).unwrap_or(0.0),
        }
    }

    /// `n,a,b` lines for rows that have a fit.
    pub fn fits_csv(&self) -> String {
        let mut out = String::from("n,a,b\n");
        for (n, f) in self.fits.iter().enumerate() {
            if let Some(f) = f {
                let _ = writeln!(out, "{n},{},{}", f.a, f.b);
            }
        }
        out
    }

    pub fn parse_fits_csv(text: &str, rows: usize) -> Result<Vec<Option<DecayFit>>> {
        let mut fits = vec![None; rows];
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let parse_err = || Error::Corrupt(format!("bad decay fit on line {}", i + 1));
            if parts.len() != 3 {
                return Err(parse_err());
            }
            let n: usize = parts[0].trim().parse().map_err(|_| parse_err())?;
            let a: f64 = parts[1].trim().parse().map_err(|_| parse_err())?;
            let b: f64 = parts[2].trim().parse().map_err(|_| parse_err())?;
            if n >= rows || !a.is_finite() || b.is_nan() || b < 0.0 {
                return Err(parse_err());
            }
            fits[n] = Some(DecayFit { a, b });
        }
        Ok(fits)
    }

    pub fn save(&self, table_path: impl AsRef<Path>, fits_path: impl AsRef<Path>) -> Result<()> {
        self.table.save(table_path)?;
        fs::write(fits_path, self.fits_csv())?;
        Ok(())
    }

    pub fn load(table_path: impl AsRef<Path>, fits_path: impl AsRef<Path>) -> Result<Self> {
        let table = ProbTable::load(table_path)?;
        let fits = Self::parse_fits_csv(&fs::read_to_string(fits_path)?, table.n_max() + 1)?;
        Self::from_parts(table, fits)
    }
}
