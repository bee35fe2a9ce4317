use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluation abscissae with computed values and per-point error estimates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistributionGrid {
    pub sigma: Vec<f64>,
    pub value: Vec<f64>,
    pub err: Vec<f64>,
}

impl DistributionGrid {
    /// Evaluates `f` at every abscissa in parallel; results keep input order.
    /// The first failure is reported with its abscissa.
    pub fn evaluate(sigmas: &[f64], f: impl Fn(f64) -> Result<(f64, f64)> + Sync) -> Result<Self> {
        let rows: Vec<Result<(f64, f64)>> = sigmas.par_iter().map(|&s| f(s).map_err(Error::at(s))).collect();
        let mut grid = Self::default();
        for (&s, r) in sigmas.iter().zip(rows) {
            let (v, e) = r?;
            grid.sigma.push(s);
            grid.value.push(v);
            grid.err.push(e);
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(|i| (self.sigma[i], self.value[i], self.err[i]))
    }

    /// max_i |value_i − other(σ_i)|.
    pub fn sup_distance(&self, other: impl Fn(f64) -> f64) -> f64 {
        self.rows().map(|(s, v, _)| (v - other(s)).abs()).fold(0.0, f64::max)
    }
}

/// `lo:hi:n`, n equally spaced points including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("grid needs finite lo <= hi, got {lo}:{hi}")));
        }
        if n == 0 || (n == 1 && lo != hi) {
            return Err(Error::invalid(format!("grid {lo}:{hi} needs n >= 2 points, got {n}")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + h * i as f64 })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("grid must look like lo:hi:n, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
        let hi = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
        let n = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        Self::new(lo, hi, n)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}
