use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distinct observed values with their multiplicities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawSample", into = "RawSample")]
pub struct SampleSummary {
    distinct: Vec<(f64, u32)>,
}

#[derive(Serialize, Deserialize)]
struct RawSample {
    distinct: Vec<(f64, u32)>,
}

impl TryFrom<RawSample> for SampleSummary {
    type Error = Error;
    fn try_from(raw: RawSample) -> Result<Self> {
        SampleSummary::new(raw.distinct)
    }
}

impl From<SampleSummary> for RawSample {
    fn from(s: SampleSummary) -> Self {
        RawSample { distinct: s.distinct }
    }
}

impl SampleSummary {
    pub fn new(distinct: Vec<(f64, u32)>) -> Result<Self> {
        for (i, &(x, n)) in distinct.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::invalid(format!("non-finite observation {x}")));
            }
            if n == 0 {
                return Err(Error::invalid(format!("observation {x} has multiplicity 0")));
            }
            if distinct[..i].iter().any(|p| p.0 == x) {
                return Err(Error::invalid(format!("observation {x} listed twice")));
            }
        }
        Ok(Self { distinct })
    }

    /// Summarises raw observations, merging exact ties.
    pub fn from_observations(xs: &[f64]) -> Result<Self> {
        let mut distinct: Vec<(f64, u32)> = Vec::new();
        for &x in xs {
            match distinct.iter_mut().find(|p| p.0 == x) {
                Some(p) => p.1 += 1,
                None => distinct.push((x, 1)),
            }
        }
        Self::new(distinct)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn distinct(&self) -> &[(f64, u32)] {
        &self.distinct
    }

    /// Total number of observations n.
    pub fn n(&self) -> u32 {
        self.distinct.iter().map(|p| p.1).sum()
    }

    /// Number of distinct values n(π).
    pub fn n_clusters(&self) -> usize {
        self.distinct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distinct.is_empty()
    }
}
