//! Named simulation-versus-exact cross-checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::{ks_distance, sample_pd_mean, sample_posterior_mean, sample_prior_mean, CdfTable, RngSpec};
use crate::error::{Error, Result};
use crate::grid::{DistributionGrid, GridSpec};
use crate::measure::{build_atomic_measure, BaseMeasure, MeanFunction};
use crate::models::{BetaFn, DirichletProcess, ExtendedGamma, GeneralizedGamma, SampleSummary};
use crate::numerics::QuadratureConfig;
use crate::pd::{pd_mean_cdf, PdModel};
use crate::posterior::eg_indicator_posterior_cdf_closed;
use crate::prior::PriorMeanLaw;

/// Abscissae of the tabulated exact CDFs.
const CDF_NODES: usize = 401;
/// Atoms of the discretized Cauchy base measure.
const CAUCHY_ATOMS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Replicates per check; each suite has its own default.
    pub n_samples: Option<usize>,
    pub seed: u64,
    pub eps_rel: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { n_samples: None, seed: 42, eps_rel: super::DEFAULT_EPS_REL, quadrature: QuadratureConfig::default() }
    }
}

impl SuiteOptions {
    fn n(&self, default: usize) -> usize {
        self.n_samples.unwrap_or(default)
    }

    fn rng(&self, stream: u64) -> RngSpec {
        RngSpec::new(self.seed, stream << 32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub n_samples: usize,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, samples: &[f64], cdf: impl Fn(f64) -> f64, threshold: f64) -> Result<Self> {
        let ks = ks_distance(samples, cdf)?;
        Ok(Self { name: name.into(), n_samples: samples.len(), ks, threshold, pass: ks <= threshold })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub trait ValidationSuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, opts: &SuiteOptions) -> Result<Vec<Check>>;
}

/// Name-keyed validation suites.
pub struct SuiteRegistry {
    suites: BTreeMap<&'static str, Arc<dyn ValidationSuite>>,
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        Self { suites: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(DirichletSuite));
        r.register(Arc::new(GeneralizedGammaSuite));
        r.register(Arc::new(ExtendedGammaSuite));
        r.register(Arc::new(PdSuite));
        r.register(Arc::new(CauchySuite));
        r
    }

    pub fn register(&mut self, suite: Arc<dyn ValidationSuite>) {
        self.suites.insert(suite.name(), suite);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.suites.keys().copied()
    }

    pub fn run(&self, name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
        let suite = self.suites.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::invalid(format!("unknown suite {name:?}; known: {}", known.join(", ")))
        })?;
        let checks = suite.run(opts)?;
        let pass = checks.iter().all(|c| c.pass);
        Ok(SuiteReport { suite: name.into(), checks, pass })
    }
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn beta_cdf(a: f64, b: f64) -> Result<impl Fn(f64) -> f64> {
    let law = Beta::new(a, b).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(move |x: f64| if x < 0.0 { 0.0 } else if x >= 1.0 { 1.0 } else { law.cdf(x) })
}

fn tabulate(lo: f64, hi: f64, f: impl Fn(f64) -> Result<(f64, f64)> + Sync) -> Result<CdfTable> {
    let pts = GridSpec::new(lo, hi, CDF_NODES)?.points();
    CdfTable::from_grid(&DistributionGrid::evaluate(&pts, f)?)
}

fn two_halves(w: f64) -> Result<BaseMeasure> {
    build_atomic_measure([(0.0, w), (1.0, w)])
}

fn in_a() -> MeanFunction {
    MeanFunction::indicator(0.5, 1.5)
}

/// Dirichlet prior and posterior of P̃(A) against Beta laws.
struct DirichletSuite;

impl ValidationSuite for DirichletSuite {
    fn name(&self) -> &'static str {
        "dirichlet"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<Vec<Check>> {
        let n = opts.n(10_000);
        let dp = DirichletProcess::new(two_halves(1.0)?);
        let prior = sample_prior_mean(&dp, &in_a(), n, opts.rng(1), opts.eps_rel)?;
        let sample = SampleSummary::new(vec![(1.0, 2), (0.0, 1)])?;
        let post = sample_posterior_mean(&dp, &sample, &in_a(), n, opts.rng(2), opts.eps_rel)?;
        Ok(vec![
            Check::new("prior Beta(1,1)", &prior, beta_cdf(1.0, 1.0)?, 0.015)?,
            Check::new("posterior Beta(3,2)", &post, beta_cdf(3.0, 2.0)?, 0.015)?,
        ])
    }
}

/// Generalized gamma prior mean against its inversion formula.
struct GeneralizedGammaSuite;

impl ValidationSuite for GeneralizedGammaSuite {
    fn name(&self) -> &'static str {
        "generalized_gamma"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<Vec<Check>> {
        let p0 = build_atomic_measure([(0.0, 0.3), (0.5, 0.3), (1.0, 0.4)])?;
        let gg = GeneralizedGamma::new(0.5, 1.0, p0)?;
        let g = MeanFunction::Identity;
        let law = PriorMeanLaw::new(&gg, &g)?;
        let table = tabulate(0.0, 1.0, |s| law.cdf(s, &opts.quadrature).map(|r| (r.value, r.err_estimate)))?;
        let xs = sample_prior_mean(&gg, &g, opts.n(100_000), opts.rng(3), opts.eps_rel)?;
        Ok(vec![Check::new("prior gamma=0.5 beta=1", &xs, |x| table.eval(x), 0.02)?])
    }
}

/// Extended gamma posterior of P̃(A) after one observation in A.
struct ExtendedGammaSuite;

impl ValidationSuite for ExtendedGammaSuite {
    fn name(&self) -> &'static str {
        "extended_gamma"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<Vec<Check>> {
        let (b1, b2) = (2.0, 1.0);
        let eg = ExtendedGamma::new(two_halves(1.0)?, BetaFn::Steps(vec![(0.0, b2), (0.5, b1)]))?;
        let sample = SampleSummary::new(vec![(1.0, 1)])?;
        let xs = sample_posterior_mean(&eg, &sample, &in_a(), opts.n(100_000), opts.rng(4), opts.eps_rel)?;
        let cdf = |x: f64| eg_indicator_posterior_cdf_closed(b1, b2, x).unwrap_or(f64::NAN);
        Ok(vec![Check::new("posterior beta=(2,1), n=1", &xs, cdf, 0.02)?])
    }
}

/// PD(γ, θ) mean through the gamma mixture against the closed-form CDF.
struct PdSuite;

impl ValidationSuite for PdSuite {
    fn name(&self) -> &'static str {
        "pd"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<Vec<Check>> {
        let pd = PdModel::new(0.5, 1.0, build_atomic_measure([(0.0, 0.4), (1.0, 0.6)])?)?;
        let g = MeanFunction::Identity;
        let table = tabulate(0.0, 1.0, |s| pd_mean_cdf(&pd, &g, s, &opts.quadrature).map(|r| (r.value, r.err_estimate)))?;
        let xs = sample_pd_mean(&pd, &g, opts.n(100_000), opts.rng(5), opts.eps_rel)?;
        Ok(vec![Check::new("PD(0.5, 1) mean", &xs, |x| table.eval(x), 0.02)?])
    }
}

/// A Dirichlet mean of a Cauchy-distributed g is Cauchy again.
struct CauchySuite;

impl ValidationSuite for CauchySuite {
    fn name(&self) -> &'static str {
        "cauchy"
    }

    fn run(&self, opts: &SuiteOptions) -> Result<Vec<Check>> {
        let m = CAUCHY_ATOMS as f64;
        let atoms = (0..CAUCHY_ATOMS).map(|k| ((PI * ((k as f64 + 0.5) / m - 0.5)).tan(), 1.0 / m));
        let dp = DirichletProcess::new(build_atomic_measure(atoms)?);
        let xs = sample_prior_mean(&dp, &MeanFunction::Identity, opts.n(100_000), opts.rng(6), opts.eps_rel)?;
        Ok(vec![Check::new("Dirichlet mean of a Cauchy", &xs, |x| 0.5 + x.atan() / PI, 0.02)?])
    }
}
