//! Posterior law of the mean Q̃(g) = P̃(h) of a random mixture density
//! ∫k(y, x)P̃(dx), given observations Y from it.

mod kernel;
mod partitions;
mod routes;
mod setup;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DistributionGrid;
use crate::measure::MeanFunction;
use crate::models::{require_exact, CrmModel, ModelKind};
use crate::numerics::logline::log_line_lognorm;
use crate::numerics::{QuadResult, QuadratureConfig};

pub use kernel::Kernel;
pub use partitions::{bell, set_partitions, SetPartitions, PARTITION_CAP};
pub use routes::{
    GeneralMixture, GeneralRoute, MdpMixture, MdpRoute, QuasiConjugateMixture, QuasiConjugateRoute, CONFIGURATION_CAP,
};

/// Observations, kernel and the function g whose mixture mean is sought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureData {
    pub y: Vec<f64>,
    pub kernel: Kernel,
    pub g: MeanFunction,
}

impl MixtureData {
    pub fn new(y: Vec<f64>, kernel: Kernel, g: MeanFunction) -> Result<Self> {
        let d = Self { y, kernel, g };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.is_empty() {
            return Err(Error::invalid("mixture data needs at least one observation"));
        }
        if let Some(y) = self.y.iter().find(|y| !y.is_finite()) {
            return Err(Error::invalid(format!("non-finite observation {y}")));
        }
        if self.y.len() > PARTITION_CAP {
            return Err(Error::PartitionCap { n: self.y.len(), cap: PARTITION_CAP });
        }
        self.kernel.validate()?;
        self.g.validate()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Posterior law of a mixture mean prepared for repeated evaluation.
pub trait MixtureMeanLaw: Send + Sync {
    /// [min h, max h] over the atoms.
    fn hull(&self) -> (f64, f64);

    fn density(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>>;

    fn cdf(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>>;

    fn density_grid(&self, sigmas: &[f64], cfg: &QuadratureConfig) -> Result<DistributionGrid> {
        DistributionGrid::evaluate(sigmas, |s| self.density(s, cfg).map(|r| (r.value, r.err_estimate)))
    }

    fn cdf_grid(&self, sigmas: &[f64], cfg: &QuadratureConfig) -> Result<DistributionGrid> {
        DistributionGrid::evaluate(sigmas, |s| self.cdf(s, cfg).map(|r| (r.value, r.err_estimate)))
    }
}

/// A way of assembling the mixture posterior.
pub trait MixtureRoute: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, model: &dyn CrmModel) -> bool;

    fn prepare(&self, model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Box<dyn MixtureMeanLaw>>;
}

/// Name-keyed mixture routes.
pub struct MixtureRouteRegistry {
    routes: BTreeMap<&'static str, Box<dyn MixtureRoute>>,
}

impl MixtureRouteRegistry {
    pub fn empty() -> Self {
        Self { routes: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(GeneralRoute));
        r.register(Box::new(QuasiConjugateRoute));
        r.register(Box::new(MdpRoute));
        r
    }

    pub fn register(&mut self, route: Box<dyn MixtureRoute>) {
        self.routes.insert(route.name(), route);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.routes.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn MixtureRoute> {
        self.routes.get(name).map(|r| r.as_ref()).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::invalid(format!("unknown mixture route {name:?}; known: {}", known.join(", ")))
        })
    }

    /// The Dirichlet process integrates the latent variable out; other models use the general route.
    pub fn default_for(model: &dyn CrmModel) -> &'static str {
        if model.kind() == ModelKind::Dirichlet {
            "mdp"
        } else {
            "general"
        }
    }

    pub fn prepare(
        &self,
        name: &str,
        model: &dyn CrmModel,
        data: &MixtureData,
        cfg: &QuadratureConfig,
    ) -> Result<Box<dyn MixtureMeanLaw>> {
        let route = self.get(name)?;
        if !route.supports(model) {
            return Err(Error::Unsupported { model: model.name(), op: route.name() });
        }
        route.prepare(model, data, cfg)
    }
}

impl Default for MixtureRouteRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn default_law(model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Box<dyn MixtureMeanLaw>> {
    MixtureRouteRegistry::builtin().prepare(MixtureRouteRegistry::default_for(model), model, data, cfg)
}

pub fn mixture_posterior_density(
    model: &dyn CrmModel,
    data: &MixtureData,
    sigmas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<DistributionGrid> {
    default_law(model, data, cfg)?.density_grid(sigmas, cfg)
}

pub fn mixture_posterior_cdf(
    model: &dyn CrmModel,
    data: &MixtureData,
    sigmas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<DistributionGrid> {
    default_law(model, data, cfg)?.cdf_grid(sigmas, cfg)
}

/// ∫ weight(x) ∏_{i∈C} k(Y_i, x) α(dx) over the atoms of the base measure.
pub fn cluster_integral(
    model: &dyn CrmModel,
    kernel: &Kernel,
    cluster: &[f64],
    weight: impl Fn(f64) -> Result<Complex64>,
) -> Result<Complex64> {
    if cluster.is_empty() {
        return Err(Error::invalid("a cluster needs at least one observation"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, a) in model.base().atoms() {
        let k: f64 = cluster.iter().map(|&y| kernel.density(y, x)).product();
        if k == 0.0 {
            continue;
        }
        acc += weight(x)? * (a * k);
    }
    Ok(acc)
}

fn check_partition(partition: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for c in partition {
        if c.is_empty() {
            return Err(Error::invalid("partition has an empty cluster"));
        }
        for &i in c {
            if i >= n || seen[i] {
                return Err(Error::invalid(format!("partition index {i} is out of range or repeated")));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("partition does not cover every observation"));
    }
    Ok(())
}

fn ln_partition_weight(
    model: &dyn CrmModel,
    data: &MixtureData,
    partition: &[Vec<usize>],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    require_exact(model, "marginal latent weight")?;
    data.validate()?;
    check_partition(partition, data.n())?;
    let atoms: Vec<(f64, f64)> = model.base().atoms().to_vec();
    let rhos = model.atom_intensities();
    // ln ∏_{i∈C} k(Y_i, x_k) per cluster and atom
    let ln_k: Vec<Vec<f64>> = partition
        .iter()
        .map(|c| atoms.iter().map(|&(x, _)| c.iter().map(|&i| data.kernel.ln_density(data.y[i], x)).sum()).collect())
        .collect();
    let n = data.n() as f64;
    let ln_f = |u: f64| -> Result<f64> {
        let mut acc = (n - 1.0) * u.ln();
        for (&(_, a), rho) in atoms.iter().zip(rhos) {
            acc -= a * rho.laplace(Complex64::new(u, 0.0))?.re;
        }
        for (c, row) in partition.iter().zip(&ln_k) {
            let mut terms = Vec::with_capacity(atoms.len());
            for ((&(_, a), rho), &lk) in atoms.iter().zip(rhos).zip(row) {
                terms.push(a.ln() + rho.ln_moment_real(c.len() as u32, u)? + lk);
            }
            let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            acc += top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
        }
        Ok(acc)
    };
    log_line_lognorm(ln_f, cfg)
}

/// ∫u^{n−1}e^{−ψ(u)}∏_j[∫∏_{i∈C_j}k(Y_i, x)τ_{n_j}(u|x)α(dx)]du for one partition
/// of the observation indices.
pub fn marginal_latent_weight(
    model: &dyn CrmModel,
    data: &MixtureData,
    partition: &[Vec<usize>],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(ln_partition_weight(model, data, partition, cfg)?.exp())
}

/// Every partition of the observation indices with its normalized posterior weight.
pub fn partition_weights(
    model: &dyn CrmModel,
    data: &MixtureData,
    cfg: &QuadratureConfig,
) -> Result<Vec<(Vec<Vec<usize>>, f64)>> {
    let mut out = Vec::new();
    for p in set_partitions(data.n())? {
        let lw = ln_partition_weight(model, data, &p, cfg)?;
        out.push((p, lw));
    }
    let top = out.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Special("every partition has zero weight".into()));
    }
    let total: f64 = out.iter().map(|p| (p.1 - top).exp()).sum();
    for p in &mut out {
        p.1 = (p.1 - top).exp() / total;
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
