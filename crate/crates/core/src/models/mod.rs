//! CRM intensities behind a common trait, constructed by name from JSON.

mod intensity;
pub(crate) mod kernels;
mod latent;
mod sample;
mod variants;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::measure::BaseMeasure;

pub use intensity::Intensity;
pub use kernels::{jump_charfn, kappa_n, laplace_exponent, tau_n, tilted_laplace_exponent};
pub use latent::{latent_u_density, latent_u_lognorm, latent_u_lognorm_quadrature, LatentLaw};
pub use sample::SampleSummary;
pub use variants::{gg_paper_denominator, BetaFn, DirichletProcess, ExtendedGamma, GeneralizedGamma, Stable};

/// Coarse classification used by routes with model-specific closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Dirichlet,
    ExtendedGamma,
    GeneralizedGamma { gamma: f64, beta: f64 },
    Stable { gamma: f64 },
}

/// A completely random measure with intensity ρ(dv|x)α(dx) and atomic α.
pub trait CrmModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn kind(&self) -> ModelKind;

    /// The measure α (for the generalized gamma family, β·P₀).
    fn base(&self) -> &BaseMeasure;

    /// ρ at each atom of [`CrmModel::base`], in atom order.
    fn atom_intensities(&self) -> &[Intensity];

    /// ρ at an arbitrary location (observations need not be atoms).
    fn intensity_at(&self, x: f64) -> Intensity;

    fn to_json(&self) -> Value;

    /// Whether the exact prior/posterior inversion formulas apply.
    fn supports_exact(&self) -> bool {
        true
    }

    /// Closed-form ln ∫u^{n−1}∏τ_{n_j}(u)e^{−ψ(u)}du when one is known.
    fn ln_normalizer_closed(&self, _sample: &SampleSummary) -> Option<Result<f64>> {
        None
    }
}

pub type ModelBuilder = fn(&Value) -> Result<Arc<dyn CrmModel>>;

/// Name-keyed constructors for CRM models.
pub struct ModelRegistry {
    builders: BTreeMap<&'static str, ModelBuilder>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("dirichlet", variants::build_dirichlet);
        r.register("extended_gamma", variants::build_extended_gamma);
        r.register("generalized_gamma", variants::build_generalized_gamma);
        r.register("stable", variants::build_stable);
        r
    }

    pub fn register(&mut self, name: &'static str, builder: ModelBuilder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }

    /// Builds from `{"variant": name, ...}`.
    pub fn build(&self, spec: &Value) -> Result<Arc<dyn CrmModel>> {
        let name = spec
            .get("variant")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::invalid("model JSON needs a string field \"variant\""))?;
        let builder = self.builders.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::invalid(format!("unknown model variant {name:?}; known: {}", known.join(", ")))
        })?;
        builder(spec)
    }

    pub fn build_str(&self, json: &str) -> Result<Arc<dyn CrmModel>> {
        self.build(&serde_json::from_str(json)?)
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

pub(crate) fn require_exact(model: &dyn CrmModel, op: &'static str) -> Result<()> {
    if model.supports_exact() {
        Ok(())
    } else {
        Err(Error::Unsupported { model: model.name(), op })
    }
}
