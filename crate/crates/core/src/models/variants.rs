use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CrmModel, Intensity, ModelKind, SampleSummary};
use crate::error::{Error, Result};
use crate::measure::BaseMeasure;
use crate::numerics::special::{ln_gamma_fn as ln_gamma, upper_incomplete_gamma};

fn parse<T: for<'de> Deserialize<'de>>(spec: &Value) -> Result<T> {
    Ok(serde_json::from_value(spec.clone())?)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

fn check_probability(p0: &BaseMeasure) -> Result<()> {
    if p0.is_probability(1e-12) {
        Ok(())
    } else {
        Err(Error::invalid(format!("p0 must have total mass 1, got {}", p0.total_mass())))
    }
}

/// Gamma CRM with α = base; normalizes to the Dirichlet process.
#[derive(Debug, Clone)]
pub struct DirichletProcess {
    base: BaseMeasure,
    rho: Vec<Intensity>,
}

impl DirichletProcess {
    pub fn new(base: BaseMeasure) -> Self {
        let rho = vec![Intensity::Gamma { rate: 1.0 }; base.len()];
        Self { base, rho }
    }
}

impl CrmModel for DirichletProcess {
    fn name(&self) -> &'static str {
        "dirichlet"
    }
    fn kind(&self) -> ModelKind {
        ModelKind::Dirichlet
    }
    fn base(&self) -> &BaseMeasure {
        &self.base
    }
    fn atom_intensities(&self) -> &[Intensity] {
        &self.rho
    }
    fn intensity_at(&self, _x: f64) -> Intensity {
        Intensity::Gamma { rate: 1.0 }
    }
    fn to_json(&self) -> Value {
        json!({"variant": "dirichlet", "base": self.base})
    }
    fn ln_normalizer_closed(&self, s: &SampleSummary) -> Option<Result<f64>> {
        if s.is_empty() {
            return None;
        }
        // ∏Γ(n_j) · Γ(a)Γ(n)/Γ(a+n)
        let a = self.base.total_mass();
        let n = s.n() as f64;
        let prod: f64 = s.distinct().iter().map(|p| ln_gamma(p.1 as f64)).sum();
        Some(Ok(prod + ln_gamma(a) + ln_gamma(n) - ln_gamma(a + n)))
    }
}

/// β(x) for the extended gamma intensity: a constant or right-continuous steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaFn {
    Constant(f64),
    /// (x_from, value) pairs; β(x) is the value of the last step with x_from ≤ x,
    /// and the first value below the first breakpoint.
    Steps(Vec<(f64, f64)>),
}

impl BetaFn {
    fn validate(&mut self) -> Result<()> {
        let ok = |b: f64| b > 0.0 && b.is_finite();
        match self {
            BetaFn::Constant(b) if !ok(*b) => Err(Error::invalid(format!("beta must be positive, got {b}"))),
            BetaFn::Steps(steps) => {
                if steps.is_empty() {
                    return Err(Error::invalid("beta table is empty"));
                }
                if let Some(bad) = steps.iter().find(|s| !ok(s.1) || !s.0.is_finite()) {
                    return Err(Error::invalid(format!("invalid beta step {bad:?}")));
                }
                steps.sort_by(|a, b| a.0.total_cmp(&b.0));
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BetaFn::Constant(b) => *b,
            BetaFn::Steps(steps) => {
                let i = steps.partition_point(|s| s.0 <= x);
                steps[i.saturating_sub(1)].1
            }
        }
    }
}

/// Gamma CRM with location-dependent scale β(x).
#[derive(Debug, Clone)]
pub struct ExtendedGamma {
    base: BaseMeasure,
    beta: BetaFn,
    rho: Vec<Intensity>,
}

impl ExtendedGamma {
    pub fn new(base: BaseMeasure, mut beta: BetaFn) -> Result<Self> {
        beta.validate()?;
        let rho = base.locations().map(|x| Intensity::Gamma { rate: beta.eval(x) }).collect();
        Ok(Self { base, beta, rho })
    }

    pub fn beta(&self, x: f64) -> f64 {
        self.beta.eval(x)
    }
}

impl CrmModel for ExtendedGamma {
    fn name(&self) -> &'static str {
        "extended_gamma"
    }
    fn kind(&self) -> ModelKind {
        ModelKind::ExtendedGamma
    }
    fn base(&self) -> &BaseMeasure {
        &self.base
    }
    fn atom_intensities(&self) -> &[Intensity] {
        &self.rho
    }
    fn intensity_at(&self, x: f64) -> Intensity {
        Intensity::Gamma { rate: self.beta.eval(x) }
    }
    fn to_json(&self) -> Value {
        json!({"variant": "extended_gamma", "base": self.base, "beta": self.beta})
    }
}

/// Generalized gamma CRM normalised to τ = 1, α = β·P₀.
#[derive(Debug, Clone)]
pub struct GeneralizedGamma {
    gamma: f64,
    beta: f64,
    p0: BaseMeasure,
    alpha: BaseMeasure,
    rho: Vec<Intensity>,
}

impl GeneralizedGamma {
    pub fn new(gamma: f64, beta: f64, p0: BaseMeasure) -> Result<Self> {
        check_gamma(gamma)?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        check_probability(&p0)?;
        let alpha = p0.scaled(beta);
        let rho = vec![Intensity::GenGamma { gamma, rate: 1.0 }; p0.len()];
        Ok(Self { gamma, beta, p0, alpha, rho })
    }

    /// From the raw intensity γ/Γ(1−γ) v^{−1−γ} e^{−τv} dv α(dx): β = α(X)τ^γ, P₀ = α/α(X).
    pub fn from_raw(gamma: f64, tau: f64, alpha: &BaseMeasure) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        check_gamma(gamma)?;
        Self::new(gamma, alpha.total_mass() * tau.powf(gamma), alpha.normalized())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p0(&self) -> &BaseMeasure {
        &self.p0
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.gamma, beta, self.p0.clone())
    }
}

/// Σ_{j<n} binom(n−1, j)(−1)^j β^{j/γ} Γ(n(π) − j/γ; β), the sum in the closed-form normalizer.
pub fn gg_paper_denominator(gamma: f64, beta: f64, sample: &SampleSummary) -> Result<f64> {
    Ok(gg_sum_terms(gamma, beta, sample)?.iter().sum())
}

fn gg_sum_terms(gamma: f64, beta: f64, sample: &SampleSummary) -> Result<Vec<f64>> {
    let n = sample.n() as usize;
    let k = sample.n_clusters() as f64;
    let mut terms = Vec::with_capacity(n);
    let mut binom = 1.0;
    for j in 0..n {
        let jf = j as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let g = upper_incomplete_gamma(k - jf / gamma, beta)?;
        terms.push(sign * binom * beta.powf(jf / gamma) * g);
        binom *= (n - 1 - j) as f64 / (jf + 1.0);
    }
    Ok(terms)
}

/// ln D for the generalized gamma latent normalizer by the binomial / incomplete-gamma sum.
pub(crate) fn gg_ln_normalizer(gamma: f64, beta: f64, sample: &SampleSummary) -> Result<(f64, f64)> {
    let terms = gg_sum_terms(gamma, beta, sample)?;
    let s: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if !(s > 0.0) {
        return Err(Error::Special(format!("generalized gamma normalizer sum is {s}")));
    }
    let k = sample.n_clusters() as f64;
    let pochs: f64 = sample
        .distinct()
        .iter()
        .map(|p| ln_gamma(p.1 as f64 - gamma) - ln_gamma(1.0 - gamma))
        .sum();
    let ln_d = (k - 1.0) * gamma.ln() + pochs + beta - k * beta.ln() + s.ln();
    // relative conditioning of the alternating sum
    Ok((ln_d, scale / s))
}

impl CrmModel for GeneralizedGamma {
    fn name(&self) -> &'static str {
        "generalized_gamma"
    }
    fn kind(&self) -> ModelKind {
        ModelKind::GeneralizedGamma { gamma: self.gamma, beta: self.beta }
    }
    fn base(&self) -> &BaseMeasure {
        &self.alpha
    }
    fn atom_intensities(&self) -> &[Intensity] {
        &self.rho
    }
    fn intensity_at(&self, _x: f64) -> Intensity {
        Intensity::GenGamma { gamma: self.gamma, rate: 1.0 }
    }
    fn to_json(&self) -> Value {
        json!({"variant": "generalized_gamma", "gamma": self.gamma, "beta": self.beta, "p0": self.p0})
    }
    fn ln_normalizer_closed(&self, s: &SampleSummary) -> Option<Result<f64>> {
        if s.is_empty() {
            return None;
        }
        match gg_ln_normalizer(self.gamma, self.beta, s) {
            // beyond ~1e6 cancellation the sum loses more than six digits; use quadrature
            Ok((_, cond)) if cond > 1e6 => None,
            Ok((v, _)) => Some(Ok(v)),
            Err(e) => Some(Err(e)),
        }
    }
}

/// γ-stable CRM; only simulation and the predictive rule use it.
#[derive(Debug, Clone)]
pub struct Stable {
    gamma: f64,
    p0: BaseMeasure,
    rho: Vec<Intensity>,
}

impl Stable {
    pub fn new(gamma: f64, p0: BaseMeasure) -> Result<Self> {
        check_gamma(gamma)?;
        check_probability(&p0)?;
        let rho = vec![Intensity::GenGamma { gamma, rate: 0.0 }; p0.len()];
        Ok(Self { gamma, p0, rho })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl CrmModel for Stable {
    fn name(&self) -> &'static str {
        "stable"
    }
    fn kind(&self) -> ModelKind {
        ModelKind::Stable { gamma: self.gamma }
    }
    fn base(&self) -> &BaseMeasure {
        &self.p0
    }
    fn atom_intensities(&self) -> &[Intensity] {
        &self.rho
    }
    fn intensity_at(&self, _x: f64) -> Intensity {
        Intensity::GenGamma { gamma: self.gamma, rate: 0.0 }
    }
    fn to_json(&self) -> Value {
        json!({"variant": "stable", "gamma": self.gamma, "p0": self.p0})
    }
    fn supports_exact(&self) -> bool {
        false
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirichletSpec {
    #[allow(dead_code)]
    variant: String,
    base: BaseMeasure,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtendedGammaSpec {
    #[allow(dead_code)]
    variant: String,
    base: BaseMeasure,
    beta: BetaFn,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GeneralizedGammaSpec {
    Normalized {
        gamma: f64,
        beta: f64,
        p0: BaseMeasure,
    },
    Raw {
        gamma: f64,
        tau: f64,
        alpha: BaseMeasure,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StableSpec {
    #[allow(dead_code)]
    variant: String,
    gamma: f64,
    p0: BaseMeasure,
}

pub(super) fn build_dirichlet(spec: &Value) -> Result<Arc<dyn CrmModel>> {
    let s: DirichletSpec = parse(spec)?;
    Ok(Arc::new(DirichletProcess::new(s.base)))
}

pub(super) fn build_extended_gamma(spec: &Value) -> Result<Arc<dyn CrmModel>> {
    let s: ExtendedGammaSpec = parse(spec)?;
    Ok(Arc::new(ExtendedGamma::new(s.base, s.beta)?))
}

pub(super) fn build_generalized_gamma(spec: &Value) -> Result<Arc<dyn CrmModel>> {
    let m = match parse::<GeneralizedGammaSpec>(spec)? {
        GeneralizedGammaSpec::Normalized { gamma, beta, p0 } => GeneralizedGamma::new(gamma, beta, p0)?,
        GeneralizedGammaSpec::Raw { gamma, tau, alpha } => GeneralizedGamma::from_raw(gamma, tau, &alpha)?,
    };
    Ok(Arc::new(m))
}

pub(super) fn build_stable(spec: &Value) -> Result<Arc<dyn CrmModel>> {
    let s: StableSpec = parse(spec)?;
    Ok(Arc::new(Stable::new(s.gamma, s.p0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_atomic_measure;

    #[test]
    fn beta_steps() {
        let mut b = BetaFn::Steps(vec![(0.5, 2.0), (-1.0, 1.0)]);
        b.validate().unwrap();
        assert_eq!(b.eval(-5.0), 1.0);
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(0.5), 2.0);
        assert_eq!(b.eval(9.0), 2.0);
    }

    #[test]
    fn gg_denominator_single_observation() {
        let s = SampleSummary::new(vec![(0.0, 1)]).unwrap();
        let sum = gg_paper_denominator(0.5, 1.0, &s).unwrap();
        assert!((sum - (-1.0f64).exp()).abs() < 1e-15);
        // scaled by γβ^{n(π)} as in the normalizer display
        assert!((0.5 * sum - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        let p0 = build_atomic_measure([(0.0, 1.0)]).unwrap();
        let m = GeneralizedGamma::new(0.5, 1.0, p0).unwrap();
        let ln_d = m.ln_normalizer_closed(&s).unwrap().unwrap();
        assert!(ln_d.abs() < 1e-14, "D = {}", ln_d.exp());
    }
}
