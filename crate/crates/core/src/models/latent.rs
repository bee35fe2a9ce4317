use num_complex::Complex64;

use super::{require_exact, CrmModel, Intensity, SampleSummary};
use crate::error::{Error, Result};
use crate::numerics::logline::{log_line_lognorm, log_line_rule};
use crate::numerics::QuadratureConfig;

/// Law of the latent variable U_n given the sample, with density
/// u^{n−1}∏_j τ_{n_j}(u|X*_j)e^{−ψ(u·1)} / D.
#[derive(Debug, Clone)]
pub struct LatentLaw {
    psi: Vec<(Intensity, f64)>,
    clusters: Vec<(Intensity, u32)>,
    n: u32,
    ln_norm: f64,
}

impl LatentLaw {
    pub fn new(model: &dyn CrmModel, sample: &SampleSummary, cfg: &QuadratureConfig) -> Result<Self> {
        let mut law = Self::unnormalized(model, sample)?;
        law.ln_norm = match model.ln_normalizer_closed(sample) {
            Some(r) => r?,
            None => law.ln_norm_quadrature(cfg)?,
        };
        Ok(law)
    }

    fn unnormalized(model: &dyn CrmModel, sample: &SampleSummary) -> Result<Self> {
        require_exact(model, "latent_u_density")?;
        if sample.is_empty() {
            return Err(Error::invalid("the latent variable needs a non-empty sample"));
        }
        let psi = model
            .atom_intensities()
            .iter()
            .copied()
            .zip(model.base().weights())
            .collect();
        let clusters = sample.distinct().iter().map(|&(x, nj)| (model.intensity_at(x), nj)).collect();
        Ok(Self { psi, clusters, n: sample.n(), ln_norm: 0.0 })
    }

    /// ln of the unnormalized density at u > 0.
    pub fn ln_unnormalized(&self, u: f64) -> Result<f64> {
        let mut acc = (self.n as f64 - 1.0) * u.ln();
        for &(rho, nj) in &self.clusters {
            acc += rho.ln_moment_real(nj, u)?;
        }
        for &(rho, m) in &self.psi {
            acc -= m * rho.laplace(Complex64::new(u, 0.0))?.re;
        }
        Ok(acc)
    }

    pub fn ln_normalizer(&self) -> f64 {
        self.ln_norm
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn density(&self, u: f64) -> Result<f64> {
        if u < 0.0 || !u.is_finite() {
            return Err(Error::invalid(format!("latent density needs finite u >= 0, got {u}")));
        }
        if u == 0.0 {
            // u^{n−1} vanishes unless n = 1
            return if self.n == 1 { Ok((self.ln_unnormalized(f64::MIN_POSITIVE)? - self.ln_norm).exp()) } else { Ok(0.0) };
        }
        Ok((self.ln_unnormalized(u)? - self.ln_norm).exp())
    }

    /// ln D by adaptive quadrature on the log line.
    pub fn ln_norm_quadrature(&self, cfg: &QuadratureConfig) -> Result<f64> {
        log_line_lognorm(|u| self.ln_unnormalized(u), cfg)
    }

    /// Quadrature nodes (u_i, w_i) with Σw_i = 1 approximating E[f(U_n)].
    pub fn rule(&self, cfg: &QuadratureConfig) -> Result<Vec<(f64, f64)>> {
        log_line_rule(|u| self.ln_unnormalized(u), cfg)
    }
}

/// Normalized density of U_n at u.
pub fn latent_u_density(model: &dyn CrmModel, s: &SampleSummary, u: f64) -> Result<f64> {
    LatentLaw::new(model, s, &QuadratureConfig::default())?.density(u)
}

/// ln ∫u^{n−1}∏τ_{n_j}(u)e^{−ψ(u·1)}du, closed form when known.
pub fn latent_u_lognorm(model: &dyn CrmModel, s: &SampleSummary) -> Result<f64> {
    Ok(LatentLaw::new(model, s, &QuadratureConfig::default())?.ln_normalizer())
}

/// The same normalizer by quadrature, ignoring any closed form.
pub fn latent_u_lognorm_quadrature(model: &dyn CrmModel, s: &SampleSummary, cfg: &QuadratureConfig) -> Result<f64> {
    LatentLaw::unnormalized(model, s)?.ln_norm_quadrature(cfg)
}
