//! Posterior law of the mean functional P̃(g) given an exchangeable sample.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DistributionGrid;
use crate::measure::MeanFunction;
use crate::models::kernels::Field;
use crate::models::{require_exact, CrmModel, Intensity, LatentLaw, ModelKind, SampleSummary};
use crate::numerics::inversion::gil_pelaez_enveloped;
use crate::numerics::quad::{double_quad_planned, panels_to_infinity, PanelPlan, WithEnvelope};
use crate::numerics::{double_quad, gauss_2f1, semi_infinite_quad, QuadResult, QuadratureConfig};
use crate::prior::{check_betas, exact, outside_hull, spread, PriorMeanLaw};

/// How the conditional law given the latent variable is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorRoute {
    /// Tilted CRM plus independent fixed-location jumps.
    #[default]
    General,
    /// Gamma-type intensities only: the observations enter the base measure
    /// as extra mass n_j at X*_j and the rates shift by u.
    QuasiConjugate,
}

/// How the posterior density is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityRoute {
    /// Conditional on U_n = u the density at σ is (1/π)∫₀^∞ Re E[T e^{itT(P̃(g)−σ)}] dt,
    /// with T the total mass; mixed over the latent rule.
    #[default]
    LatentMixture,
    /// Iterated (z, t) integral of χ_g with the parity kernel; exact when the density
    /// vanishes to order n − 2 at the lower end of the hull.
    Chi,
}

/// Posterior law of P̃(g) for a fixed model, mean function and sample.
#[derive(Debug, Clone)]
pub struct PosteriorMeanLaw<'a> {
    model: &'a dyn CrmModel,
    field: Field,
    clusters: Vec<(f64, Intensity, u32)>,
    latent: Option<LatentLaw>,
    rule: Vec<(f64, f64)>,
    prior: PriorMeanLaw<'a>,
    hull: (f64, f64),
}

impl<'a> PosteriorMeanLaw<'a> {
    pub fn new(model: &'a dyn CrmModel, g: &MeanFunction, sample: &SampleSummary, cfg: &QuadratureConfig) -> Result<Self> {
        require_exact(model, "posterior")?;
        cfg.validate()?;
        let prior = PriorMeanLaw::new(model, g)?;
        let field = Field::new(model, g)?;
        let mut clusters = Vec::with_capacity(sample.n_clusters());
        for &(x, nj) in sample.distinct() {
            clusters.push((g.eval(x)?, model.intensity_at(x), nj));
        }
        let mut hull = (field.g_min, field.g_max);
        for c in &clusters {
            hull = (hull.0.min(c.0), hull.1.max(c.0));
        }
        let (latent, rule) = if sample.is_empty() {
            (None, Vec::new())
        } else {
            let law = LatentLaw::new(model, sample, cfg)?;
            let rule = law.rule(cfg)?;
            (Some(law), rule)
        };
        Ok(Self { model, field, clusters, latent, rule, prior, hull })
    }

    pub fn hull(&self) -> (f64, f64) {
        self.hull
    }

    pub fn n(&self) -> u32 {
        self.clusters.iter().map(|c| c.2).sum()
    }

    pub fn latent(&self) -> Option<&LatentLaw> {
        self.latent.as_ref()
    }

    /// χ_g(t, z) = e^{−ψ(−it(g−z))}∏_j κ_{n_j}(it[g(X*_j)−z]) / (πD).
    pub fn chi(&self, t: f64, z: f64) -> Result<Complex64> {
        let ln_d = self.latent.as_ref().map_or(0.0, LatentLaw::ln_normalizer);
        let mut ln = -self.field.psi_charfn(0.0, t, z)? - ln_d;
        for &(gj, rho, nj) in &self.clusters {
            ln += rho.ln_moment(nj, Complex64::new(0.0, -t * (gj - z)))?;
        }
        Ok(ln.exp() / PI)
    }

    /// Posterior density at σ by the default route.
    pub fn density(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        self.density_by(sigma, DensityRoute::default(), cfg)
    }

    pub fn density_by(&self, sigma: f64, route: DensityRoute, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        let n = self.n();
        if n == 0 {
            return self.prior.density(sigma, cfg);
        }
        let (lo, hi) = self.hull;
        if sigma < lo || sigma > hi || lo == hi {
            return Ok(exact(0.0));
        }
        match route {
            DensityRoute::LatentMixture => self.density_latent_mixture(sigma, cfg),
            DensityRoute::Chi if n == 1 => semi_infinite_quad(|t| Ok(self.chi(t, sigma)?.re), cfg),
            // Re or Im (by parity) of ∫t^{n−1}χ(t,z)dt equals ±f^{(n−1)}(z)/(n−1)!,
            // so the density carries the weight (n−1)(σ−z)^{n−2}.
            DensityRoute::Chi => self.parity_integral(sigma, n as i32 - 2, (n - 1) as f64, cfg),
        }
    }

    fn density_latent_mixture(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        let term = |u: f64, t: f64| -> Result<Complex64> {
            let mut ln = -self.field.psi_charfn(u, t, sigma)?;
            let mut mass = Complex64::new(0.0, 0.0);
            for &(gk, rho, m) in &self.field.groups {
                mass += rho.moment(1, Complex64::new(u, -t * (gk - sigma)))? * m;
            }
            for &(gj, rho, nj) in &self.clusters {
                let c = Complex64::new(0.0, t * (gj - sigma));
                ln += rho.jump_charfn(nj, u, c)?.ln();
                let (shape, rate) = rho.jump_law(nj, u);
                mass += shape / (rate - c);
            }
            Ok(ln.exp() * mass)
        };
        let mut f = WithEnvelope(|t: f64| -> Result<(f64, f64)> {
            let (mut acc, mut env) = (0.0, 0.0);
            for &(u, w) in &self.rule {
                let v = term(u, t)?;
                acc += w * v.re;
                env += w * v.norm();
            }
            Ok((acc / PI, env / PI))
        });
        let first = 1.0 / spread(self.hull, sigma);
        let plan = PanelPlan { start: 0.0, first_end: first, min_end: first, quiet_panels: 2, taper_on_stall: false };
        panels_to_infinity(&mut f, plan, cfg)
    }

    /// Posterior CDF at σ from the parity kernel [(σ−z)t]^{n−1}; needs n ≥ 2.
    pub fn cdf_parity(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        let n = self.n();
        if n < 2 {
            return Err(Error::invalid("the parity CDF needs at least two observations"));
        }
        if let Some(v) = outside_hull(self.hull, sigma) {
            return Ok(exact(v));
        }
        self.parity_integral(sigma, n as i32 - 1, 1.0, cfg)
    }

    /// factor·sign·∫_{min g}^σ (σ−z)^{power} ∫₀^∞ t^{n−1} part{χ(t,z)} dt dz.
    fn parity_integral(&self, sigma: f64, power: i32, factor: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        let n = self.n();
        let p = n / 2;
        let (even, sign) = if n.is_multiple_of(2) {
            (true, if p.is_multiple_of(2) { -1.0 } else { 1.0 })
        } else {
            (false, if p.is_multiple_of(2) { 1.0 } else { -1.0 })
        };
        let tpow = (n - 1) as i32;
        let lo = self.hull.0;
        let points = self.breakpoints();
        let mut breaks: Vec<f64> = points.iter().copied().filter(|&b| b > lo && b < sigma).collect();
        breaks.insert(0, lo);
        breaks.push(sigma);
        let mut total = exact(0.0);
        for w in breaks.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let r = double_quad_planned(
                |z, t| {
                    let c = self.chi(t, z)?;
                    let part = if even { c.im } else { c.re };
                    Ok((sigma - z).powi(power) * t.powi(tpow) * part)
                },
                |z| self.inner_plan(z, &points),
                w[0],
                w[1],
                cfg,
            )?;
            total.value += r.value;
            total.err_estimate += r.err_estimate;
            total.subdivisions_used += r.subdivisions_used;
            total.truncation_t = total.truncation_t.max(r.truncation_t);
        }
        total.value *= sign * factor;
        total.err_estimate *= factor;
        Ok(total)
    }

    /// Inner t-panels for fixed z: χ only decays once t exceeds 1/|g − z| for every
    /// g-value distinct from z, so truncation is not allowed before that.
    fn inner_plan(&self, z: f64, points: &[f64]) -> PanelPlan {
        let far = points.iter().map(|&p| (p - z).abs()).fold(0.0, f64::max).max(1e-300);
        let near = points.iter().map(|&p| (p - z).abs()).filter(|&d| d > 0.0).fold(far, f64::min);
        let first = 1.0 / far;
        PanelPlan { start: 0.0, first_end: first, min_end: (32.0 / near).clamp(first, 1e250), quiet_panels: 2, taper_on_stall: false }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.field.groups.iter().map(|e| e.0).chain(self.clusters.iter().map(|c| c.0)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Posterior CDF at σ by inversion of the u-mixed characteristic function.
    pub fn cdf(&self, sigma: f64, route: PosteriorRoute, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if self.n() == 0 {
            return self.prior.cdf(sigma, cfg);
        }
        if let Some(v) = outside_hull(self.hull, sigma) {
            return Ok(exact(v));
        }
        let qc_field = match route {
            PosteriorRoute::General => None,
            PosteriorRoute::QuasiConjugate => Some(self.quasi_conjugate_field()?),
        };
        let conditional = |u: f64, t: f64| -> Result<Complex64> {
            match &qc_field {
                Some(f) => Ok((-f.psi_charfn(u, t, sigma)?).exp()),
                None => {
                    let mut ln = -self.field.psi_charfn(u, t, sigma)?;
                    for &(gj, rho, nj) in &self.clusters {
                        ln += rho.jump_charfn(nj, u, Complex64::new(0.0, t * (gj - sigma)))?.ln();
                    }
                    Ok(ln.exp())
                }
            }
        };
        gil_pelaez_enveloped(
            |t| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut env = 0.0;
                for &(u, w) in &self.rule {
                    let c = conditional(u, t)?;
                    acc += c * w;
                    env += w * c.norm();
                }
                Ok((acc, env))
            },
            spread(self.hull, sigma),
            cfg,
        )
    }

    fn quasi_conjugate_field(&self) -> Result<Field> {
        if !matches!(self.model.kind(), ModelKind::Dirichlet | ModelKind::ExtendedGamma) {
            return Err(Error::Unsupported { model: self.model.name(), op: "quasi-conjugate posterior route" });
        }
        let extra = self.clusters.iter().map(|&(gj, rho, nj)| (gj, rho, nj as f64));
        Ok(Field::from_items(self.field.groups.iter().copied().chain(extra)))
    }

    pub fn cdf_grid(&self, sigmas: &[f64], route: PosteriorRoute, cfg: &QuadratureConfig) -> Result<DistributionGrid> {
        DistributionGrid::evaluate(sigmas, |s| self.cdf(s, route, cfg).map(|r| (r.value, r.err_estimate)))
    }

    pub fn density_grid(&self, sigmas: &[f64], route: DensityRoute, cfg: &QuadratureConfig) -> Result<DistributionGrid> {
        DistributionGrid::evaluate(sigmas, |s| self.density_by(s, route, cfg).map(|r| (r.value, r.err_estimate)))
    }
}

/// χ_g(t, z) for a one-off evaluation.
pub fn chi_integrand(
    model: &dyn CrmModel,
    sample: &SampleSummary,
    g: &MeanFunction,
    t: f64,
    z: f64,
) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("chi needs t >= 0, got {t}")));
    }
    PosteriorMeanLaw::new(model, g, sample, &QuadratureConfig::default())?.chi(t, z)
}

pub fn posterior_density(
    model: &dyn CrmModel,
    g: &MeanFunction,
    sample: &SampleSummary,
    sigmas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<DistributionGrid> {
    PosteriorMeanLaw::new(model, g, sample, cfg)?.density_grid(sigmas, DensityRoute::default(), cfg)
}

pub fn posterior_cdf(
    model: &dyn CrmModel,
    g: &MeanFunction,
    sample: &SampleSummary,
    sigmas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<DistributionGrid> {
    PosteriorMeanLaw::new(model, g, sample, cfg)?.cdf_grid(sigmas, PosteriorRoute::General, cfg)
}

fn check_unit(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::invalid(format!("argument must lie in [0, 1], got {z}")))
    }
}

/// Posterior density of P̃(A) after one observation in A, extended gamma model with
/// β = β₁ on A, β₂ off A and α(A) = α(Aᶜ) = 1:
/// 2β₁²z / (₂F₁(2,1;3;1−β₂/β₁)[β₁z + β₂(1−z)]²).
pub fn eg_indicator_posterior_closed(beta1: f64, beta2: f64, z: f64) -> Result<f64> {
    check_betas(beta1, beta2)?;
    check_unit(z)?;
    let f = gauss_2f1(2.0, 1.0, 3.0, 1.0 - beta2 / beta1)?;
    let d = beta1 * z + beta2 * (1.0 - z);
    Ok(2.0 * beta1 * beta1 * z / (f * d * d))
}

/// CDF of [`eg_indicator_posterior_closed`], integrated in closed form.
pub fn eg_indicator_posterior_cdf_closed(beta1: f64, beta2: f64, sigma: f64) -> Result<f64> {
    check_betas(beta1, beta2)?;
    if sigma <= 0.0 {
        return Ok(0.0);
    }
    if sigma >= 1.0 {
        return Ok(1.0);
    }
    let f = gauss_2f1(2.0, 1.0, 3.0, 1.0 - beta2 / beta1)?;
    // ∫₀^σ z/(b + cz)² dz = [ln(1+x) + 1/(1+x) − 1]/c², x = cσ/b
    let (b, c) = (beta2, beta1 - beta2);
    let x = c * sigma / b;
    let core = if x.abs() < 1e-3 {
        let mut acc = 0.0;
        let mut xk = x * x;
        for k in 2..12 {
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (kf - 1.0) / kf * xk;
            xk *= x;
        }
        acc * sigma * sigma / (x * x) / (b * b)
    } else {
        (x.ln_1p() + 1.0 / (1.0 + x) - 1.0) / (c * c)
    };
    Ok(2.0 * beta1 * beta1 * core / f)
}

/// Right-hand side of the integral representation of ₂F₁(α₁(A), 1; a + 1; 1 − β₂/β₁)
/// obtained by normalizing the extended gamma posterior density of P̃(A) after
/// one observation in A, with α(A) = `alpha_a`, α(Aᶜ) = `alpha_ac`, a = their sum.
pub fn hypergeometric_integral_representation(
    beta1: f64,
    beta2: f64,
    alpha_a: f64,
    alpha_ac: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<f64>> {
    check_betas(beta1, beta2)?;
    if !(alpha_a > 0.0 && alpha_ac > 0.0) {
        return Err(Error::invalid("masses must be positive"));
    }
    let (m1, m2) = (alpha_a + 1.0, alpha_ac);
    let total = alpha_a + alpha_ac;
    let r = double_quad(
        |z, t| {
            let (s1, s2) = (t * (1.0 - z), -t * z);
            let modulus = -0.5 * (m1 * (beta1 * beta1 + s1 * s1).ln() + m2 * (beta2 * beta2 + s2 * s2).ln());
            let angle = m1 * (s1 / beta1).atan() + m2 * (s2 / beta2).atan();
            Ok(modulus.exp() * angle.cos())
        },
        0.0,
        1.0,
        cfg,
    )?;
    let scale = total / PI * beta1.powf(m1) * beta2.powf(m2 - 1.0);
    Ok(QuadResult { value: r.value * scale, err_estimate: r.err_estimate * scale, ..r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_atomic_measure, BaseMeasure};
    use crate::models::{BetaFn, DirichletProcess, ExtendedGamma, GeneralizedGamma};
    use statrs::distribution::{Beta, Continuous, ContinuousCDF};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn two_atoms(w0: f64, w1: f64) -> BaseMeasure {
        build_atomic_measure([(0.0, w0), (1.0, w1)]).unwrap()
    }

    fn ind_a() -> MeanFunction {
        MeanFunction::indicator(0.5, 1.5)
    }

    #[test]
    fn dirichlet_conjugacy_density_both_routes() {
        // (a0, a1) prior masses, (k0, k1) observations off and on A
        let cases = [(1.0, 1.0, 0, 1), (1.0, 1.0, 0, 2), (0.7, 1.3, 1, 1), (1.0, 1.0, 1, 2), (1.5, 0.8, 2, 2)];
        for (a0, a1, k0, k1) in cases {
            let d = DirichletProcess::new(two_atoms(a0, a1));
            let mut distinct = Vec::new();
            if k0 > 0 {
                distinct.push((0.0, k0));
            }
            if k1 > 0 {
                distinct.push((1.0, k1));
            }
            let s = SampleSummary::new(distinct).unwrap();
            let law = PosteriorMeanLaw::new(&d, &ind_a(), &s, &cfg()).unwrap();
            let beta = Beta::new(a1 + k1 as f64, a0 + k0 as f64).unwrap();
            // the parity kernel needs the density to vanish to order n − 2 at 0,
            // i.e. a1 + k1 − 1 > k0 + k1 − 2
            let chi_ok = a1 > k0 as f64 - 1.0;
            for z in [0.2, 0.5, 0.8] {
                for route in [DensityRoute::LatentMixture, DensityRoute::Chi] {
                    if route == DensityRoute::Chi && !chi_ok {
                        continue;
                    }
                    let v = law.density_by(z, route, &cfg()).unwrap().value;
                    assert!((v - beta.pdf(z)).abs() < 1e-5, "{route:?} {a0} {a1} {k0} {k1} z={z}: {v} vs {}", beta.pdf(z));
                }
                if k0 + k1 >= 2 && chi_ok {
                    let c = law.cdf_parity(z, &cfg()).unwrap().value;
                    assert!((c - beta.cdf(z)).abs() < 1e-5, "{c} vs {}", beta.cdf(z));
                }
            }
        }
    }

    #[test]
    fn chi_examples() {
        let d = DirichletProcess::new(two_atoms(1.0, 1.0));
        let s = SampleSummary::new(vec![(1.0, 1)]).unwrap();
        let c0 = chi_integrand(&d, &s, &ind_a(), 0.0, 0.3).unwrap();
        // ∏τ(0)/(πD) with τ₁(0) = 1 and D = 1/2
        assert!((c0 - Complex64::new(2.0 / PI, 0.0)).norm() < 1e-14);
        let law = PosteriorMeanLaw::new(&d, &ind_a(), &s, &cfg()).unwrap();
        assert!((law.density(0.5, &cfg()).unwrap().value - 1.0).abs() < 1e-7);
        assert!(chi_integrand(&d, &s, &ind_a(), -1.0, 0.3).is_err());
    }

    #[test]
    fn dirichlet_conjugacy_cdf_both_routes() {
        let d = DirichletProcess::new(two_atoms(1.0, 1.0));
        let s = SampleSummary::new(vec![(1.0, 1)]).unwrap();
        let law = PosteriorMeanLaw::new(&d, &ind_a(), &s, &cfg()).unwrap();
        let v = law.cdf(0.5, PosteriorRoute::General, &cfg()).unwrap().value;
        assert!((v - 0.25).abs() < 1e-5);
        let d = DirichletProcess::new(two_atoms(0.6, 1.7));
        let s = SampleSummary::new(vec![(0.0, 2), (1.0, 1)]).unwrap();
        let law = PosteriorMeanLaw::new(&d, &ind_a(), &s, &cfg()).unwrap();
        let beta = Beta::new(2.7, 2.6).unwrap();
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for route in [PosteriorRoute::General, PosteriorRoute::QuasiConjugate] {
            let grid = law.cdf_grid(&xs, route, &cfg()).unwrap();
            assert!(grid.sup_distance(|s| beta.cdf(s)) < 1e-5, "{route:?}");
        }
    }

    fn eg_example(b1: f64, b2: f64) -> ExtendedGamma {
        ExtendedGamma::new(two_atoms(1.0, 1.0), BetaFn::Steps(vec![(0.0, b2), (0.5, b1)])).unwrap()
    }

    #[test]
    fn extended_gamma_single_observation_closed_form() {
        let one = SampleSummary::new(vec![(1.0, 1)]).unwrap();
        let eg = eg_example(2.0, 1.0);
        let law = PosteriorMeanLaw::new(&eg, &ind_a(), &one, &cfg()).unwrap();
        for i in 1..10 {
            let z = i as f64 / 10.0;
            let want = eg_indicator_posterior_closed(2.0, 1.0, z).unwrap();
            for route in [DensityRoute::LatentMixture, DensityRoute::Chi] {
                let got = law.density_by(z, route, &cfg()).unwrap().value;
                assert!((got - want).abs() < 1e-6, "z={z}: {got} {want}");
            }
            let want = eg_indicator_posterior_cdf_closed(2.0, 1.0, z).unwrap();
            for route in [PosteriorRoute::General, PosteriorRoute::QuasiConjugate] {
                let got = law.cdf(z, route, &cfg()).unwrap().value;
                assert!((got - want).abs() < 1e-6, "z={z}: {got} {want}");
            }
        }
        let eq = eg_example(1.5, 1.5);
        let law = PosteriorMeanLaw::new(&eq, &ind_a(), &one, &cfg()).unwrap();
        for z in [0.1, 0.5, 0.9] {
            assert!((law.density(z, &cfg()).unwrap().value - 2.0 * z).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_examples() {
        assert!((eg_indicator_posterior_closed(1.7, 1.7, 0.3).unwrap() - 0.6).abs() < 1e-15);
        let v = eg_indicator_posterior_closed(2.0, 1.0, 1.0).unwrap();
        assert!((v - 2.0 / (8.0 * 2f64.ln() - 4.0)).abs() < 1e-12);
        let v = eg_indicator_posterior_closed(2.0, 1.0, 0.5).unwrap();
        assert!((v - 4.0 / (1.545_177_444_479_562 * 2.25)).abs() < 1e-12);
        // normalization and agreement of the CDF with a midpoint sum
        let n = 20000;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            acc += eg_indicator_posterior_closed(3.0, 1.0, (i as f64 + 0.5) * h).unwrap() * h;
            if i == n / 4 - 1 {
                assert!((acc - eg_indicator_posterior_cdf_closed(3.0, 1.0, 0.25).unwrap()).abs() < 1e-8);
            }
        }
        assert!((acc - 1.0).abs() < 1e-8);
        assert!((eg_indicator_posterior_cdf_closed(2.0, 2.0 + 1e-9, 0.6).unwrap() - 0.36).abs() < 1e-8);
        assert!(eg_indicator_posterior_closed(2.0, 1.0, 1.2).is_err());
    }

    #[test]
    fn hypergeometric_representation() {
        let r = hypergeometric_integral_representation(2.0, 1.0, 1.0, 1.0, &cfg()).unwrap();
        let series = gauss_2f1(2.0, 1.0, 3.0, 0.5).unwrap();
        assert!((r.value - series).abs() < 1e-6, "{} {series}", r.value);
        let r = hypergeometric_integral_representation(3.0, 1.2, 0.6, 1.4, &cfg()).unwrap();
        let series = gauss_2f1(1.6, 1.0, 3.0, 0.6).unwrap();
        assert!((r.value - series).abs() < 1e-6, "{} {series}", r.value);
    }

    #[test]
    fn generalized_gamma_density_matches_cdf() {
        let p0 = build_atomic_measure([(0.0, 0.3), (0.5, 0.3), (1.0, 0.4)]).unwrap();
        let gg = GeneralizedGamma::new(0.5, 1.0, p0).unwrap();
        let s = SampleSummary::new(vec![(0.0, 1), (1.0, 1)]).unwrap();
        let law = PosteriorMeanLaw::new(&gg, &MeanFunction::Identity, &s, &cfg()).unwrap();
        let n = 40;
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let dens = law.density_grid(&xs, DensityRoute::LatentMixture, &cfg()).unwrap();
        let chi = law.density_grid(&xs[1..n], DensityRoute::Chi, &cfg()).unwrap();
        for (i, &v) in chi.value.iter().enumerate() {
            assert!((v - dens.value[i + 1]).abs() < 1e-5, "{} {v} {}", xs[i + 1], dens.value[i + 1]);
        }
        let cdf = law.cdf_grid(&xs, PosteriorRoute::General, &cfg()).unwrap();
        // trapezoid on the density against the CDF
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for i in 1..=n {
            acc += 0.5 * (dens.value[i] + dens.value[i - 1]) / n as f64;
            worst = worst.max((acc - cdf.value[i]).abs());
        }
        assert!(worst < 2e-3, "{worst}");
        assert!(dens.value.iter().all(|&v| v > -1e-7));
    }

    #[test]
    fn empty_sample_is_prior() {
        let eg = eg_example(2.0, 1.0);
        let law = PosteriorMeanLaw::new(&eg, &ind_a(), &SampleSummary::empty(), &cfg()).unwrap();
        let prior = PriorMeanLaw::new(&eg, &ind_a()).unwrap();
        for s in [0.2, 0.7] {
            let a = law.cdf(s, PosteriorRoute::General, &cfg()).unwrap().value;
            let b = prior.cdf(s, &cfg()).unwrap().value;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_hull_and_unsupported() {
        let eg = eg_example(2.0, 1.0);
        let s = SampleSummary::new(vec![(1.0, 2)]).unwrap();
        let law = PosteriorMeanLaw::new(&eg, &ind_a(), &s, &cfg()).unwrap();
        assert_eq!(law.cdf(1.2, PosteriorRoute::General, &cfg()).unwrap().value, 1.0);
        assert_eq!(law.density(-0.2, &cfg()).unwrap().value, 0.0);
        let gg = GeneralizedGamma::new(0.5, 1.0, two_atoms(0.5, 0.5)).unwrap();
        let law = PosteriorMeanLaw::new(&gg, &ind_a(), &s, &cfg()).unwrap();
        assert!(matches!(law.cdf(0.5, PosteriorRoute::QuasiConjugate, &cfg()), Err(Error::Unsupported { .. })));
    }
}
