//! Two-parameter Poisson–Dirichlet mean functionals, finite-dimensional
//! densities at γ = ½, the stable predictive rule and large-sample formulas.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{BaseMeasure, MeanFunction};
use crate::models::SampleSummary;
use crate::numerics::inversion::gil_pelaez_cdf_scaled;
use crate::numerics::logline::log_line_rule_panels;
use crate::numerics::special::ln_gamma_fn;
use crate::numerics::{integrate, QuadResult, QuadratureConfig};
use crate::prior::{exact, outside_hull, spread};

/// Widest log-line panel of the z-mixture rule.
const MIXTURE_PANEL: f64 = 4.0;

/// PD(γ, θ) with base probability P₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdModel {
    pub gamma: f64,
    pub theta: f64,
    pub p0: BaseMeasure,
}

impl PdModel {
    pub fn new(gamma: f64, theta: f64, p0: BaseMeasure) -> Result<Self> {
        let m = Self { gamma, theta, p0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.theta > -self.gamma) || !self.theta.is_finite() {
            return Err(Error::invalid(format!("theta must exceed -gamma, got {}", self.theta)));
        }
        if !self.p0.is_probability(1e-12) {
            return Err(Error::invalid(format!("p0 must have mass 1, got {}", self.p0.total_mass())));
        }
        Ok(())
    }

    fn require_positive_theta(&self) -> Result<()> {
        if self.theta > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("the mean law needs theta > 0, got {}", self.theta)))
        }
    }

    fn values(&self, g: &MeanFunction) -> Result<(Vec<f64>, (f64, f64))> {
        g.validate()?;
        let vals = g.values_on(&self.p0)?;
        let mut hull = (f64::INFINITY, f64::NEG_INFINITY);
        for (&v, w) in vals.iter().zip(self.p0.weights()) {
            if w > 0.0 {
                hull = (hull.0.min(v), hull.1.max(v));
            }
        }
        Ok((vals, hull))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

/// P(P̃_{γ,θ}(g) ≤ σ) = ½ − (1/π)∫₀^∞ t^{−1} Im (A − iB)^{−θ/γ} dt.
pub fn pd_mean_cdf(pd: &PdModel, g: &MeanFunction, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
    pd.validate()?;
    pd.require_positive_theta()?;
    let (vals, hull) = pd.values(g)?;
    if let Some(v) = outside_hull(hull, sigma) {
        return Ok(exact(v));
    }
    let (gamma, power) = (pd.gamma, pd.theta / pd.gamma);
    let p0 = &pd.p0;
    gil_pelaez_cdf_scaled(
        |t| {
            let (mut a, mut b) = (0.0, 0.0);
            for (&gv, p) in vals.iter().zip(p0.weights()) {
                let s = t * (gv - sigma);
                let r = (0.5 * gamma * (s * s).ln_1p()).exp();
                let ang = gamma * s.atan();
                a += p * r * ang.cos();
                b += p * r * ang.sin();
            }
            Ok((-power * Complex64::new(a, -b).ln()).exp())
        },
        spread(hull, sigma),
        cfg,
    )
}

/// The same CDF as a Gamma(θ/γ, rate β) mixture over z of generalized gamma
/// mean CDFs with total-mass parameter zβ. The value does not depend on β.
pub fn pd_cdf_via_mixture(
    pd: &PdModel,
    g: &MeanFunction,
    sigma: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<f64>> {
    pd.validate()?;
    pd.require_positive_theta()?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let (vals, hull) = pd.values(g)?;
    if let Some(v) = outside_hull(hull, sigma) {
        return Ok(exact(v));
    }
    let shape = pd.theta / pd.gamma;
    let rule = log_line_rule_panels(|z| Ok((shape - 1.0) * z.ln() - beta * z), cfg, MIXTURE_PANEL)?;
    let parts: Vec<Result<QuadResult<f64>>> = rule
        .par_iter()
        .map(|&(z, _)| gg_cdf_rescaled(pd.gamma, z * beta, &pd.p0, &vals, hull, sigma, cfg))
        .collect();
    let mut out = QuadResult { value: 0.0, err_estimate: 0.0, subdivisions_used: 0, truncation_t: 0.0 };
    for (&(_, w), r) in rule.iter().zip(parts) {
        let r = r?;
        out.value += w * r.value;
        out.err_estimate += w * r.err_estimate;
        out.subdivisions_used += r.subdivisions_used;
        out.truncation_t = out.truncation_t.max(r.truncation_t);
    }
    Ok(out)
}

/// Generalized gamma mean CDF with parameter b, inverted in the frequency
/// s = t·b^{1/γ}, which keeps the integrand on a unit scale as b → 0.
fn gg_cdf_rescaled(
    gamma: f64,
    b: f64,
    p0: &BaseMeasure,
    vals: &[f64],
    hull: (f64, f64),
    sigma: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<f64>> {
    let c = b.powf(1.0 / gamma);
    let width = spread(hull, sigma);
    gil_pelaez_cdf_scaled(
        |s| {
            let (mut re, mut im) = (b, 0.0);
            for (&gv, p) in vals.iter().zip(p0.weights()) {
                let x = s * (gv - sigma);
                let r = c.hypot(x).powf(gamma);
                let ang = gamma * x.atan2(c);
                re -= p * r * ang.cos();
                im += p * r * ang.sin();
            }
            Ok(Complex64::from_polar(re.exp(), im))
        },
        width / c.max(1.0),
        cfg,
    )
}

/// Density of (P̃(A₁), …, P̃(A_{n−1})) under PD(½, θ) at an interior simplex point w,
/// where p_i = P₀(A_i) for a partition A₁, …, A_n.
pub fn pd_fdd_density(theta: f64, p: &[f64], w: &[f64]) -> Result<f64> {
    Ok(ln_pd_fdd_density(theta, p, w)?.exp())
}

fn ln_pd_fdd_density(theta: f64, p: &[f64], w: &[f64]) -> Result<f64> {
    let n = p.len();
    if n < 2 || w.len() + 1 != n {
        return Err(Error::invalid(format!("need n >= 2 probabilities and n - 1 coordinates, got {} and {}", n, w.len())));
    }
    if !(theta > -0.5) || !theta.is_finite() {
        return Err(Error::invalid(format!("theta must exceed -1/2, got {theta}")));
    }
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("p must be positive and sum to 1, got {p:?}")));
    }
    let last = 1.0 - w.iter().sum::<f64>();
    if w.iter().any(|&x| !(x > 0.0)) || !(last > 0.0) {
        return Err(Error::invalid(format!("w must lie in the open simplex, got {w:?}")));
    }
    Ok(ln_density_full(theta, p, w.iter().copied().chain(std::iter::once(last))))
}

/// The density with all n coordinates given, so that the last one carries no cancellation.
fn ln_density_full(theta: f64, p: &[f64], coords: impl Iterator<Item = f64>) -> f64 {
    let nf = p.len() as f64;
    let (mut ln_w, mut a) = (0.0, 0.0);
    for (wi, pi) in coords.zip(p) {
        ln_w += wi.ln();
        a += pi * pi / wi;
    }
    let ln_p: f64 = p.iter().map(|x| x.ln()).sum();
    let power = theta + 0.5 * nf;
    ln_p + ln_gamma_fn(power) - 0.5 * (nf - 1.0) * PI.ln() - ln_gamma_fn(theta + 0.5) - 1.5 * ln_w - power * a.ln()
}

/// ∫ of the PD(½, θ) density over the simplex (n ∈ {2, 3}) using w = sin²φ
/// coordinates, which remove the endpoint singularities.
pub fn pd_fdd_total_mass(theta: f64, p: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    ln_pd_fdd_density(theta, p, &vec![1.0 / p.len() as f64; p.len().saturating_sub(1)])?;
    match p.len() {
        2 => Ok(pd_fdd_marginal_cdf(theta, p, 1.0, cfg)?),
        3 => {
            let outer = |phi1: f64| -> Result<f64> {
                let (s1, c1) = phi1.sin_cos();
                let w1 = s1 * s1;
                let rest = c1 * c1;
                let inner = integrate(
                    |phi2: f64| {
                        let (s2, c2) = phi2.sin_cos();
                        let w2 = rest * s2 * s2;
                        let jac = 2.0 * s2 * c2 * rest;
                        let w3 = rest * c2 * c2;
                        Ok(jac * ln_density_full(theta, p, [w1, w2, w3].into_iter()).exp())
                    },
                    0.0,
                    0.5 * PI,
                    cfg,
                )?;
                Ok(2.0 * s1 * c1 * inner.value)
            };
            Ok(integrate(outer, 0.0, 0.5 * PI, cfg)?.value)
        }
        n => Err(Error::invalid(format!("simplex integration is implemented for n in {{2, 3}}, got {n}"))),
    }
}

/// P(P̃(A₁) ≤ σ) from the n = 2 density, integrated in w = sin²φ.
pub fn pd_fdd_marginal_cdf(theta: f64, p: &[f64], sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if p.len() != 2 {
        return Err(Error::invalid("the marginal CDF needs two probabilities"));
    }
    ln_pd_fdd_density(theta, p, &[0.5])?;
    if sigma <= 0.0 {
        return Ok(0.0);
    }
    let top = sigma.min(1.0).sqrt().asin();
    let q = integrate(
        |phi: f64| {
            let (s, c) = phi.sin_cos();
            Ok(2.0 * s * c * ln_density_full(theta, p, [s * s, c * c].into_iter()).exp())
        },
        0.0,
        top,
        cfg,
    )?;
    Ok(q.value)
}

/// Predictive weights of the stable NRMI: mass of a new value and of each observed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictive {
    pub new_mass: f64,
    pub atoms: Vec<(f64, f64)>,
}

/// γ·k/n on P₀ plus (n_i − γ)/n at each distinct observation.
pub fn stable_predictive(gamma: f64, sample: &SampleSummary) -> Result<Predictive> {
    check_gamma(gamma)?;
    if sample.is_empty() {
        return Err(Error::invalid("the predictive rule needs a non-empty sample"));
    }
    let n = sample.n() as f64;
    let atoms: Vec<(f64, f64)> = sample.distinct().iter().map(|&(x, ni)| (x, (ni as f64 - gamma) / n)).collect();
    let taken: f64 = atoms.iter().map(|a| a.1).sum();
    Ok(Predictive { new_mass: 1.0 - taken, atoms })
}

fn mean_and_var(m: &BaseMeasure, g: &MeanFunction) -> Result<(f64, f64)> {
    if !m.is_probability(1e-12) {
        return Err(Error::invalid(format!("expected a probability measure, got mass {}", m.total_mass())));
    }
    let vals = g.values_on(m)?;
    let mean: f64 = vals.iter().zip(m.weights()).map(|(v, w)| v * w).sum();
    let var: f64 = vals.iter().zip(m.weights()).map(|(v, w)| w * (v - mean) * (v - mean)).sum();
    Ok((mean, var))
}

/// Almost-sure limit γP₀(g) + (1 − γ)P_tr(g) of the posterior mean.
pub fn consistency_limit(gamma: f64, p0: &BaseMeasure, p_true: &BaseMeasure, g: &MeanFunction) -> Result<f64> {
    check_limit_gamma(gamma)?;
    let (m0, _) = mean_and_var(p0, g)?;
    let (mt, _) = mean_and_var(p_true, g)?;
    Ok(gamma * m0 + (1.0 - gamma) * mt)
}

/// Asymptotic variance (1−γ)Var_tr(g) + γ(1−γ)Var₀(g) + γ(P_tr(g) − P₀(g))².
pub fn bvm_variance(gamma: f64, g: &MeanFunction, p_true: &BaseMeasure, p0: &BaseMeasure) -> Result<f64> {
    check_limit_gamma(gamma)?;
    let (m0, v0) = mean_and_var(p0, g)?;
    let (mt, vt) = mean_and_var(p_true, g)?;
    Ok(bvm_from_moments(gamma, mt, vt, m0, v0))
}

/// The same variance for g = 1_A with p = P_tr(A) and q = P₀(A).
pub fn bvm_variance_indicator(gamma: f64, p: f64, q: f64) -> Result<f64> {
    check_limit_gamma(gamma)?;
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("p and q must be probabilities, got {p}, {q}")));
    }
    Ok(bvm_from_moments(gamma, p, p * (1.0 - p), q, q * (1.0 - q)))
}

fn bvm_from_moments(gamma: f64, mt: f64, vt: f64, m0: f64, v0: f64) -> f64 {
    let d = mt - m0;
    (1.0 - gamma) * vt + gamma * (1.0 - gamma) * v0 + gamma * d * d
}

fn check_limit_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")))
    }
}
