use std::f64::consts::PI;

use num_complex::Complex64;

use super::partitions::{partition_sum, set_partitions, mask_of};
use super::setup::MixtureSetup;
use super::{MixtureData, MixtureMeanLaw, MixtureRoute};
use crate::error::{Error, Result};
use crate::models::{CrmModel, ModelKind};
use crate::numerics::inversion::gil_pelaez_enveloped;
use crate::numerics::logline::log_line_rule;
use crate::numerics::quad::{panels_to_infinity, PanelPlan, WithEnvelope};
use crate::numerics::special::ln_gamma_fn;
use crate::numerics::{QuadResult, QuadratureConfig};
use crate::prior::{exact, outside_hull, spread};

/// Largest number of (partition, atom assignment) pairs the quasi-conjugate route enumerates.
pub const CONFIGURATION_CAP: usize = 200_000;

fn density_plan(hull: (f64, f64), sigma: f64) -> PanelPlan {
    let first = 1.0 / spread(hull, sigma);
    PanelPlan { start: 0.0, first_end: first, min_end: first, quiet_panels: 2, taper_on_stall: false }
}

/// (1/π)∫₀^∞ Re φ(t) dt for a t-integrand returning (value, envelope).
fn inversion_density(
    hull: (f64, f64),
    sigma: f64,
    cfg: &QuadratureConfig,
    mut phi: impl FnMut(f64) -> Result<(Complex64, f64)>,
) -> Result<QuadResult<f64>> {
    let mut f = WithEnvelope(|t: f64| -> Result<(f64, f64)> {
        let (v, env) = phi(t)?;
        Ok((v.re / PI, env / PI))
    });
    panels_to_infinity(&mut f, density_plan(hull, sigma), cfg)
}

fn degenerate_density(hull: (f64, f64), sigma: f64) -> Option<QuadResult<f64>> {
    let (lo, hi) = hull;
    (sigma < lo || sigma > hi || lo == hi).then(|| exact(0.0))
}

/// Sum over partitions with cluster integrals against τ_{n_j}(u|x), mixed over
/// the latent variable u; applies to every model with exact formulas.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneralRoute;

#[derive(Debug, Clone)]
pub struct GeneralMixture {
    setup: MixtureSetup,
    /// (u_i, w_i, Σ_π∏c(C) at u_i)
    rule: Vec<(f64, f64, f64)>,
}

impl GeneralMixture {
    pub fn new(model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Self> {
        let setup = MixtureSetup::new(model, data, cfg)?;
        let n = setup.n as f64;
        let ln_f = |u: f64| -> Result<f64> {
            let total = setup.partition_total(u)?;
            Ok((n - 1.0) * u.ln() - setup.psi_real(u)? + total.ln() - n * setup.lambda(u).ln())
        };
        let nodes = log_line_rule(ln_f, cfg)?;
        let mut rule = Vec::with_capacity(nodes.len());
        for (u, w) in nodes {
            rule.push((u, w, setup.partition_total(u)?));
        }
        Ok(Self { setup, rule })
    }

    fn mixed(&self, t: f64, sigma: f64, palm: bool) -> Result<(Complex64, f64)> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut env = 0.0;
        for &(u, w, s0) in &self.rule {
            let (terms, psi_prime) = self.setup.cluster_terms(u, t, sigma, palm)?;
            let p = partition_sum(&terms, self.setup.n);
            let e = (-self.setup.field.psi_charfn(u, t, sigma)?).exp();
            let scale = w / s0;
            if palm {
                acc += e * (psi_prime * p.s + p.d) * scale;
                env += e.norm() * (psi_prime.norm() * p.s_abs + p.d_abs) * scale;
            } else {
                acc += e * p.s * scale;
                env += e.norm() * p.s_abs * scale;
            }
        }
        Ok((acc, env))
    }
}

impl MixtureMeanLaw for GeneralMixture {
    fn hull(&self) -> (f64, f64) {
        self.setup.hull
    }

    fn density(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(r) = degenerate_density(self.setup.hull, sigma) {
            return Ok(r);
        }
        // E[T e^{itT(P̃(h)−σ)}] with T the total mass, via the derivative in a uniform shift
        inversion_density(self.setup.hull, sigma, cfg, |t| self.mixed(t, sigma, true))
    }

    fn cdf(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(v) = outside_hull(self.setup.hull, sigma) {
            return Ok(exact(v));
        }
        gil_pelaez_enveloped(|t| self.mixed(t, sigma, false), spread(self.setup.hull, sigma), cfg)
    }
}

impl MixtureRoute for GeneralRoute {
    fn name(&self) -> &'static str {
        "general"
    }

    fn supports(&self, model: &dyn CrmModel) -> bool {
        model.supports_exact()
    }

    fn prepare(&self, model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Box<dyn MixtureMeanLaw>> {
        Ok(Box::new(GeneralMixture::new(model, data, cfg)?))
    }
}

/// Gamma-type models: each (partition, atom assignment) adds mass n_j at x_j to
/// the base measure and the law given u is that of a tilted gamma-type mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuasiConjugateRoute;

/// One latent configuration: cluster j sits at atom `atoms[j].0` with size `atoms[j].1`.
#[derive(Debug, Clone)]
struct Configuration {
    atoms: Vec<(usize, f64)>,
    ln_const: f64,
}

#[derive(Debug, Clone)]
pub struct QuasiConjugateMixture {
    setup: MixtureSetup,
    configs: Vec<Configuration>,
    /// (u_i, w_i, [(configuration, conditional probability)])
    rule: Vec<(f64, f64, Vec<(usize, f64)>)>,
}

fn logsumexp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

impl QuasiConjugateMixture {
    pub fn new(model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Self> {
        if !matches!(model.kind(), ModelKind::Dirichlet | ModelKind::ExtendedGamma) {
            return Err(Error::Unsupported { model: model.name(), op: "quasi-conjugate mixture route" });
        }
        let setup = MixtureSetup::new(model, data, cfg)?;
        let k = setup.atoms.len();
        let n = setup.n;
        let mut count = 0usize;
        for p in set_partitions(n)? {
            count = count.saturating_add(k.saturating_pow(p.len() as u32));
        }
        if count > CONFIGURATION_CAP {
            return Err(Error::invalid(format!(
                "quasi-conjugate route would enumerate {count} configurations (cap {CONFIGURATION_CAP})"
            )));
        }
        let mut configs = Vec::new();
        for p in set_partitions(n)? {
            let masks: Vec<usize> = p.iter().map(|c| mask_of(c)).collect();
            let mut assign = vec![0usize; p.len()];
            'outer: loop {
                let mut ln_const = 0.0;
                let mut atoms = Vec::with_capacity(p.len());
                for (j, &a) in assign.iter().enumerate() {
                    let nj = p[j].len() as f64;
                    ln_const += ln_gamma_fn(nj) + setup.atoms[a].alpha.ln() + setup.kern[masks[j] * k + a].ln();
                    atoms.push((a, nj));
                }
                if ln_const.is_finite() {
                    configs.push(Configuration { atoms, ln_const });
                }
                for j in 0..assign.len() {
                    assign[j] += 1;
                    if assign[j] < k {
                        continue 'outer;
                    }
                    assign[j] = 0;
                }
                break;
            }
        }
        // ln W_c(u) = const_c + (n−1)ln u − ∫ln(β + u) dα_n^X
        let ln_w = |u: f64| -> Vec<f64> {
            let ln_rate: Vec<f64> = setup.atoms.iter().map(|a| (a.rho.rate() + u).ln()).collect();
            let base: f64 = setup.atoms.iter().zip(&ln_rate).map(|(a, l)| a.alpha * l).sum();
            configs
                .iter()
                .map(|c| {
                    let extra: f64 = c.atoms.iter().map(|&(a, nj)| nj * ln_rate[a]).sum();
                    c.ln_const + (n as f64 - 1.0) * u.ln() - base - extra
                })
                .collect()
        };
        let nodes = log_line_rule(|u| Ok(logsumexp(ln_w(u))), cfg)?;
        let mut rule = Vec::with_capacity(nodes.len());
        for (u, w) in nodes {
            let lw = ln_w(u);
            let total = logsumexp(lw.iter().copied());
            let probs: Vec<(usize, f64)> = lw
                .iter()
                .enumerate()
                .map(|(i, &l)| (i, (l - total).exp()))
                .filter(|p| p.1 > 1e-18)
                .collect();
            rule.push((u, w, probs));
        }
        Ok(Self { setup, configs, rule })
    }

    /// Mixture over configurations of e^{−∫ln(1 + (−it(h − σ))/(β + u)) dα_n^X}, times
    /// ∫(β + u − it(h − σ))^{−1} dα_n^X for the density.
    fn mixed(&self, t: f64, sigma: f64, palm: bool) -> Result<(Complex64, f64)> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut env = 0.0;
        for (u, w, probs) in &self.rule {
            // per-atom logarithms and reciprocals, shared by every configuration
            let mut ln_atom = Vec::with_capacity(self.setup.atoms.len());
            let mut inv_atom = Vec::with_capacity(self.setup.atoms.len());
            let (mut ln_base, mut mass_base) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for a in &self.setup.atoms {
                let c = Complex64::new(0.0, -t * (a.h - sigma));
                let l = a.rho.tilted(*u).laplace(c)?;
                let r = a.rho.moment(1, c + *u)?;
                ln_base += l * a.alpha;
                mass_base += r * a.alpha;
                ln_atom.push(l);
                inv_atom.push(r);
            }
            for &(c, p) in probs {
                let mut ln = ln_base;
                let mut mass = mass_base;
                for &(a, nj) in &self.configs[c].atoms {
                    ln += ln_atom[a] * nj;
                    mass += inv_atom[a] * nj;
                }
                let mut v = (-ln).exp();
                if palm {
                    v *= mass;
                }
                acc += v * (w * p);
                env += v.norm() * (w * p);
            }
        }
        Ok((acc, env))
    }
}

impl MixtureMeanLaw for QuasiConjugateMixture {
    fn hull(&self) -> (f64, f64) {
        self.setup.hull
    }

    fn density(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(r) = degenerate_density(self.setup.hull, sigma) {
            return Ok(r);
        }
        inversion_density(self.setup.hull, sigma, cfg, |t| self.mixed(t, sigma, true))
    }

    fn cdf(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(v) = outside_hull(self.setup.hull, sigma) {
            return Ok(exact(v));
        }
        gil_pelaez_enveloped(|t| self.mixed(t, sigma, false), spread(self.setup.hull, sigma), cfg)
    }
}

impl MixtureRoute for QuasiConjugateRoute {
    fn name(&self) -> &'static str {
        "quasi_conjugate"
    }

    fn supports(&self, model: &dyn CrmModel) -> bool {
        matches!(model.kind(), ModelKind::Dirichlet | ModelKind::ExtendedGamma)
    }

    fn prepare(&self, model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Box<dyn MixtureMeanLaw>> {
        Ok(Box::new(QuasiConjugateMixture::new(model, data, cfg)?))
    }
}

/// Mixture of Dirichlet process: the latent variable integrates out and each
/// configuration contributes a Dirichlet mean law with base α_n^X.
#[derive(Debug, Clone, Copy, Default)]
pub struct MdpRoute;

#[derive(Debug, Clone)]
pub struct MdpMixture {
    setup: MixtureSetup,
    total_mass: f64,
    s0: f64,
}

impl MdpMixture {
    pub fn new(model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Self> {
        if model.kind() != ModelKind::Dirichlet {
            return Err(Error::Unsupported { model: model.name(), op: "mixture of Dirichlet process route" });
        }
        let setup = MixtureSetup::new(model, data, cfg)?;
        let s0 = setup.partition_total(0.0)?;
        Ok(Self { total_mass: model.base().total_mass(), setup, s0 })
    }

    /// E over configurations of e^{−∫ln(1 − it(h − σ))dα_n^X}, with a modulus bound.
    fn mixed(&self, t: f64, sigma: f64) -> Result<(Complex64, f64)> {
        let (terms, _) = self.setup.cluster_terms(0.0, t, sigma, false)?;
        let p = partition_sum(&terms, self.setup.n);
        let e = (-self.setup.field.psi_charfn(0.0, t, sigma)?).exp();
        Ok((e * p.s / self.s0, e.norm() * p.s_abs / self.s0))
    }
}

impl MixtureMeanLaw for MdpMixture {
    fn hull(&self) -> (f64, f64) {
        self.setup.hull
    }

    fn density(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(r) = degenerate_density(self.setup.hull, sigma) {
            return Ok(r);
        }
        let factor = self.total_mass + self.setup.n as f64 - 1.0;
        let r = inversion_density(self.setup.hull, sigma, cfg, |t| {
            let (v, env) = self.mixed(t, sigma)?;
            Ok((v * factor, env * factor))
        })?;
        Ok(r)
    }

    fn cdf(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(v) = outside_hull(self.setup.hull, sigma) {
            return Ok(exact(v));
        }
        gil_pelaez_enveloped(|t| self.mixed(t, sigma), spread(self.setup.hull, sigma), cfg)
    }
}

impl MixtureRoute for MdpRoute {
    fn name(&self) -> &'static str {
        "mdp"
    }

    fn supports(&self, model: &dyn CrmModel) -> bool {
        model.kind() == ModelKind::Dirichlet
    }

    fn prepare(&self, model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Box<dyn MixtureMeanLaw>> {
        Ok(Box::new(MdpMixture::new(model, data, cfg)?))
    }
}
