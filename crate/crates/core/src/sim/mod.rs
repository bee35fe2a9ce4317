//! Monte Carlo oracle: CRM jumps in decreasing order by inverting the Lévy tail
//! at the arrival times of a unit Poisson process, normalized to random means.

mod suites;
mod tail;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DistributionGrid;
use crate::measure::MeanFunction;
use crate::models::{CrmModel, Intensity, LatentLaw, ModelKind, SampleSummary};
use crate::numerics::logline::log_line_cdf_table;
use crate::numerics::QuadratureConfig;
use crate::pd::PdModel;

pub use suites::{Check, SuiteOptions, SuiteReport, SuiteRegistry, ValidationSuite};
use tail::Tail;

/// Nodes of the tabulated inverse CDF of the latent variable.
pub const LATENT_TABLE_NODES: usize = 4096;
/// Default relative truncation level.
pub const DEFAULT_EPS_REL: f64 = 1e-6;
/// Jumps drawn per homogeneous piece before giving up.
const MAX_JUMPS: usize = 50_000_000;

/// Seed and stream of a ChaCha generator; equal specs give equal draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }

    /// The spec of replicate `i` in a run started at this stream.
    pub fn replicate(&self, i: u64) -> Self {
        Self { seed: self.seed, stream: self.stream.wrapping_add(i) }
    }
}

/// One realization of a CRM truncated below its smallest jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpField {
    /// Strictly decreasing.
    pub jumps: Vec<f64>,
    pub locations: Vec<f64>,
    /// Expected mass of the jumps not drawn, placed on the atoms of α.
    pub compensation: Vec<(f64, f64)>,
    /// Expected residual mass, i.e. the total of `compensation`.
    pub truncation_error_bound: f64,
    /// Standard deviation of the residual mass.
    pub truncation_sd: f64,
}

impl JumpField {
    pub fn total(&self) -> f64 {
        self.jumps.iter().sum::<f64>() + self.truncation_error_bound
    }

    /// Σ J_k g(x_k) / Σ J_k with the compensation included.
    pub fn mean(&self, g: &MeanFunction) -> Result<f64> {
        let mut num = 0.0;
        for (&j, &x) in self.jumps.iter().zip(&self.locations) {
            num += j * g.eval(x)?;
        }
        for &(x, m) in &self.compensation {
            num += m * g.eval(x)?;
        }
        Ok(num / self.total())
    }
}

/// Atoms sharing one intensity, simulated as one homogeneous CRM.
#[derive(Debug, Clone)]
struct Piece {
    rho: Intensity,
    mass: f64,
    atoms: Vec<usize>,
    /// Cumulative location probabilities within the piece.
    cum: Vec<f64>,
    share: Vec<f64>,
}

impl Piece {
    fn pick(&self, rng: &mut ChaCha8Rng) -> usize {
        if self.atoms.len() == 1 {
            return self.atoms[0];
        }
        let r: f64 = rng.random();
        let i = self.cum.partition_point(|&c| c <= r).min(self.atoms.len() - 1);
        self.atoms[i]
    }

    /// Draws jumps into `acc`, returns the residual mean and variance.
    fn simulate(
        &self,
        rho: Intensity,
        scale: f64,
        eps: f64,
        rng: &mut ChaCha8Rng,
        mut sink: impl FnMut(usize, f64),
    ) -> Result<(f64, f64)> {
        let tail = Tail::new(rho, self.mass * scale);
        if !(tail.mass() > 0.0) {
            return Ok((0.0, 0.0));
        }
        let (mut level, mut prev, mut total) = (0.0, 1.0, 0.0);
        for _ in 0..MAX_JUMPS {
            let e: f64 = Exp1.sample(rng);
            level += e;
            let j = tail.invert(level, prev)?;
            sink(self.pick(rng), j);
            total += j;
            prev = j;
            if tail.residual_var_bound(j).sqrt() <= eps * total {
                return Ok(tail.residual(j));
            }
        }
        Err(Error::Simulation(format!("no convergence after {MAX_JUMPS} jumps (eps_rel = {eps})")))
    }
}

fn pieces(model: &dyn CrmModel) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::new();
    for (i, (&rho, w)) in model.atom_intensities().iter().zip(model.base().weights()).enumerate() {
        if !(w > 0.0) {
            continue;
        }
        match out.iter_mut().find(|p| p.rho == rho) {
            Some(p) => {
                p.mass += w;
                p.atoms.push(i);
                p.share.push(w);
            }
            None => out.push(Piece { rho, mass: w, atoms: vec![i], cum: Vec::new(), share: vec![w] }),
        }
    }
    for p in &mut out {
        let mut acc = 0.0;
        for s in &mut p.share {
            *s /= p.mass;
            acc += *s;
            p.cum.push(acc);
        }
    }
    out
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps_rel must be positive, got {eps}")))
    }
}

fn check_simulable(model: &dyn CrmModel) -> Result<()> {
    if model.base().total_mass() <= 0.0 {
        return Err(Error::invalid("the simulator needs a non-empty α"));
    }
    Ok(())
}

/// Jumps of the CRM in decreasing order, truncated where the residual standard
/// deviation falls below eps_rel times the realized mass of each homogeneous piece.
pub fn sample_crm_jumps(model: &dyn CrmModel, rng: RngSpec, eps_rel: f64) -> Result<JumpField> {
    check_eps(eps_rel)?;
    check_simulable(model)?;
    let mut r = rng.rng();
    let locs: Vec<f64> = model.base().locations().collect();
    let mut drawn: Vec<(f64, f64)> = Vec::new();
    let mut compensation = Vec::new();
    let (mut bound, mut var) = (0.0, 0.0);
    for p in pieces(model) {
        let (m, v) = p.simulate(p.rho, 1.0, eps_rel, &mut r, |i, j| drawn.push((j, locs[i])))?;
        bound += m;
        var += v;
        compensation.extend(p.atoms.iter().zip(&p.share).map(|(&i, &s)| (locs[i], m * s)));
    }
    drawn.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(JumpField {
        jumps: drawn.iter().map(|d| d.0).collect(),
        locations: drawn.iter().map(|d| d.1).collect(),
        compensation,
        truncation_error_bound: bound,
        truncation_sd: var.sqrt(),
    })
}

/// Per-replicate recipe for a normalized mean.
#[derive(Debug, Clone)]
struct MeanSampler {
    /// g at each location: atoms of α first, then observations.
    g: Vec<f64>,
    pieces: Vec<Piece>,
    /// (location index, intensity at the observation, multiplicity).
    fixed: Vec<(usize, Intensity, u32)>,
    latent: Option<Vec<(f64, f64)>>,
    /// Shape of a Gamma(shape, 1) factor multiplying α.
    mass_shape: Option<f64>,
    eps: f64,
}

impl MeanSampler {
    fn prior(model: &dyn CrmModel, g: &MeanFunction, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        check_simulable(model)?;
        g.validate()?;
        Ok(Self {
            g: g.values_on(model.base())?,
            pieces: pieces(model),
            fixed: Vec::new(),
            latent: None,
            mass_shape: None,
            eps,
        })
    }

    fn draw_latent(table: &[(f64, f64)], rng: &mut ChaCha8Rng) -> f64 {
        let r: f64 = rng.random();
        let i = table.partition_point(|p| p.1 < r).clamp(1, table.len() - 1);
        let (v0, f0) = table[i - 1];
        let (v1, f1) = table[i];
        let w = if f1 > f0 { (r - f0) / (f1 - f0) } else { 0.5 };
        (v0 + w * (v1 - v0)).exp()
    }

    fn replicate(&self, spec: RngSpec) -> Result<f64> {
        let mut rng = spec.rng();
        let u = match &self.latent {
            Some(t) => Self::draw_latent(t, &mut rng),
            None => 0.0,
        };
        let scale = match self.mass_shape {
            Some(shape) => Gamma::new(shape, 1.0).map_err(|e| Error::Simulation(e.to_string()))?.sample(&mut rng),
            None => 1.0,
        };
        let mut acc = vec![0.0; self.g.len()];
        for p in &self.pieces {
            let rho = if u > 0.0 { p.rho.tilted(u) } else { p.rho };
            let (m, _) = p.simulate(rho, scale, self.eps, &mut rng, |i, j| acc[i] += j)?;
            for (&i, &s) in p.atoms.iter().zip(&p.share) {
                acc[i] += m * s;
            }
        }
        for &(i, rho, n) in &self.fixed {
            let (shape, rate) = rho.jump_law(n, u);
            let law = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Simulation(e.to_string()))?;
            acc[i] += law.sample(&mut rng);
        }
        let total: f64 = acc.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Simulation("replicate has zero total mass".into()));
        }
        let num: f64 = acc.iter().zip(&self.g).map(|(a, g)| a * g).sum();
        let (lo, hi) = self.g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        Ok((num / total).clamp(lo, hi))
    }

    fn run(&self, n: usize, rng: RngSpec) -> Result<Vec<f64>> {
        (0..n as u64).into_par_iter().map(|i| self.replicate(rng.replicate(i))).collect()
    }
}

/// Independent draws of the prior mean P̃(g); replicate i uses stream `rng.stream + i`.
pub fn sample_prior_mean(model: &dyn CrmModel, g: &MeanFunction, n_samples: usize, rng: RngSpec, eps_rel: f64) -> Result<Vec<f64>> {
    MeanSampler::prior(model, g, eps_rel)?.run(n_samples, rng)
}

/// Independent draws of P̃(g) given the sample: latent u from a tabulated inverse CDF,
/// the CRM tilted by u, and gamma fixed jumps at the observations.
pub fn sample_posterior_mean(
    model: &dyn CrmModel,
    sample: &SampleSummary,
    g: &MeanFunction,
    n_samples: usize,
    rng: RngSpec,
    eps_rel: f64,
) -> Result<Vec<f64>> {
    if matches!(model.kind(), ModelKind::Stable { .. }) {
        return Err(Error::Unsupported { model: model.name(), op: "sample_posterior_mean" });
    }
    let mut s = MeanSampler::prior(model, g, eps_rel)?;
    if sample.is_empty() {
        return s.run(n_samples, rng);
    }
    let law = LatentLaw::new(model, sample, &QuadratureConfig::default())?;
    let norm = law.ln_normalizer();
    s.latent = Some(log_line_cdf_table(|u| Ok(law.ln_unnormalized(u)? - norm), LATENT_TABLE_NODES)?);
    for &(x, nj) in sample.distinct() {
        s.fixed.push((s.g.len(), model.intensity_at(x), nj));
        s.g.push(g.eval(x)?);
    }
    s.run(n_samples, rng)
}

/// Draws of P̃_{γ,θ}(g): Z ~ Gamma(θ/γ, 1), then the generalized gamma mean with parameter Z.
pub fn sample_pd_mean(pd: &PdModel, g: &MeanFunction, n_samples: usize, rng: RngSpec, eps_rel: f64) -> Result<Vec<f64>> {
    pd.validate()?;
    if !(pd.theta > 0.0) {
        return Err(Error::invalid(format!("the gamma-mixture sampler needs theta > 0, got {}", pd.theta)));
    }
    let gg = crate::models::GeneralizedGamma::new(pd.gamma, 1.0, pd.p0.clone())?;
    let mut s = MeanSampler::prior(&gg, g, eps_rel)?;
    s.mass_shape = Some(pd.theta / pd.gamma);
    s.run(n_samples, rng)
}

/// sup_x |F_n(x) − F(x)| over the jump points of the empirical CDF, with the
/// left limits compared at the preceding float.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("ks_distance needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("samples contain NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut k = i;
        while k < xs.len() && xs[k] == x {
            k += 1;
        }
        d = d.max((k as f64 / n - cdf(x)).abs()).max((i as f64 / n - cdf(x.next_down())).abs());
        i = k;
    }
    Ok(d)
}

/// Piecewise-linear CDF through grid values, 0 and 1 beyond the ends.
#[derive(Debug, Clone)]
pub struct CdfTable {
    sigma: Vec<f64>,
    value: Vec<f64>,
}

impl CdfTable {
    pub fn from_grid(grid: &DistributionGrid) -> Result<Self> {
        if grid.len() < 2 || grid.sigma.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("a CDF table needs at least two increasing abscissae"));
        }
        Ok(Self { sigma: grid.sigma.clone(), value: grid.value.clone() })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.sigma.len() - 1;
        if x < self.sigma[0] {
            return 0.0;
        }
        if x >= self.sigma[last] {
            return 1.0;
        }
        let i = self.sigma.partition_point(|&s| s <= x).clamp(1, last);
        let (s0, s1) = (self.sigma[i - 1], self.sigma[i]);
        let w = (x - s0) / (s1 - s0);
        self.value[i - 1] + w * (self.value[i] - self.value[i - 1])
    }
}
