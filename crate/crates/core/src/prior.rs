//! Prior law of the mean functional P̃(g).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::DistributionGrid;
use crate::measure::{BaseMeasure, MeanFunction};
use crate::models::kernels::Field;
use crate::models::{require_exact, CrmModel, GeneralizedGamma, ModelKind};
use crate::numerics::inversion::gil_pelaez_cdf_scaled;
use crate::numerics::{QuadResult, QuadratureConfig};

/// Relative step of the central difference used for prior densities.
const DIFF_STEP: f64 = 1e-3;

/// The prior law of P̃(g) for a fixed model and mean function.
#[derive(Debug, Clone)]
pub struct PriorMeanLaw<'a> {
    model: &'a dyn CrmModel,
    field: Field,
}

impl<'a> PriorMeanLaw<'a> {
    pub fn new(model: &'a dyn CrmModel, g: &MeanFunction) -> Result<Self> {
        require_exact(model, "prior_cdf")?;
        g.validate()?;
        Ok(Self { model, field: Field::new(model, g)? })
    }

    /// Smallest and largest value of g on the atoms.
    pub fn hull(&self) -> (f64, f64) {
        (self.field.g_min, self.field.g_max)
    }

    /// F(σ) = P(P̃(g) ≤ σ).
    pub fn cdf(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        if let Some(v) = outside_hull(self.hull(), sigma) {
            return Ok(exact(v));
        }
        let field = &self.field;
        gil_pelaez_cdf_scaled(|t| Ok((-field.psi_charfn(0.0, t, sigma)?).exp()), spread(self.hull(), sigma), cfg)
    }

    /// Density by central differences of the CDF, except for the closed forms.
    pub fn density(&self, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
        let (lo, hi) = self.hull();
        if sigma < lo || sigma > hi || lo == hi {
            return Ok(exact(0.0));
        }
        let h = DIFF_STEP * (hi - lo);
        let tight = cfg.tightened(1e-2);
        let up = self.cdf(sigma + h, &tight)?;
        let down = self.cdf(sigma - h, &tight)?;
        Ok(QuadResult {
            value: (up.value - down.value) / (2.0 * h),
            err_estimate: (up.err_estimate + down.err_estimate) / (2.0 * h),
            subdivisions_used: up.subdivisions_used + down.subdivisions_used,
            truncation_t: up.truncation_t.max(down.truncation_t),
        })
    }

    pub fn cdf_grid(&self, sigmas: &[f64], cfg: &QuadratureConfig) -> Result<DistributionGrid> {
        DistributionGrid::evaluate(sigmas, |s| self.cdf(s, cfg).map(|r| (r.value, r.err_estimate)))
    }

    pub fn density_grid(&self, sigmas: &[f64], cfg: &QuadratureConfig) -> Result<DistributionGrid> {
        DistributionGrid::evaluate(sigmas, |s| self.density(s, cfg).map(|r| (r.value, r.err_estimate)))
    }

    pub fn model(&self) -> &dyn CrmModel {
        self.model
    }
}

/// 0 or 1 when σ lies outside the range of g (the mean cannot leave its hull).
pub(crate) fn outside_hull((lo, hi): (f64, f64), sigma: f64) -> Option<f64> {
    if sigma >= hi {
        Some(1.0)
    } else if sigma < lo || (sigma == lo && lo < hi) {
        Some(0.0)
    } else {
        None
    }
}

pub(crate) fn spread((lo, hi): (f64, f64), sigma: f64) -> f64 {
    (hi - sigma).abs().max((sigma - lo).abs()).max(1e-12)
}

pub(crate) fn exact(value: f64) -> QuadResult<f64> {
    QuadResult { value, err_estimate: 0.0, subdivisions_used: 0, truncation_t: 0.0 }
}

/// Prior CDF of P̃(g) at σ.
pub fn prior_cdf(model: &dyn CrmModel, g: &MeanFunction, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
    PriorMeanLaw::new(model, g)?.cdf(sigma, cfg)
}

/// Prior density of P̃(g) at σ by central differences of the CDF.
pub fn prior_density(model: &dyn CrmModel, g: &MeanFunction, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
    PriorMeanLaw::new(model, g)?.density(sigma, cfg)
}

/// (A_σ(t), B_σ(t)) = P₀-integrals of [1 + t²(g−σ)²]^{γ/2}·(cos, sin)(γ arctan(t(g−σ))).
pub fn gg_ab(model: &GeneralizedGamma, g: &MeanFunction, sigma: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("gg_ab needs t >= 0, got {t}")));
    }
    let vals = g.values_on(model.p0())?;
    Ok(ab_sum(model.gamma(), model.p0(), &vals, sigma, t))
}

fn ab_sum(gamma: f64, p0: &BaseMeasure, vals: &[f64], sigma: f64, t: f64) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for (&gv, p) in vals.iter().zip(p0.weights()) {
        let s = t * (gv - sigma);
        let r = (s * s).ln_1p() * (0.5 * gamma);
        let ang = gamma * s.atan();
        a += p * r.exp() * ang.cos();
        b += p * r.exp() * ang.sin();
    }
    (a, b)
}

/// Generalized gamma prior CDF through the real (A, B) representation:
/// ½ − (1/π)∫ t^{−1} e^{β(1−A)} sin(βB) dt.
pub fn gg_prior_cdf_ab(model: &GeneralizedGamma, g: &MeanFunction, sigma: f64, cfg: &QuadratureConfig) -> Result<QuadResult<f64>> {
    let vals = g.values_on(model.p0())?;
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(v) = outside_hull((lo, hi), sigma) {
        return Ok(exact(v));
    }
    let (gamma, beta) = (model.gamma(), model.beta());
    gil_pelaez_cdf_scaled(
        |t| {
            let (a, b) = ab_sum(gamma, model.p0(), &vals, sigma, t);
            Ok(Complex64::from_polar((beta * (1.0 - a)).exp(), beta * b))
        },
        spread((lo, hi), sigma),
        cfg,
    )
}

/// β₁β₂[β₁σ + β₂(1−σ)]^{−2} on [0, 1]: prior density of P̃(A) under the extended
/// gamma model with β = β₁ on A, β₂ off A and α(A) = α(Aᶜ) = 1.
pub fn prior_density_extended_gamma_indicator(beta1: f64, beta2: f64, sigma: f64) -> Result<f64> {
    check_betas(beta1, beta2)?;
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::invalid(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    let d = beta1 * sigma + beta2 * (1.0 - sigma);
    Ok(beta1 * beta2 / (d * d))
}

/// The matching CDF β₁σ / (β₁σ + β₂(1−σ)), clamped outside [0, 1].
pub fn prior_cdf_extended_gamma_indicator(beta1: f64, beta2: f64, sigma: f64) -> Result<f64> {
    check_betas(beta1, beta2)?;
    Ok(if sigma <= 0.0 {
        0.0
    } else if sigma >= 1.0 {
        1.0
    } else {
        beta1 * sigma / (beta1 * sigma + beta2 * (1.0 - sigma))
    })
}

pub(crate) fn check_betas(beta1: f64, beta2: f64) -> Result<()> {
    if beta1 > 0.0 && beta2 > 0.0 && beta1.is_finite() && beta2.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta values must be positive, got ({beta1}, {beta2})")))
    }
}

/// Picks the generalized gamma (A, B) path when the model is of that family.
pub fn gg_from_model(model: &dyn CrmModel) -> Option<GeneralizedGamma> {
    match model.kind() {
        ModelKind::GeneralizedGamma { gamma, beta } => GeneralizedGamma::new(gamma, beta, model.base().normalized()).ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_atomic_measure;
    use crate::models::{BetaFn, DirichletProcess, ExtendedGamma};
    use proptest::prelude::*;
    use statrs::distribution::{Beta, ContinuousCDF};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn two_atoms(w: f64) -> BaseMeasure {
        build_atomic_measure([(0.0, w), (1.0, w)]).unwrap()
    }

    fn ind_a() -> MeanFunction {
        MeanFunction::indicator(0.5, 1.5)
    }

    #[test]
    fn dirichlet_indicator_is_beta() {
        let d = DirichletProcess::new(two_atoms(1.0));
        let law = PriorMeanLaw::new(&d, &ind_a()).unwrap();
        assert!((law.cdf(0.3, &cfg()).unwrap().value - 0.3).abs() < 1e-6);
        let d = DirichletProcess::new(build_atomic_measure([(0.0, 2.5), (1.0, 0.7)]).unwrap());
        let law = PriorMeanLaw::new(&d, &ind_a()).unwrap();
        let beta = Beta::new(0.7, 2.5).unwrap();
        let xs: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let grid = law.cdf_grid(&xs, &cfg()).unwrap();
        assert!(grid.sup_distance(|s| beta.cdf(s)) < 1e-6);
    }

    #[test]
    fn extended_gamma_indicator_closed_form() {
        let eg = ExtendedGamma::new(two_atoms(1.0), BetaFn::Steps(vec![(0.0, 1.0), (0.5, 2.0)])).unwrap();
        let law = PriorMeanLaw::new(&eg, &ind_a()).unwrap();
        let v = law.cdf(0.5, &cfg()).unwrap().value;
        assert!((v - 2.0 / 3.0).abs() < 1e-6);
        for s in [0.1, 0.37, 0.8] {
            let want = prior_cdf_extended_gamma_indicator(2.0, 1.0, s).unwrap();
            assert!((law.cdf(s, &cfg()).unwrap().value - want).abs() < 1e-6);
            let d = law.density(s, &cfg()).unwrap().value;
            let want = prior_density_extended_gamma_indicator(2.0, 1.0, s).unwrap();
            assert!((d - want).abs() < 1e-4 * want, "{d} {want}");
        }
    }

    #[test]
    fn extended_gamma_indicator_density_examples() {
        for s in [0.0, 0.4, 1.0] {
            assert_eq!(prior_density_extended_gamma_indicator(1.0, 1.0, s).unwrap(), 1.0);
        }
        assert_eq!(prior_density_extended_gamma_indicator(2.0, 1.0, 0.0).unwrap(), 2.0);
        let n = 2000;
        let total: f64 = (0..n)
            .map(|i| prior_density_extended_gamma_indicator(3.0, 0.5, (i as f64 + 0.5) / n as f64).unwrap() / n as f64)
            .sum();
        assert!((total - 1.0).abs() < 1e-5);
        assert!(prior_density_extended_gamma_indicator(0.0, 1.0, 0.5).is_err());
        assert!(prior_density_extended_gamma_indicator(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn gg_symmetric_g_has_median_at_centre() {
        let p0 = build_atomic_measure([(-1.0, 0.2), (0.0, 0.3), (1.0, 0.3), (2.0, 0.2)]).unwrap();
        let g = MeanFunction::Identity;
        for (gamma, beta) in [(0.3, 0.5), (0.5, 1.0), (0.7, 3.0)] {
            let gg = GeneralizedGamma::new(gamma, beta, p0.clone()).unwrap();
            let v = prior_cdf(&gg, &g, 0.5, &cfg()).unwrap().value;
            assert!((v - 0.5).abs() < 1e-6, "{gamma} {beta}: {v}");
        }
    }

    #[test]
    fn gg_ab_examples() {
        let p0 = build_atomic_measure([(0.0, 0.4), (1.0, 0.6)]).unwrap();
        let gg = GeneralizedGamma::new(0.5, 1.0, p0).unwrap();
        let g = MeanFunction::Identity;
        assert_eq!(gg_ab(&gg, &g, 0.3, 0.0).unwrap(), (1.0, 0.0));
        let c = MeanFunction::Constant { value: 0.3 };
        assert_eq!(gg_ab(&gg, &c, 0.3, 7.0).unwrap(), (1.0, 0.0));
        let one = GeneralizedGamma::new(0.5, 1.0, build_atomic_measure([(1.0, 1.0)]).unwrap()).unwrap();
        let (a, b) = gg_ab(&one, &g, 0.0, 1.0).unwrap();
        let q = 2f64.powf(0.25);
        let pi8 = std::f64::consts::PI / 8.0;
        assert!((a - q * pi8.cos()).abs() < 1e-15 && (b - q * pi8.sin()).abs() < 1e-15);
        let w = Complex64::new(1.0, -1.0).powf(0.5);
        assert!((a - w.re).abs() < 1e-15 && (b + w.im).abs() < 1e-15);
    }

    #[test]
    fn gg_two_paths_agree() {
        let p0 = build_atomic_measure([(0.0, 0.25), (0.4, 0.25), (1.0, 0.5)]).unwrap();
        let g = MeanFunction::Identity;
        for (gamma, beta) in [(0.3, 2.0), (0.5, 1.0), (0.7, 0.5)] {
            let gg = GeneralizedGamma::new(gamma, beta, p0.clone()).unwrap();
            for s in [0.1, 0.45, 0.9] {
                let a = prior_cdf(&gg, &g, s, &cfg()).unwrap().value;
                let b = gg_prior_cdf_ab(&gg, &g, s, &cfg()).unwrap().value;
                assert!((a - b).abs() < 1e-9, "{a} {b}");
            }
        }
    }

    #[test]
    fn hull_edges_and_stable() {
        let d = DirichletProcess::new(two_atoms(1.0));
        let law = PriorMeanLaw::new(&d, &MeanFunction::Identity).unwrap();
        assert_eq!(law.cdf(-0.1, &cfg()).unwrap().value, 0.0);
        assert_eq!(law.cdf(1.0, &cfg()).unwrap().value, 1.0);
        assert!(law.cdf(1e-4, &cfg()).unwrap().value < 1e-2);
        assert!(law.cdf(1.0 - 1e-4, &cfg()).unwrap().value > 0.99);
        let st = crate::models::Stable::new(0.5, two_atoms(0.5)).unwrap();
        assert!(matches!(PriorMeanLaw::new(&st, &MeanFunction::Identity), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn monotone_on_grid() {
        let eg = ExtendedGamma::new(
            build_atomic_measure([(0.0, 0.5), (0.3, 0.8), (1.0, 1.2)]).unwrap(),
            BetaFn::Steps(vec![(0.0, 0.7), (0.5, 2.0)]),
        )
        .unwrap();
        let law = PriorMeanLaw::new(&eg, &MeanFunction::Identity).unwrap();
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let grid = law.cdf_grid(&xs, &cfg()).unwrap();
        for w in grid.value.windows(2) {
            assert!(w[1] >= w[0] - 1e-6);
        }
        for &v in &grid.value {
            assert!((-1e-6..=1.0 + 1e-6).contains(&v));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn affine_equivariance(a in -3.0f64..3.0, b in 0.2f64..4.0, s in 0.05f64..0.95) {
            let d = DirichletProcess::new(build_atomic_measure([(0.0, 0.6), (0.5, 0.9), (1.0, 1.1)]).unwrap());
            let g = MeanFunction::Identity;
            let f1 = prior_cdf(&d, &g, s, &cfg()).unwrap().value;
            let f2 = prior_cdf(&d, &g.affine(a, b), a + b * s, &cfg()).unwrap().value;
            prop_assert!((f1 - f2).abs() < 1e-6);
        }
    }
}
