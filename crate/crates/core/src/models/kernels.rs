use num_complex::Complex64;

use super::{require_exact, CrmModel, Intensity};
use crate::error::{Error, Result};
use crate::measure::MeanFunction;

/// ψ(w) = Σ_k α_k ∫(1 − e^{−v w(x_k)}) ρ(dv|x_k).
pub fn laplace_exponent(model: &dyn CrmModel, w: impl Fn(f64) -> Complex64) -> Result<Complex64> {
    tilted_laplace_exponent(model, 0.0, w)
}

/// Laplace exponent of the tilted intensity e^{−uv}ρ(dv|x)α(dx).
pub fn tilted_laplace_exponent(
    model: &dyn CrmModel,
    u: f64,
    w: impl Fn(f64) -> Complex64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(x, m), rho) in model.base().atoms().iter().zip(model.atom_intensities()) {
        acc += rho.tilted(u).laplace(w(x))? * m;
    }
    Ok(acc)
}

/// τ_n(u|x) = ∫ vⁿ e^{−uv} ρ(dv|x).
pub fn tau_n(model: &dyn CrmModel, n: u32, u: f64, x: f64) -> Result<f64> {
    require_exact(model, "tau_n")?;
    positive(n)?;
    if !(u >= 0.0) {
        return Err(Error::invalid(format!("tau_n needs u >= 0, got {u}")));
    }
    Ok(model.intensity_at(x).ln_moment_real(n, u)?.exp())
}

/// κ_n(c|x) = ∫ vⁿ e^{cv} ρ(dv|x).
pub fn kappa_n(model: &dyn CrmModel, n: u32, c: Complex64, x: f64) -> Result<Complex64> {
    require_exact(model, "kappa_n")?;
    positive(n)?;
    model.intensity_at(x).moment(n, -c)
}

/// E[e^{cJ}] for the fixed jump at an observation of multiplicity n, given U = u.
pub fn jump_charfn(model: &dyn CrmModel, n: u32, u: f64, c: Complex64, x: f64) -> Result<Complex64> {
    require_exact(model, "jump_charfn")?;
    positive(n)?;
    model.intensity_at(x).jump_charfn(n, u, c)
}

fn positive(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("multiplicity must be positive"));
    }
    Ok(())
}

/// Atoms grouped by (g value, intensity) so repeated values are evaluated once.
#[derive(Debug, Clone)]
pub(crate) struct Field {
    pub groups: Vec<(f64, Intensity, f64)>,
    pub g_min: f64,
    pub g_max: f64,
}

impl Field {
    pub fn new(model: &dyn CrmModel, g: &MeanFunction) -> Result<Self> {
        let vals = g.values_on(model.base())?;
        let items = vals
            .iter()
            .zip(model.atom_intensities())
            .zip(model.base().weights())
            .map(|((&gv, &rho), m)| (gv, rho, m));
        Ok(Self::from_items(items))
    }

    pub fn from_items(items: impl IntoIterator<Item = (f64, Intensity, f64)>) -> Self {
        let mut groups: Vec<(f64, Intensity, f64)> = Vec::new();
        for (gv, rho, m) in items {
            match groups.iter_mut().find(|e| e.0 == gv && e.1 == rho) {
                Some(e) => e.2 += m,
                None => groups.push((gv, rho, m)),
            }
        }
        groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.rate().total_cmp(&b.1.rate())));
        let g_min = groups.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        let g_max = groups.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        Self { groups, g_min, g_max }
    }

    /// ψ^{(u)}(−it(g − σ)).
    pub fn psi_charfn(&self, u: f64, t: f64, sigma: f64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(gv, rho, m) in &self.groups {
            let w = Complex64::new(0.0, -t * (gv - sigma));
            acc += rho.tilted(u).laplace(w)? * m;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_atomic_measure;
    use crate::models::{DirichletProcess, ExtendedGamma, GeneralizedGamma, Stable, BetaFn};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn models() -> Vec<Box<dyn CrmModel>> {
        let base = build_atomic_measure([(0.0, 0.7), (1.0, 1.3), (2.5, 0.4)]).unwrap();
        vec![
            Box::new(DirichletProcess::new(base.clone())),
            Box::new(ExtendedGamma::new(base.clone(), BetaFn::Steps(vec![(0.0, 1.5), (1.0, 0.6)])).unwrap()),
            Box::new(GeneralizedGamma::new(0.4, 1.7, base.normalized()).unwrap()),
        ]
    }

    #[test]
    fn laplace_examples() {
        for m in models() {
            assert_eq!(laplace_exponent(m.as_ref(), |_| c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        }
        let one = build_atomic_measure([(0.0, 1.0)]).unwrap();
        let d = DirichletProcess::new(one.clone());
        let v = laplace_exponent(&d, |_| c(1.0, 0.0)).unwrap();
        assert!((v.re - std::f64::consts::LN_2).abs() < 1e-15);
        let gg = GeneralizedGamma::new(0.5, 1.0, one).unwrap();
        assert!((laplace_exponent(&gg, |_| c(3.0, 0.0)).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let one = build_atomic_measure([(0.0, 1.0)]).unwrap();
        let eg = ExtendedGamma::new(one.clone(), BetaFn::Constant(1.0)).unwrap();
        assert!((tau_n(&eg, 1, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let gg = GeneralizedGamma::new(0.5, 1.0, one.clone()).unwrap();
        assert!((tau_n(&gg, 1, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((tau_n(&gg, 2, 1.0, 0.0).unwrap() - 0.088_388_347_648_318_44).abs() < 1e-14);
        let st = Stable::new(0.5, one).unwrap();
        assert!(matches!(tau_n(&st, 1, 0.0, 0.0), Err(Error::Unsupported { .. })));
        assert!(tau_n(&gg, 0, 0.0, 0.0).is_err());
    }

    #[test]
    fn kappa_and_jump_examples() {
        let one = build_atomic_measure([(0.0, 1.0)]).unwrap();
        let eg = ExtendedGamma::new(one.clone(), BetaFn::Constant(1.0)).unwrap();
        assert!((kappa_n(&eg, 1, c(0.0, 1.0), 0.0).unwrap() - c(0.5, 0.5)).norm() < 1e-15);
        let gg = GeneralizedGamma::new(0.5, 1.0, one.clone()).unwrap();
        let want = c(1.0, -1.0).powf(-0.5) * 0.5;
        assert!((kappa_n(&gg, 1, c(0.0, 1.0), 0.0).unwrap() - want).norm() < 1e-15);
        let eg2 = ExtendedGamma::new(one, BetaFn::Constant(2.0)).unwrap();
        assert!((jump_charfn(&eg2, 1, 0.0, c(0.0, 1.0), 0.0).unwrap() - c(0.8, 0.4)).norm() < 1e-15);
        for m in models() {
            assert_eq!(jump_charfn(m.as_ref(), 3, 0.5, c(0.0, 0.0), 1.0).unwrap(), c(1.0, 0.0));
            assert!((kappa_n(m.as_ref(), 2, c(0.0, 0.0), 1.0).unwrap().re - tau_n(m.as_ref(), 2, 0.0, 1.0).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_is_increasing_and_concave() {
        for m in models() {
            let f = |u: f64| laplace_exponent(m.as_ref(), |_| c(u, 0.0)).unwrap();
            let mut prev = f(0.0).re;
            let mut prev_slope = f64::INFINITY;
            for k in 1..60 {
                let u = 0.25 * k as f64;
                let v = f(u);
                assert!(v.im.abs() < 1e-15 && v.re >= 0.0);
                let slope = (v.re - prev) / 0.25;
                assert!(slope > 0.0 && slope <= prev_slope + 1e-12);
                prev = v.re;
                prev_slope = slope;
            }
        }
    }

    #[test]
    fn tau_matches_finite_differences_of_single_atom_laplace() {
        for m in models() {
            for &x in &[0.0, 1.0] {
                let rho = m.intensity_at(x);
                let l = |u: f64| rho.laplace(c(u, 0.0)).unwrap().re;
                let (u, h) = (0.6, 1e-3);
                let d1 = (l(u + h) - l(u - h)) / (2.0 * h);
                let d2 = -(l(u + h) - 2.0 * l(u) + l(u - h)) / (h * h);
                let t1 = tau_n(m.as_ref(), 1, u, x).unwrap();
                let t2 = tau_n(m.as_ref(), 2, u, x).unwrap();
                assert!((d1 - t1).abs() / t1 < 1e-5 && (d2 - t2).abs() / t2 < 1e-5);
            }
        }
    }

    proptest! {
        #[test]
        fn kappa_at_negative_real_is_tau(n in 1u32..8, u in 0.0f64..20.0, which in 0usize..3) {
            let m = &models()[which];
            for &x in &[0.0, 1.0, 2.5] {
                let k = kappa_n(m.as_ref(), n, c(-u, 0.0), x).unwrap();
                let t = tau_n(m.as_ref(), n, u, x).unwrap();
                prop_assert!((k.re - t).abs() <= 1e-12 * t && k.im.abs() <= 1e-12 * t);
            }
        }

        #[test]
        fn jump_charfn_bounded_and_conjugate(n in 1u32..6, u in 0.0f64..5.0, t in -50.0f64..50.0, which in 0usize..3) {
            let m = &models()[which];
            let a = jump_charfn(m.as_ref(), n, u, c(0.0, t), 1.0).unwrap();
            let b = jump_charfn(m.as_ref(), n, u, c(0.0, -t), 1.0).unwrap();
            prop_assert!(a.norm() <= 1.0 + 1e-15);
            prop_assert!((a.conj() - b).norm() < 1e-14);
        }
    }
}
