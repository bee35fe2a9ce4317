use super::*;
use crate::measure::{build_atomic_measure, BaseMeasure};
use crate::models::{latent_u_lognorm, BetaFn, DirichletProcess, ExtendedGamma, GeneralizedGamma, SampleSummary, Stable};
use crate::numerics::integrate;
use crate::posterior::PosteriorMeanLaw;
use statrs::function::gamma::ln_gamma;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn base5() -> BaseMeasure {
    build_atomic_measure([(0.0, 0.3), (0.5, 0.4), (1.0, 0.5), (1.5, 0.4), (2.0, 0.4)]).unwrap()
}

fn dirichlet() -> DirichletProcess {
    DirichletProcess::new(base5())
}

fn extended_gamma() -> ExtendedGamma {
    ExtendedGamma::new(base5(), BetaFn::Steps(vec![(0.0, 0.8), (0.9, 1.7)])).unwrap()
}

fn generalized_gamma() -> GeneralizedGamma {
    GeneralizedGamma::new(0.5, 1.5, base5().normalized()).unwrap()
}

fn data(y: &[f64], s: f64) -> MixtureData {
    MixtureData::new(y.to_vec(), Kernel::gaussian(s).unwrap(), MeanFunction::Identity).unwrap()
}

fn law(route: &str, model: &dyn CrmModel, d: &MixtureData) -> Box<dyn MixtureMeanLaw> {
    MixtureRouteRegistry::builtin().prepare(route, model, d, &cfg()).unwrap()
}

fn sigmas(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 2.0 * i as f64 / (n + 1) as f64).collect()
}

#[test]
fn cluster_integral_examples() {
    let m = dirichlet();
    // a narrow kernel centred at an atom picks out that atom
    let k = Kernel::gaussian(1e-3).unwrap();
    let v = cluster_integral(&m, &k, &[1.0], |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
    assert!((v.re - 0.5 * k.density(1.0, 1.0)).abs() < 1e-12 * v.re);
    let k = Kernel::gaussian(0.7).unwrap();
    let wf = |x: f64| Ok(Complex64::new(x, 1.0));
    let v = cluster_integral(&m, &k, &[0.4, 0.4], wf).unwrap();
    let mut want = Complex64::new(0.0, 0.0);
    for &(x, w) in m.base().atoms() {
        want += wf(x).unwrap() * w * k.density(0.4, x).powi(2);
    }
    assert!((v - want).norm() < 1e-15);
    let v = cluster_integral(&m, &k, &[0.4], |x| Ok(Complex64::new(crate::models::tau_n(&m, 1, 0.0, x)?, 0.0))).unwrap();
    let want: f64 = m.base().atoms().iter().map(|&(x, w)| w * k.density(0.4, x)).sum();
    assert!((v.re - want).abs() < 1e-15);
    assert!(cluster_integral(&m, &k, &[], |_| Ok(Complex64::new(1.0, 0.0))).is_err());
}

#[test]
fn partition_weight_examples() {
    let m = dirichlet();
    let d = data(&[0.7], 0.5);
    let w = partition_weights(&m, &d, &cfg()).unwrap();
    assert_eq!(w.len(), 1);
    assert!((w[0].1 - 1.0).abs() < 1e-15);
    // far apart under a narrow kernel: separate clusters
    let d = data(&[0.0, 2.0], 0.05);
    let w = partition_weights(&m, &d, &cfg()).unwrap();
    let split = w.iter().find(|p| p.0.len() == 2).unwrap().1;
    assert!(split > 0.99);
    let d = data(&[0.2, 0.9, 1.4], 0.6);
    for model in [&m as &dyn CrmModel, &extended_gamma(), &generalized_gamma()] {
        let w = partition_weights(model, &d, &cfg()).unwrap();
        assert_eq!(w.len(), 5);
        assert!((w.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn dirichlet_partition_weights_closed_form() {
    // Dirichlet: ∫u^{n−1}(1+u)^{−(a+n)}du is common to all partitions, so
    // weight ∝ ∏_j (n_j − 1)! Σ_k α_k ∏_{i∈C_j} k(Y_i, x_k)
    let m = dirichlet();
    let d = data(&[0.3, 1.1], 0.4);
    let a = m.base().total_mass();
    let n = 2.0;
    let ln_common = ln_gamma(a) + ln_gamma(n) - ln_gamma(a + n);
    let k = d.kernel;
    let sum = |f: &dyn Fn(f64) -> f64| m.base().atoms().iter().map(|&(x, w)| w * f(x)).sum::<f64>();
    let joint = sum(&|x| k.density(0.3, x) * k.density(1.1, x));
    let split = sum(&|x| k.density(0.3, x)) * sum(&|x| k.density(1.1, x));
    let w_joint = marginal_latent_weight(&m, &d, &[vec![0, 1]], &cfg()).unwrap();
    let w_split = marginal_latent_weight(&m, &d, &[vec![0], vec![1]], &cfg()).unwrap();
    assert!((w_joint / (joint * ln_common.exp()) - 1.0).abs() < 1e-10);
    assert!((w_split / (split * ln_common.exp()) - 1.0).abs() < 1e-10);
    assert!(marginal_latent_weight(&m, &d, &[vec![0]], &cfg()).is_err());
    assert!(marginal_latent_weight(&m, &d, &[vec![0, 0], vec![1]], &cfg()).is_err());
}

/// One observation: Σ_k α_k k(Y, x_k) D_k F(σ | X = x_k) / Σ_k α_k k(Y, x_k) D_k,
/// with D_k the latent normalizer of the one-point sample x_k.
fn single_observation_oracle(model: &dyn CrmModel, y: f64, kern: Kernel, sigma: f64, density: bool) -> f64 {
    let table = MeanFunction::Table { points: model.base().atoms().iter().map(|a| (a.0, a.0)).collect() };
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, a) in model.base().atoms() {
        let s = SampleSummary::new(vec![(x, 1)]).unwrap();
        let w = a * kern.density(y, x) * latent_u_lognorm(model, &s).unwrap().exp();
        let post = PosteriorMeanLaw::new(model, &table, &s, &cfg()).unwrap();
        let v = if density {
            post.density(sigma, &cfg()).unwrap().value
        } else {
            post.cdf(sigma, Default::default(), &cfg()).unwrap().value
        };
        num += w * v;
        den += w;
    }
    num / den
}

#[test]
fn single_observation_reduces_to_posterior_mixture() {
    let kern = Kernel::gaussian(0.6).unwrap();
    let d = MixtureData::new(vec![0.8], kern, MeanFunction::Identity).unwrap();
    let models: Vec<(Box<dyn CrmModel>, &str)> = vec![
        (Box::new(dirichlet()), "mdp"),
        (Box::new(dirichlet()), "general"),
        (Box::new(extended_gamma()), "general"),
        (Box::new(extended_gamma()), "quasi_conjugate"),
        (Box::new(generalized_gamma()), "general"),
    ];
    for (model, route) in &models {
        let l = law(route, model.as_ref(), &d);
        for s in [0.45, 1.3] {
            let f = l.density(s, &cfg()).unwrap().value;
            let want = single_observation_oracle(model.as_ref(), 0.8, kern, s, true);
            assert!((f - want).abs() < 1e-6, "{} {route} density at {s}: {f} vs {want}", model.name());
            let c = l.cdf(s, &cfg()).unwrap().value;
            let want = single_observation_oracle(model.as_ref(), 0.8, kern, s, false);
            assert!((c - want).abs() < 1e-6, "{} {route} cdf at {s}: {c} vs {want}", model.name());
        }
    }
}

#[test]
fn narrow_kernel_recovers_the_direct_posterior() {
    let m = generalized_gamma();
    let d = data(&[0.5, 1.0, 2.0], 0.02);
    let l = law("general", &m, &d);
    let sample = SampleSummary::from_observations(&[0.5, 1.0, 2.0]).unwrap();
    let post = PosteriorMeanLaw::new(&m, &MeanFunction::Identity, &sample, &cfg()).unwrap();
    for s in [0.4, 0.9, 1.3] {
        let (a, b) = (l.cdf(s, &cfg()).unwrap().value, post.cdf(s, Default::default(), &cfg()).unwrap().value);
        assert!((a - b).abs() < 1e-6, "{s}: {a} vs {b}");
        let (a, b) = (l.density(s, &cfg()).unwrap().value, post.density(s, &cfg()).unwrap().value);
        assert!((a - b).abs() < 1e-5, "{s}: {a} vs {b}");
    }
}

#[test]
fn extended_gamma_dual_forms_agree() {
    let m = extended_gamma();
    let d = data(&[0.4, 1.3], 0.5);
    let (g, q) = (law("general", &m, &d), law("quasi_conjugate", &m, &d));
    let xs = sigmas(9);
    let (dg, dq) = (g.density_grid(&xs, &cfg()).unwrap(), q.density_grid(&xs, &cfg()).unwrap());
    let (cg, cq) = (g.cdf_grid(&xs, &cfg()).unwrap(), q.cdf_grid(&xs, &cfg()).unwrap());
    for i in 0..xs.len() {
        assert!((dg.value[i] - dq.value[i]).abs() < 1e-6, "density at {}: {} vs {}", xs[i], dg.value[i], dq.value[i]);
        assert!((cg.value[i] - cq.value[i]).abs() < 1e-6, "cdf at {}: {} vs {}", xs[i], cg.value[i], cq.value[i]);
    }
}

#[test]
fn mdp_route_matches_general_route() {
    let m = dirichlet();
    let d = data(&[0.2, 0.9, 1.7], 0.45);
    let (g, p) = (law("general", &m, &d), law("mdp", &m, &d));
    let xs = sigmas(7);
    for &s in &xs {
        let (a, b) = (g.density(s, &cfg()).unwrap().value, p.density(s, &cfg()).unwrap().value);
        assert!((a - b).abs() < 1e-6, "density at {s}: {a} vs {b}");
        let (a, b) = (g.cdf(s, &cfg()).unwrap().value, p.cdf(s, &cfg()).unwrap().value);
        assert!((a - b).abs() < 1e-6, "cdf at {s}: {a} vs {b}");
    }
}

#[test]
fn density_normalizes_and_matches_cdf() {
    // atom masses above 1 keep the density bounded at the atoms
    let base = build_atomic_measure([(0.0, 1.2), (1.0, 1.5), (2.0, 1.0)]).unwrap();
    let m = ExtendedGamma::new(base, BetaFn::Steps(vec![(0.0, 0.8), (0.9, 1.7)])).unwrap();
    let d = data(&[0.6, 1.2], 0.5);
    let l = law("general", &m, &d);
    let loose = QuadratureConfig { abs_tol: 1e-5, rel_tol: 1e-5, ..cfg() };
    let f = |s: f64| Ok(l.density(s, &cfg())?.value);
    let left = integrate(f, 0.0, 1.0, &loose).unwrap().value;
    let right = integrate(f, 1.0, 2.0, &loose).unwrap().value;
    assert!((left + right - 1.0).abs() < 1e-3, "{}", left + right);
    let c = l.cdf(1.0, &cfg()).unwrap().value;
    assert!((left - c).abs() < 2e-3, "{left} vs {c}");
}

#[test]
fn outside_hull_and_point_mass() {
    let m = extended_gamma();
    let d = data(&[0.6, 1.2], 0.5);
    let l = law("general", &m, &d);
    assert_eq!(l.cdf(2.0, &cfg()).unwrap().value, 1.0);
    assert_eq!(l.cdf(2.5, &cfg()).unwrap().value, 1.0);
    assert!((l.cdf(1.999, &cfg()).unwrap().value - 1.0).abs() < 1e-5);
    assert_eq!(l.cdf(-0.1, &cfg()).unwrap().value, 0.0);
    assert_eq!(l.density(2.1, &cfg()).unwrap().value, 0.0);
    let c = MixtureData::new(vec![0.6, 1.2], Kernel::gaussian(0.5).unwrap(), MeanFunction::Constant { value: 0.7 }).unwrap();
    for route in ["general", "quasi_conjugate"] {
        let l = law(route, &m, &c);
        assert!(l.cdf(0.7 - 1e-3, &cfg()).unwrap().value < 0.01);
        assert!(l.cdf(0.7 + 1e-3, &cfg()).unwrap().value > 0.99);
    }
}

#[test]
fn permutations_leave_outputs_unchanged() {
    let m = generalized_gamma();
    let a = data(&[0.2, 1.4, 0.9], 0.5);
    let b = data(&[0.9, 0.2, 1.4], 0.5);
    let (la, lb) = (law("general", &m, &a), law("general", &m, &b));
    for s in [0.5, 1.1] {
        assert_eq!(la.cdf(s, &cfg()).unwrap().value, lb.cdf(s, &cfg()).unwrap().value);
        assert_eq!(la.density(s, &cfg()).unwrap().value, lb.density(s, &cfg()).unwrap().value);
    }
}

#[test]
fn unsupported_inputs_are_rejected() {
    let reg = MixtureRouteRegistry::builtin();
    assert_eq!(reg.names().collect::<Vec<_>>(), vec!["general", "mdp", "quasi_conjugate"]);
    let d = data(&[0.5], 0.5);
    let st = Stable::new(0.5, base5().normalized()).unwrap();
    assert!(matches!(reg.prepare("general", &st, &d, &cfg()), Err(Error::Unsupported { .. })));
    assert!(matches!(reg.prepare("quasi_conjugate", &generalized_gamma(), &d, &cfg()), Err(Error::Unsupported { .. })));
    assert!(matches!(reg.prepare("mdp", &extended_gamma(), &d, &cfg()), Err(Error::Unsupported { .. })));
    assert!(reg.get("nope").is_err());
    assert_eq!(MixtureRouteRegistry::default_for(&dirichlet()), "mdp");
    assert_eq!(MixtureRouteRegistry::default_for(&extended_gamma()), "general");
    let many = MixtureData { y: vec![0.0; 13], kernel: Kernel::gaussian(1.0).unwrap(), g: MeanFunction::Identity };
    assert!(matches!(many.validate(), Err(Error::PartitionCap { n: 13, .. })));
    assert!(MixtureData::new(vec![], Kernel::gaussian(1.0).unwrap(), MeanFunction::Identity).is_err());
}

