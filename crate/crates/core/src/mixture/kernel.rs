use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::measure::MeanFunction;
use crate::numerics::{integrate, QuadratureConfig};

/// Standard deviations covered by numerical y-integrals.
const Y_RANGE: f64 = 12.0;

/// Density k(y, x) in y, indexed by the latent x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    /// N(y; x, s²) with respect to Lebesgue measure.
    Gaussian { s: f64 },
}

impl Kernel {
    pub fn gaussian(s: f64) -> Result<Self> {
        let k = Kernel::Gaussian { s };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Gaussian { s } if s.is_finite() && s > 0.0 => Ok(()),
            Kernel::Gaussian { s } => Err(Error::invalid(format!("gaussian kernel needs s > 0, got {s}"))),
        }
    }

    pub fn ln_density(&self, y: f64, x: f64) -> f64 {
        match *self {
            Kernel::Gaussian { s } => {
                let z = (y - x) / s;
                -0.5 * z * z - s.ln() - 0.5 * (2.0 * PI).ln()
            }
        }
    }

    pub fn density(&self, y: f64, x: f64) -> f64 {
        self.ln_density(y, x).exp()
    }

    /// h(x) = ∫ g(y) k(y, x) dy.
    pub fn mean_of(&self, g: &MeanFunction, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
        let Kernel::Gaussian { s } = *self;
        match g {
            MeanFunction::Identity => Ok(x),
            MeanFunction::Constant { value } => Ok(*value),
            MeanFunction::Affine { inner, shift, scale } => Ok(shift + scale * self.mean_of(inner, x, cfg)?),
            MeanFunction::Indicator { lo, hi } => Ok(normal_interval((lo - x) / s, (hi - x) / s)),
            _ => {
                let q = integrate(
                    |z| Ok(g.eval(x + s * z)? * (-0.5 * z * z).exp() / (2.0 * PI).sqrt()),
                    -Y_RANGE,
                    Y_RANGE,
                    cfg,
                )?;
                Ok(q.value)
            }
        }
    }

    /// max over `xs` of |∫k(y, x)dy − 1|, by quadrature in y.
    pub fn normalization_defect(&self, xs: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
        let Kernel::Gaussian { s } = *self;
        let mut worst = 0.0f64;
        for &x in xs {
            let q = integrate(|y| Ok(self.density(y, x)), x - Y_RANGE * s, x + Y_RANGE * s, cfg)?;
            worst = worst.max((q.value - 1.0).abs());
        }
        Ok(worst)
    }
}

/// P(a ≤ Z ≤ b) for standard normal Z, evaluated in the lighter tail.
fn normal_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        0.5 * (erfc(a / SQRT_2) - erfc(b / SQRT_2))
    } else if b < 0.0 {
        0.5 * (erfc(-b / SQRT_2) - erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * erfc(-a / SQRT_2) - 0.5 * erfc(b / SQRT_2)
    }
}

/// `gaussian:s`.
impl FromStr for Kernel {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("kernel must look like gaussian:s, got {text:?}"));
        let (family, param) = text.split_once(':').ok_or_else(bad)?;
        match family.trim() {
            "gaussian" => Kernel::gaussian(param.trim().parse::<f64>().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Gaussian { s } => write!(f, "gaussian:{s}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_validate() {
        let k: Kernel = "gaussian:0.5".parse().unwrap();
        assert_eq!(k, Kernel::Gaussian { s: 0.5 });
        assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        for bad in ["gaussian", "gaussian:0", "gaussian:-1", "laplace:1", "gaussian:x"] {
            assert!(bad.parse::<Kernel>().is_err(), "{bad}");
        }
    }

    #[test]
    fn normalized_on_a_grid() {
        let cfg = QuadratureConfig::default();
        for s in [0.05, 0.3, 2.0] {
            let k = Kernel::gaussian(s).unwrap();
            let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.7).collect();
            assert!(k.normalization_defect(&xs, &cfg).unwrap() < 1e-6);
        }
    }

    #[test]
    fn h_closed_forms_match_quadrature() {
        let cfg = QuadratureConfig::default();
        let k = Kernel::gaussian(0.4).unwrap();
        assert_eq!(k.mean_of(&MeanFunction::Identity, 1.3, &cfg).unwrap(), 1.3);
        let quad = MeanFunction::Polynomial { coeffs: vec![0.0, 1.0] };
        assert!((k.mean_of(&quad, 1.3, &cfg).unwrap() - 1.3).abs() < 1e-10);
        // E[(x + sZ)²] = x² + s²
        let sq = MeanFunction::Polynomial { coeffs: vec![0.0, 0.0, 1.0] };
        assert!((k.mean_of(&sq, 1.3, &cfg).unwrap() - (1.69 + 0.16)).abs() < 1e-10);
        let ind = MeanFunction::indicator(0.0, 1.0);
        for x in [-3.0, -0.2, 0.5, 1.1, 4.0] {
            let closed = k.mean_of(&ind, x, &cfg).unwrap();
            let num = integrate(|y| Ok(if (0.0..=1.0).contains(&y) { k.density(y, x) } else { 0.0 }), -10.0, 10.0, &cfg)
                .unwrap()
                .value;
            assert!((closed - num).abs() < 1e-8, "{x}: {closed} vs {num}");
        }
        let table = MeanFunction::Table { points: vec![(0.0, 1.0)] };
        assert!(k.mean_of(&table, 0.0, &cfg).is_err());
    }
}
