use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::special::{ln_gamma_fn as ln_gamma, upper_incomplete_gamma};

/// Lévy intensity ρ(dv|x) at one location, per unit of α-mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intensity {
    /// v⁻¹ e^{−rate·v}
    Gamma { rate: f64 },
    /// γ/Γ(1−γ) v^{−1−γ} e^{−rate·v}; rate 0 gives the stable law.
    GenGamma { gamma: f64, rate: f64 },
}

impl Intensity {
    pub fn rate(&self) -> f64 {
        match *self {
            Intensity::Gamma { rate } | Intensity::GenGamma { rate, .. } => rate,
        }
    }

    /// The exponentially tilted intensity e^{−u v} ρ(dv).
    pub fn tilted(&self, u: f64) -> Intensity {
        match *self {
            Intensity::Gamma { rate } => Intensity::Gamma { rate: rate + u },
            Intensity::GenGamma { gamma, rate } => Intensity::GenGamma { gamma, rate: rate + u },
        }
    }

    fn branch_check(&self, s: Complex64) -> Result<Complex64> {
        let shifted = s + self.rate();
        if !shifted.re.is_finite() || !shifted.im.is_finite() {
            return Err(Error::Branch(format!("non-finite argument {s}")));
        }
        let ok = match self {
            Intensity::Gamma { .. } => shifted.re > 0.0,
            Intensity::GenGamma { .. } => shifted.re >= 0.0,
        };
        if !ok {
            return Err(Error::Branch(format!(
                "Re(rate + s) = {} leaves the principal half-plane",
                shifted.re
            )));
        }
        Ok(shifted)
    }

    /// ∫ (1 − e^{−v·w}) ρ(dv).
    pub fn laplace(&self, w: Complex64) -> Result<Complex64> {
        let shifted = self.branch_check(w)?;
        Ok(match *self {
            Intensity::Gamma { rate } => {
                let q = w / rate;
                if q.norm() < 1e-4 {
                    // ln(1 + q) by series to keep relative accuracy for tiny arguments
                    let mut term = q;
                    let mut sum = Complex64::new(0.0, 0.0);
                    for k in 1..12 {
                        sum += term / k as f64;
                        term *= -q;
                    }
                    sum
                } else {
                    shifted.ln() - rate.ln()
                }
            }
            Intensity::GenGamma { gamma, rate } => {
                if shifted.norm() == 0.0 {
                    Complex64::new(-rate.powf(gamma), 0.0)
                } else {
                    shifted.powf(gamma) - rate.powf(gamma)
                }
            }
        })
    }

    /// ln of Γ-type prefactor of M_n: ln Γ(n) or ln(γ Γ(n−γ)/Γ(1−γ)).
    fn ln_moment_const(&self, n: u32) -> f64 {
        match *self {
            Intensity::Gamma { .. } => ln_gamma(n as f64),
            Intensity::GenGamma { gamma, .. } => {
                gamma.ln() + ln_gamma(n as f64 - gamma) - ln_gamma(1.0 - gamma)
            }
        }
    }

    fn moment_exponent(&self, n: u32) -> f64 {
        match *self {
            Intensity::Gamma { .. } => -(n as f64),
            Intensity::GenGamma { gamma, .. } => gamma - n as f64,
        }
    }

    /// ln M_n(s) with M_n(s) = ∫ vⁿ e^{−s v} ρ(dv), principal branch.
    pub fn ln_moment(&self, n: u32, s: Complex64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::invalid("moment order must be positive"));
        }
        let shifted = self.branch_check(s)?;
        if shifted.norm() == 0.0 {
            return Err(Error::Branch("moment transform diverges at rate + s = 0".into()));
        }
        Ok(shifted.ln() * self.moment_exponent(n) + self.ln_moment_const(n))
    }

    pub fn moment(&self, n: u32, s: Complex64) -> Result<Complex64> {
        Ok(self.ln_moment(n, s)?.exp())
    }

    /// ln M_n(s) for real s.
    pub fn ln_moment_real(&self, n: u32, s: f64) -> Result<f64> {
        let shifted = s + self.rate();
        if !(shifted > 0.0) {
            return Err(Error::Branch(format!("moment transform needs rate + s > 0, got {shifted}")));
        }
        Ok(self.moment_exponent(n) * shifted.ln() + self.ln_moment_const(n))
    }

    /// Gamma (shape, rate) law of a fixed jump of multiplicity n after tilting by u.
    pub fn jump_law(&self, n: u32, u: f64) -> (f64, f64) {
        match *self {
            Intensity::Gamma { rate } => (n as f64, rate + u),
            Intensity::GenGamma { gamma, rate } => (n as f64 - gamma, rate + u),
        }
    }

    /// E[e^{c J}] for that jump law.
    pub fn jump_charfn(&self, n: u32, u: f64, c: Complex64) -> Result<Complex64> {
        let (shape, rate) = self.jump_law(n, u);
        let base = Complex64::new(1.0, 0.0) - c / rate;
        if !(base.re > 0.0) {
            return Err(Error::Branch(format!("jump characteristic function argument {base}")));
        }
        Ok(base.powf(-shape))
    }

    /// Tail mass N(v) = ∫_v^∞ ρ(ds).
    pub fn tail(&self, v: f64) -> Result<f64> {
        match *self {
            Intensity::Gamma { rate } => upper_incomplete_gamma(0.0, rate * v),
            Intensity::GenGamma { gamma, rate } => {
                let c = gamma / statrs::function::gamma::gamma(1.0 - gamma);
                if rate == 0.0 {
                    Ok(c * v.powf(-gamma) / gamma)
                } else {
                    Ok(c * rate.powf(gamma) * upper_incomplete_gamma(-gamma, rate * v)?)
                }
            }
        }
    }

    /// ∫₀^J s^k ρ(ds) for k = 1, 2: mean and second moment of the small jumps.
    pub fn small_jump_moment(&self, k: i32, j: f64) -> f64 {
        use statrs::function::gamma::{gamma as gamma_fn, gamma_lr};
        match *self {
            Intensity::Gamma { rate } => {
                let a = k as f64;
                if rate == 0.0 {
                    j.powf(a) / a
                } else {
                    gamma_fn(a) * gamma_lr(a, rate * j) / rate.powf(a)
                }
            }
            Intensity::GenGamma { gamma, rate } => {
                let c = gamma / gamma_fn(1.0 - gamma);
                let a = k as f64 - gamma;
                if rate == 0.0 {
                    c * j.powf(a) / a
                } else {
                    c * gamma_fn(a) * gamma_lr(a, rate * j) / rate.powf(a)
                }
            }
        }
    }
}
