//! Lévy tail N(v) = mass·∫_v^∞ ρ(ds) of a homogeneous piece and its inverse.

use crate::error::{Error, Result};
use crate::models::Intensity;
use crate::numerics::special::{exp_integral_e1, gamma_fn, upper_incomplete_gamma};

/// Below this argument Γ(−γ, x) is summed from its series.
const SERIES_LIMIT: f64 = 0.5;
const MAX_NEWTON: usize = 200;
const MIN_LN_JUMP: f64 = -700.0;
/// Newton steps on ln v below this size end the search.
const NEWTON_DONE: f64 = 1e-7;
/// Below this rate·v/(1−γ) the two-term expansion of the inverse is used without Newton.
const DIRECT_LIMIT: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tail {
    rho: Intensity,
    mass: f64,
    /// γ/Γ(1−γ) for the generalized gamma family.
    c: f64,
    gamma_1m: f64,
}

impl Tail {
    pub(crate) fn new(rho: Intensity, mass: f64) -> Self {
        let (c, gamma_1m) = match rho {
            Intensity::Gamma { .. } => (1.0, 1.0),
            Intensity::GenGamma { gamma, .. } => {
                let g1 = gamma_fn(1.0 - gamma);
                (gamma / g1, g1)
            }
        };
        Self { rho, mass, c, gamma_1m }
    }

    pub(crate) fn mass(&self) -> f64 {
        self.mass
    }

    /// (N(v), v·n(v)) with n the Lévy density.
    fn eval(&self, v: f64) -> Result<(f64, f64)> {
        match self.rho {
            Intensity::Gamma { rate } => {
                let x = rate * v;
                Ok((self.mass * exp_integral_e1(x)?, self.mass * (-x).exp()))
            }
            Intensity::GenGamma { gamma, rate } => {
                if rate == 0.0 {
                    let vn = self.mass * self.c * v.powf(-gamma);
                    return Ok((vn / gamma, vn));
                }
                let x = rate * v;
                let xg = x.powf(-gamma);
                let k = self.mass * self.c * rate.powf(gamma);
                let vn = k * xg * (-x).exp();
                let upper = if x < SERIES_LIMIT { self.small_upper(gamma, x, xg) } else { upper_incomplete_gamma(-gamma, x)? };
                Ok((k * upper, vn))
            }
        }
    }

    /// Γ(−γ, x) = (x^{−γ}e^{−x} − Γ(1−γ) + γ_low(1−γ, x))/γ for small x, given xg = x^{−γ}.
    fn small_upper(&self, gamma: f64, x: f64, xg: f64) -> f64 {
        let a = 1.0 - gamma;
        let mut term = 1.0;
        let mut sum = 1.0 / a;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / (a + k as f64);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        (xg * (-x).exp() - self.gamma_1m + x * xg * sum) / gamma
    }

    /// Small-jump approximation of the inverse, used as the Newton start.
    fn guess(&self, q: f64, prev: f64) -> f64 {
        match self.rho {
            Intensity::GenGamma { gamma, rate } if rate > 0.0 => {
                let k = self.mass * self.c * rate.powf(gamma);
                let x = (gamma * q / k + self.gamma_1m).powf(-1.0 / gamma);
                if x < SERIES_LIMIT {
                    x / rate
                } else {
                    prev
                }
            }
            _ => prev,
        }
    }

    /// The v with N(v) = q. `prev` is any positive starting point, typically the previous jump.
    pub(crate) fn invert(&self, q: f64, prev: f64) -> Result<f64> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Simulation(format!("tail level must be positive, got {q}")));
        }
        if let Intensity::GenGamma { gamma, rate } = self.rho {
            if rate == 0.0 {
                return Ok((self.mass * self.c / (gamma * q)).powf(1.0 / gamma));
            }
        }
        let start = self.guess(q, prev);
        if let Intensity::GenGamma { gamma, rate } = self.rho {
            let d = start * rate / (1.0 - gamma);
            if d < DIRECT_LIMIT {
                // x^{−γ}(1 + γx/(1−γ) + O(x²)) = γq/k + Γ(1−γ)
                return Ok(start * (1.0 + d));
            }
        }
        let target = q.ln();
        let mut y = start.ln();
        // f(y) = ln N(e^y) − ln q is decreasing; lo has f > 0, hi has f < 0
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..MAX_NEWTON {
            if y < MIN_LN_JUMP {
                return Err(Error::Simulation(format!("jump for tail level {q} is below the floating-point range")));
            }
            let v = y.exp();
            let (n, vn) = self.eval(v)?;
            if !(n > 0.0) {
                hi = y;
                y = if lo.is_finite() { 0.5 * (lo + hi) } else { y - 4.0 };
                continue;
            }
            let f = n.ln() - target;
            if f == 0.0 {
                return Ok(v);
            }
            if f > 0.0 {
                lo = lo.max(y);
            } else {
                hi = hi.min(y);
            }
            let slope = -vn / n;
            let step = -f / slope;
            if step.abs() < NEWTON_DONE {
                // quadratic convergence: the error after this step is below step²
                return Ok((y + step).exp());
            }
            let mut next = y + step;
            if !next.is_finite() || step.abs() > 8.0 {
                next = y + 8f64.copysign(step);
            }
            if next <= lo || next >= hi {
                next = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else if lo.is_finite() {
                    lo + 1.0
                } else {
                    hi - 1.0
                };
            }
            y = next;
        }
        Err(Error::Simulation(format!("tail inversion did not converge for level {q}")))
    }

    /// Upper bound on the variance of the jumps below j, from e^{−rate·s} ≤ 1.
    pub(crate) fn residual_var_bound(&self, j: f64) -> f64 {
        match self.rho {
            Intensity::Gamma { .. } => 0.5 * self.mass * j * j,
            Intensity::GenGamma { gamma, .. } => self.mass * self.c * j * j * j.powf(-gamma) / (2.0 - gamma),
        }
    }

    /// Mean and variance of the total of the jumps below j.
    pub(crate) fn residual(&self, j: f64) -> (f64, f64) {
        (self.mass * self.rho.small_jump_moment(1, j), self.mass * self.rho.small_jump_moment(2, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_library() {
        for &gamma in &[0.2, 0.5, 0.8] {
            let t = Tail::new(Intensity::GenGamma { gamma, rate: 1.0 }, 1.0);
            for &x in &[1e-9, 1e-4, 0.1, 0.49] {
                let lib = upper_incomplete_gamma(-gamma, x).unwrap();
                assert!((t.small_upper(gamma, x, x.powf(-gamma)) / lib - 1.0).abs() < 1e-12, "γ={gamma} x={x}");
            }
        }
    }

    #[test]
    fn inversion_round_trips() {
        let tails = [
            Tail::new(Intensity::Gamma { rate: 1.0 }, 2.0),
            Tail::new(Intensity::Gamma { rate: 3.5 }, 0.3),
            Tail::new(Intensity::GenGamma { gamma: 0.5, rate: 1.0 }, 1.0),
            Tail::new(Intensity::GenGamma { gamma: 0.3, rate: 2.0 }, 5.0),
            Tail::new(Intensity::GenGamma { gamma: 0.5, rate: 0.0 }, 1.0),
        ];
        for t in &tails {
            let deep = if matches!(t.rho, Intensity::Gamma { .. }) { 100.0 * t.mass } else { 1e4 };
            for &q in &[1e-3, 0.5, 3.0, 40.0, deep] {
                let v = t.invert(q, 1.0).unwrap();
                let n = t.eval(v).unwrap().0;
                assert!((n / q - 1.0).abs() < 1e-10, "{t:?} q={q}: N={n}");
                let w = t.invert(q, v * 3.0).unwrap();
                assert!((w / v - 1.0).abs() < 1e-10);
            }
        }
        let t = Tail::new(Intensity::Gamma { rate: 1.0 }, 2.0);
        assert!(t.invert(1e4, 1.0).is_err());
        // levels on both sides of the switch to the direct expansion
        for &gamma in &[0.1, 0.5, 0.9] {
            let t = Tail::new(Intensity::GenGamma { gamma, rate: 1.0 }, 1.0);
            for &d in &[0.5 * DIRECT_LIMIT, 0.99 * DIRECT_LIMIT, 1.01 * DIRECT_LIMIT, 1e-9] {
                let x = d * (1.0 - gamma);
                let q = t.eval(x).unwrap().0;
                let v = t.invert(q, 1.0).unwrap();
                assert!((v / x - 1.0).abs() < 1e-9, "γ={gamma} x={x}: {v}");
            }
        }
    }

    #[test]
    fn residual_moments() {
        let t = Tail::new(Intensity::Gamma { rate: 1.0 }, 2.0);
        let (m, v) = t.residual(1e-3);
        assert!((m - 2.0 * (1.0 - (-1e-3f64).exp())).abs() < 1e-15);
        assert!(v > 0.0 && v < t.residual_var_bound(1e-3));
        for rate in [0.0, 1.0, 3.0] {
            let t = Tail::new(Intensity::GenGamma { gamma: 0.4, rate }, 1.5);
            for j in [1e-9, 1e-4, 0.3] {
                let (_, v) = t.residual(j);
                let b = t.residual_var_bound(j);
                assert!(v > 0.0 && v <= b * (1.0 + 1e-12), "rate {rate} j {j}");
            }
        }
    }
}
