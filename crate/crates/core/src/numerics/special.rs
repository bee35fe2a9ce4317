use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

pub use statrs::function::gamma::{gamma as gamma_fn, ln_gamma as ln_gamma_fn};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;
const MAX_TERMS: usize = 100_000;

/// ln of the rising factorial (x)_n = Γ(x+n)/Γ(x) for x > 0.
pub fn ln_pochhammer(x: f64, n: f64) -> f64 {
    ln_gamma(x + n) - ln_gamma(x)
}

/// Γ(a; x) = ∫_x^∞ s^{a−1} e^{−s} ds.
///
/// Defined for a > 0, x ≥ 0 and, as an extension, for any real a when x > 0.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !a.is_finite() || !x.is_finite() || x < 0.0 {
        return Err(Error::Special(format!("incomplete gamma domain: a = {a}, x = {x}")));
    }
    if x == 0.0 {
        if a > 0.0 {
            return Ok(gamma(a));
        }
        return Err(Error::Special(format!("Γ({a}; 0) diverges")));
    }
    if x >= a + 1.0 && x >= 1.0 {
        return continued_fraction(a, x);
    }
    if a >= 1.0 {
        return Ok(gamma(a) * (1.0 - lower_series_regularized(a, x)?));
    }
    if x >= 1.5 {
        // only reachable for a in (0.5, 1) with x < a + 1
        return Ok(gamma(a) * (1.0 - lower_series_regularized(a, x)?));
    }
    // x < 1.5: start at the fractional part of a in [0, 1) and recurse downwards
    let m = if a >= 0.0 { 0.0 } else { (-a).ceil() };
    let mut b = a + m;
    let mut val = small_a_upper(b, x)?;
    for _ in 0..(m as usize) {
        val = (val - x.powf(b - 1.0) * (-x).exp()) / (b - 1.0);
        b -= 1.0;
    }
    Ok(val)
}

/// ln Γ(1 + a), accurate in relative terms for small |a|.
pub fn ln_gamma_1p(a: f64) -> f64 {
    if a.abs() > 0.25 {
        return ln_gamma(1.0 + a);
    }
    const ZETA: [f64; 4] = [
        1.644_934_066_848_226_4,
        1.202_056_903_159_594_2,
        1.082_323_233_711_138_2,
        1.036_927_755_143_369_9,
    ];
    let zeta = |k: i32| -> f64 {
        if k <= 5 {
            return ZETA[(k - 2) as usize];
        }
        let n = 40.0f64;
        let head: f64 = (1..40).map(|j| (j as f64).powi(-k)).sum();
        head + n.powi(1 - k) / (k as f64 - 1.0) + 0.5 * n.powi(-k)
    };
    let mut sum = -EULER_GAMMA * a;
    let mut pow = -a;
    for k in 2..60 {
        pow *= -a;
        let t = zeta(k) / k as f64 * pow;
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Exponential integral E1(x) = Γ(0; x) for x > 0.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Special(format!("E1 domain: x = {x}")));
    }
    upper_incomplete_gamma(0.0, x)
}

/// Regularised lower incomplete gamma by its power series.
fn lower_series_regularized(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..MAX_TERMS {
        term *= x / (a + k as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            let ln = a * x.ln() - x - ln_gamma(a) + sum.ln();
            return Ok(ln.exp());
        }
    }
    Err(Error::Special(format!("incomplete gamma series failed: a = {a}, x = {x}")))
}

/// Γ(a; x) for a ∈ [0, 1), 0 < x < 1.5, free of the 1/a cancellation.
fn small_a_upper(a: f64, x: f64) -> Result<f64> {
    let lx = x.ln();
    let head = if a == 0.0 {
        -EULER_GAMMA - lx
    } else {
        let g1 = ln_gamma_1p(a).exp_m1() / a;
        g1 - (a * lx).exp_m1() / a
    };
    // − Σ_{k≥1} (−1)^k x^{a+k} / (k! (a+k))
    let xa = if a == 0.0 { 1.0 } else { (a * lx).exp() };
    let mut fact_term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        fact_term *= -x / k as f64;
        let t = fact_term / (a + k as f64);
        sum += t;
        if t.abs() < 1e-17 * sum.abs().max(1e-300) {
            return Ok(head - xa * sum);
        }
    }
    Err(Error::Special(format!("incomplete gamma small-a series failed: a = {a}, x = {x}")))
}

/// Modified Lentz evaluation of the Legendre continued fraction.
fn continued_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return Ok((a * x.ln() - x).exp() * h);
        }
    }
    Err(Error::Special(format!("incomplete gamma continued fraction failed: a = {a}, x = {x}")))
}

/// Gauss hypergeometric ₂F₁(a, b; c; z) for real |z| < 1.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) || ![a, b, c].iter().all(|v| v.is_finite()) {
        return Err(Error::Special(format!("2F1 requires |z| < 1, got z = {z}")));
    }
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::Special(format!("2F1 undefined for c = {c}")));
    }
    if z < -0.5 {
        // Pfaff: maps z into (1/3, 1/2)
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-b) * series_2f1(b, c - a, c, w)?);
    }
    if z > 0.5 {
        let (ea, eb) = (c - a, c - b);
        let terminates = |p: f64| p <= 0.0 && p.fract() == 0.0;
        if terminates(ea) || terminates(eb) || ea.abs() + eb.abs() < a.abs() + b.abs() {
            return Ok((1.0 - z).powf(c - a - b) * series_2f1(ea, eb, c, z)?);
        }
    }
    series_2f1(a, b, c, z)
}

fn series_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() < 1e-13 * sum.abs() * 1e-3 {
            return Ok(sum);
        }
    }
    Err(Error::Special(format!("2F1 series did not converge at z = {z}")))
}
