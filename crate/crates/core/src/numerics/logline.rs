//! Integrals over u ∈ (0, ∞) of positive integrals given by their logarithm,
//! computed on the line v = ln u.

use crate::error::{Error, Result};
use crate::numerics::quad::{adaptive_partition, gk15_nodes, integrate};
use crate::numerics::QuadratureConfig;

const LOG_DROP: f64 = 45.0;
const LOG_CAP: f64 = 700.0;
const MAX_PANEL: f64 = 1.0;

/// Range of v on which the log-line integrand ln f(e^v) + v matters.
struct Range {
    lo: f64,
    hi: f64,
    peak: f64,
}

fn log_line(ln_f: &impl Fn(f64) -> Result<f64>, v: f64) -> Result<f64> {
    Ok(ln_f(v.exp())? + v)
}

fn range(ln_f: &impl Fn(f64) -> Result<f64>) -> Result<Range> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in -80..=80 {
        let v = 0.5 * k as f64;
        let l = log_line(ln_f, v)?;
        if l > best.0 {
            best = (l, v);
        }
    }
    let (peak, vmax) = best;
    if !peak.is_finite() {
        return Err(Error::Special("latent integrand has no finite peak".into()));
    }
    let mut lo = vmax;
    while log_line(ln_f, lo)? > peak - LOG_DROP {
        lo -= 1.0;
        if lo < -LOG_CAP {
            return Err(Error::Special("latent integrand does not decay as u -> 0".into()));
        }
    }
    let mut hi = vmax;
    while log_line(ln_f, hi)? > peak - LOG_DROP {
        hi += 1.0;
        if hi > LOG_CAP {
            return Err(Error::Special("latent normalizer diverges as u -> infinity".into()));
        }
    }
    Ok(Range { lo, hi, peak })
}

fn tight(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig { abs_tol: 1e-15, rel_tol: cfg.rel_tol.min(1e-12), ..*cfg }
}

/// ln ∫₀^∞ f(u) du for f given as u ↦ ln f(u).
pub(crate) fn log_line_lognorm(ln_f: impl Fn(f64) -> Result<f64>, cfg: &QuadratureConfig) -> Result<f64> {
    let r = range(&ln_f)?;
    let q = integrate(|v| Ok((log_line(&ln_f, v)? - r.peak).exp()), r.lo, r.hi, &tight(cfg))?;
    Ok(q.value.ln() + r.peak)
}

/// Nodes (u_i, w_i) with Σw_i = 1 approximating expectations under the density ∝ f.
/// Panels are at most one unit wide on the log line, so factors varying on that
/// scale are resolved as well.
pub(crate) fn log_line_rule(ln_f: impl Fn(f64) -> Result<f64>, cfg: &QuadratureConfig) -> Result<Vec<(f64, f64)>> {
    log_line_rule_panels(ln_f, cfg, MAX_PANEL)
}

/// As [`log_line_rule`] with panels no wider than `max_panel`.
pub(crate) fn log_line_rule_panels(
    ln_f: impl Fn(f64) -> Result<f64>,
    cfg: &QuadratureConfig,
    max_panel: f64,
) -> Result<Vec<(f64, f64)>> {
    let r = range(&ln_f)?;
    let f = |v: f64| Ok((log_line(&ln_f, v)? - r.peak).exp());
    let (_, panels) = adaptive_partition(f, r.lo, r.hi, &tight(cfg))?;
    let mut nodes = Vec::new();
    for (a, b) in panels {
        let pieces = ((b - a) / max_panel).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + h * p as f64;
            let hi = if p + 1 == pieces { b } else { lo + h };
            for (v, w) in gk15_nodes(lo, hi) {
                nodes.push((v.exp(), w * (log_line(&ln_f, v)? - r.peak).exp()));
            }
        }
    }
    let total: f64 = nodes.iter().map(|p| p.1).sum();
    let floor = total * 1e-17;
    nodes.retain(|p| p.1 > floor);
    let total: f64 = nodes.iter().map(|p| p.1).sum();
    for p in &mut nodes {
        p.1 /= total;
    }
    Ok(nodes)
}

/// Tabulated CDF (v_i, F_i), v = ln u, on `nodes` equally spaced points by the
/// trapezoid rule, for inverse-CDF sampling of the law ∝ f.
pub(crate) fn log_line_cdf_table(ln_f: impl Fn(f64) -> Result<f64>, nodes: usize) -> Result<Vec<(f64, f64)>> {
    if nodes < 2 {
        return Err(Error::invalid("a CDF table needs at least two nodes"));
    }
    let r = range(&ln_f)?;
    let h = (r.hi - r.lo) / (nodes - 1) as f64;
    let mut table = Vec::with_capacity(nodes);
    let mut prev = 0.0;
    let mut acc = 0.0;
    for i in 0..nodes {
        let v = if i + 1 == nodes { r.hi } else { r.lo + h * i as f64 };
        let d = (log_line(&ln_f, v)? - r.peak).exp();
        if i > 0 {
            acc += 0.5 * h * (prev + d);
        }
        prev = d;
        table.push((v, acc));
    }
    if !(acc > 0.0) || !acc.is_finite() {
        return Err(Error::Special("CDF table has no mass".into()));
    }
    for p in &mut table {
        p.1 /= acc;
    }
    Ok(table)
}

