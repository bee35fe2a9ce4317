use std::f64::consts::PI;

use num_complex::Complex64;

use super::quad::{panels_to_infinity, PanelPlan, QuadResult, QuadratureConfig, WithEnvelope};
use crate::error::Result;

/// P(W ≤ 0) from the characteristic function of W.
///
/// Evaluates ½ − (1/π)∫₀^∞ Im φ(t)/t dt. The piece [0, t_min] is replaced
/// by its linearisation Im φ(t_min), i.e. t_min·E[W].
pub fn gil_pelaez_cdf(
    phi: impl FnMut(f64) -> Result<Complex64>,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<f64>> {
    gil_pelaez_cdf_scaled(phi, 1.0, cfg)
}

/// As [`gil_pelaez_cdf`], with `scale` a rough size of |W| used to place the first panel.
pub fn gil_pelaez_cdf_scaled(
    mut phi: impl FnMut(f64) -> Result<Complex64>,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<f64>> {
    gil_pelaez_enveloped(
        |t| {
            let p = phi(t)?;
            Ok((p, p.norm()))
        },
        scale,
        cfg,
    )
}

/// Inversion where `phi` also returns an envelope bounding |φ| on the tail,
/// e.g. Σ w_i|φ_i| for a mixture of characteristic functions.
pub(crate) fn gil_pelaez_enveloped(
    mut phi: impl FnMut(f64) -> Result<(Complex64, f64)>,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<f64>> {
    let t0 = cfg.t_min;
    let first_end = (1.0 / scale.max(1e-300)).max(2.0 * t0).max(1e-300);
    let correction = if t0 > 0.0 { phi(t0)?.0.im } else { 0.0 };
    let mut f = WithEnvelope(|t: f64| -> Result<(f64, f64)> {
        let (p, env) = phi(t)?;
        Ok((p.im / t, env))
    });
    let plan = PanelPlan {
        start: t0,
        first_end,
        min_end: first_end,
        quiet_panels: 2,
        taper_on_stall: true,
    };
    let r = panels_to_infinity(&mut f, plan, cfg)?;
    let integral = r.value + correction;
    Ok(QuadResult {
        value: 0.5 - integral / PI,
        err_estimate: r.err_estimate / PI,
        subdivisions_used: r.subdivisions_used,
        truncation_t: r.truncation_t,
    })
}

/// Flags CDF values outside [−ε, 1+ε].
pub fn cdf_range_diagnostic(sigma: f64, value: f64, eps: f64) -> Option<String> {
    let clamped = value.clamp(-eps, 1.0 + eps);
    ((value - clamped).abs() > 0.0).then(|| format!("CDF value {value:e} at sigma = {sigma} outside [-{eps:e}, 1 + {eps:e}]"))
}
