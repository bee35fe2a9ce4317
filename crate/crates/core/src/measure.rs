//! Finite atomic measures and the functions integrated against them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite measure given by weighted atoms on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct BaseMeasure {
    atoms: Vec<(f64, f64)>,
    total_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawMeasure> for BaseMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        build_atomic_measure(raw.atoms)
    }
}

impl From<BaseMeasure> for RawMeasure {
    fn from(m: BaseMeasure) -> Self {
        RawMeasure { atoms: m.atoms }
    }
}

/// Sorts, merges duplicate locations and validates weighted atoms.
pub fn build_atomic_measure(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<BaseMeasure> {
    let mut atoms: Vec<(f64, f64)> = pairs.into_iter().collect();
    if atoms.is_empty() {
        return Err(Error::invalid("a measure needs at least one atom"));
    }
    for &(x, w) in &atoms {
        if !x.is_finite() {
            return Err(Error::invalid(format!("non-finite atom location {x}")));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid(format!("atom at {x} has non-positive weight {w}")));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => merged.push((x, w)),
        }
    }
    let total_mass = merged.iter().map(|a| a.1).sum();
    Ok(BaseMeasure { atoms: merged, total_mass })
}

/// Midpoint-rule atoms for a density on [lo, hi], renormalised to `mass`.
pub fn discretize_density(
    density: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n_nodes: usize,
    mass: f64,
) -> Result<BaseMeasure> {
    if n_nodes < 2 || !(lo < hi) || !(mass > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("discretize_density needs n_nodes >= 2, lo < hi and mass > 0"));
    }
    let h = (hi - lo) / n_nodes as f64;
    let mut nodes = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let x = lo + (k as f64 + 0.5) * h;
        let d = density(x);
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::invalid(format!("density is negative or non-finite at {x}: {d}")));
        }
        nodes.push((x, d * h));
    }
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("density vanishes on every node"));
    }
    // zero-density nodes carry no mass and are dropped
    build_atomic_measure(nodes.into_iter().filter(|n| n.1 > 0.0).map(|(x, w)| (x, w * mass / total)))
}

impl BaseMeasure {
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.1)
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The probability measure α/a.
    pub fn normalized(&self) -> BaseMeasure {
        self.scaled(1.0 / self.total_mass)
    }

    pub fn scaled(&self, c: f64) -> BaseMeasure {
        let atoms: Vec<_> = self.atoms.iter().map(|&(x, w)| (x, w * c)).collect();
        let total_mass = atoms.iter().map(|a| a.1).sum();
        BaseMeasure { atoms, total_mass }
    }

    /// Sum of two measures; coinciding locations add their weights.
    pub fn plus(&self, other: &BaseMeasure) -> BaseMeasure {
        build_atomic_measure(self.atoms.iter().chain(other.atoms.iter()).copied())
            .expect("sum of valid measures is valid")
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (self.total_mass - 1.0).abs() <= tol
    }

    /// Σ_k f(x_k) w_k for a complex-valued f.
    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Result<Complex64> {
        integrate(f, self)
    }

    /// Σ_k f(x_k) w_k for a real-valued f.
    pub fn integrate_real(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::invalid(format!("integrand is not finite at atom {x}")));
            }
            acc += v * w;
        }
        Ok(acc)
    }

    /// Mass of the closed interval [lo, hi].
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 >= lo && a.0 <= hi).map(|a| a.1).sum()
    }
}

/// Σ_k f(x_k) w_k; fails on a non-finite value at any atom.
pub fn integrate(f: impl Fn(f64) -> Complex64, m: &BaseMeasure) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, w) in &m.atoms {
        let v = f(x);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::invalid(format!("integrand is not finite at atom {x}")));
        }
        acc += v * w;
    }
    Ok(acc)
}

/// The function g defining the mean functional P̃(g).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum MeanFunction {
    Identity,
    /// 1 on the closed interval [lo, hi], 0 elsewhere.
    Indicator { lo: f64, hi: f64 },
    Constant { value: f64 },
    /// Explicit values at listed locations; other locations are an error.
    Table { points: Vec<(f64, f64)> },
    /// Σ_k c_k x^k.
    Polynomial { coeffs: Vec<f64> },
    /// shift + scale·inner.
    Affine { inner: Box<MeanFunction>, shift: f64, scale: f64 },
}

impl MeanFunction {
    pub fn indicator(lo: f64, hi: f64) -> Self {
        MeanFunction::Indicator { lo, hi }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = match self {
            MeanFunction::Identity => x,
            MeanFunction::Indicator { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            MeanFunction::Constant { value } => *value,
            MeanFunction::Table { points } => points
                .iter()
                .find(|p| (p.0 - x).abs() <= 1e-12 * x.abs().max(1.0))
                .map(|p| p.1)
                .ok_or_else(|| Error::invalid(format!("g is not tabulated at {x}")))?,
            MeanFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            MeanFunction::Affine { inner, shift, scale } => shift + scale * inner.eval(x)?,
        };
        if !v.is_finite() {
            return Err(Error::invalid(format!("g is not finite at {x}")));
        }
        Ok(v)
    }

    /// g at every atom of `m`, in atom order.
    pub fn values_on(&self, m: &BaseMeasure) -> Result<Vec<f64>> {
        m.locations().map(|x| self.eval(x)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeanFunction::Indicator { lo, hi } if !(lo <= hi) => {
                Err(Error::invalid("indicator needs lo <= hi"))
            }
            MeanFunction::Table { points } if points.is_empty() => Err(Error::invalid("empty g table")),
            MeanFunction::Polynomial { coeffs } if coeffs.is_empty() => {
                Err(Error::invalid("polynomial g needs at least one coefficient"))
            }
            MeanFunction::Affine { inner, .. } => inner.validate(),
            _ => Ok(()),
        }
    }

    /// The affine image a + b·g.
    pub fn affine(&self, a: f64, b: f64) -> MeanFunction {
        MeanFunction::Affine { inner: Box::new(self.clone()), shift: a, scale: b }
    }
}

/// `identity`, `indicator:lo:hi`, `constant:c`, `poly:c0,c1,...` or the JSON form.
impl std::str::FromStr for MeanFunction {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            let g: MeanFunction = serde_json::from_str(text)?;
            g.validate()?;
            return Ok(g);
        }
        let bad = || Error::invalid(format!("g must be identity, indicator:lo:hi, constant:c, poly:c0,c1,... or JSON, got {text:?}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = text.split(':').collect();
        let g = match parts.as_slice() {
            ["identity"] => MeanFunction::Identity,
            ["indicator", lo, hi] => MeanFunction::indicator(num(lo)?, num(hi)?),
            ["constant", c] => MeanFunction::Constant { value: num(c)? },
            ["poly", cs] => MeanFunction::Polynomial { coeffs: cs.split(',').map(num).collect::<Result<_>>()? },
            _ => return Err(bad()),
        };
        g.validate()?;
        Ok(g)
    }
}
