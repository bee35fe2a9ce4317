use num_complex::Complex64;

use super::partitions::{partition_sum, Term};
use super::MixtureData;
use crate::error::{Error, Result};
use crate::models::kernels::Field;
use crate::models::{require_exact, CrmModel, Intensity};
use crate::numerics::QuadratureConfig;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Atom {
    pub alpha: f64,
    pub rho: Intensity,
    pub h: f64,
}

/// Quantities shared by every mixture route: atoms with their h-values and
/// the products ∏_{i∈C} k(Y_i, x_k) for every cluster C.
#[derive(Debug, Clone)]
pub(crate) struct MixtureSetup {
    pub n: usize,
    pub atoms: Vec<Atom>,
    /// `kern[mask * K + k]`; each observation's row is scaled so its largest entry is 1.
    pub kern: Vec<f64>,
    pub field: Field,
    pub hull: (f64, f64),
    mean_rate: f64,
}

impl MixtureSetup {
    pub fn new(model: &dyn CrmModel, data: &MixtureData, cfg: &QuadratureConfig) -> Result<Self> {
        require_exact(model, "mixture posterior")?;
        data.validate()?;
        cfg.validate()?;
        let mut y = data.y.clone();
        // canonical order makes the result exactly invariant to permutations
        y.sort_by(f64::total_cmp);
        let base = model.base();
        let mut atoms = Vec::with_capacity(base.len());
        for (&(x, alpha), &rho) in base.atoms().iter().zip(model.atom_intensities()) {
            let h = data.kernel.mean_of(&data.g, x, cfg)?;
            if !h.is_finite() {
                return Err(Error::invalid(format!("h is not finite at atom {x}")));
            }
            atoms.push(Atom { alpha, rho, h });
        }
        let k = atoms.len();
        let n = y.len();
        let mut rows = Vec::with_capacity(n);
        for &yi in &y {
            let ln: Vec<f64> = base.locations().map(|x| data.kernel.ln_density(yi, x)).collect();
            let top = ln.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            rows.push(ln.into_iter().map(|l| (l - top).exp()).collect::<Vec<f64>>());
        }
        let mut kern = vec![1.0; k << n];
        for mask in 1usize..(1 << n) {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            for a in 0..k {
                kern[mask * k + a] = kern[rest * k + a] * rows[i][a];
            }
        }
        let field = Field::from_items(atoms.iter().map(|a| (a.h, a.rho, a.alpha)));
        let hull = (field.g_min, field.g_max);
        let mean_rate = atoms.iter().map(|a| a.rho.rate()).sum::<f64>() / k as f64;
        Ok(Self { n, atoms, kern, field, hull, mean_rate })
    }

    /// Scale λ(u) applied per observation so cluster products stay in range.
    pub fn lambda(&self, u: f64) -> f64 {
        let l = u + self.mean_rate;
        if l > 0.0 {
            l
        } else {
            1.0
        }
    }

    /// ψ(u·1) for real u ≥ 0.
    pub fn psi_real(&self, u: f64) -> Result<f64> {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.alpha * a.rho.laplace(Complex64::new(u, 0.0))?.re;
        }
        Ok(acc)
    }

    /// Cluster values c(C) = λ^{|C|} Σ_k α_k M_{|C|}(s_k) ∏_{i∈C}k(Y_i, x_k) with
    /// s_k = u − it(h_k − σ), and their derivative parts built from M_{|C|+1};
    /// returns them with ψ'(s) = Σ_k α_k M_1(s_k).
    pub fn cluster_terms(&self, u: f64, t: f64, sigma: f64, palm: bool) -> Result<(Vec<Term>, Complex64)> {
        let n = self.n;
        let k = self.atoms.len();
        let lam = self.lambda(u);
        let ln_lam = lam.ln();
        let top = if palm { n + 1 } else { n };
        let mut m = vec![Complex64::new(0.0, 0.0); k * (top + 1)];
        let mut m_abs = vec![0.0; k * (top + 1)];
        let mut psi_prime = Complex64::new(0.0, 0.0);
        for (a, atom) in self.atoms.iter().enumerate() {
            let s = Complex64::new(u, -t * (atom.h - sigma));
            // M_{j+1}(s) = M_j(s)·shape_j/(rate + s)
            let q = lam / (s + atom.rho.rate());
            let mut v = (atom.rho.ln_moment(1, s)? + ln_lam).exp();
            for j in 1..=top {
                if j > 1 {
                    v *= q * atom.rho.jump_law(j as u32 - 1, 0.0).0;
                }
                m[a * (top + 1) + j] = v * atom.alpha;
                m_abs[a * (top + 1) + j] = v.norm() * atom.alpha;
            }
            psi_prime += m[a * (top + 1) + 1] / lam;
        }
        let mut terms = vec![Term::default(); 1 << n];
        for (mask, term) in terms.iter_mut().enumerate().skip(1) {
            let size = mask.count_ones() as usize;
            let row = &self.kern[mask * k..(mask + 1) * k];
            let mut acc = Term::default();
            for (a, &kv) in row.iter().enumerate() {
                if kv == 0.0 {
                    continue;
                }
                let base = a * (top + 1);
                acc.s += m[base + size] * kv;
                acc.s_abs += m_abs[base + size] * kv;
                if palm {
                    acc.d += m[base + size + 1] * (kv / lam);
                    acc.d_abs += m_abs[base + size + 1] * (kv / lam);
                }
            }
            *term = acc;
        }
        Ok((terms, psi_prime))
    }

    /// Σ_π ∏_j c(C_j) at real u (t = 0), scaled by λ(u)^n.
    pub fn partition_total(&self, u: f64) -> Result<f64> {
        let (terms, _) = self.cluster_terms(u, 0.0, 0.0, false)?;
        Ok(partition_sum(&terms, self.n).s.re)
    }
}
