//! Quadrature, characteristic-function inversion and special functions.

pub mod inversion;
pub(crate) mod logline;
pub mod quad;
pub mod special;

pub use inversion::{gil_pelaez_cdf, gil_pelaez_cdf_scaled};
pub use quad::{double_quad, integrate, integrate_pieces, pairwise_sum, semi_infinite_quad, QuadResult, QuadValue, QuadratureConfig};
pub use special::{exp_integral_e1, gauss_2f1, ln_gamma_1p, ln_pochhammer, upper_incomplete_gamma};
