//! Torus geometry, Fourier fields, linear multipliers and dealiased products.

mod fft;
mod field;
mod grid;
mod operator;

pub use field::{dealiased_product, lp_norm_physical, FourierField, PhysicalField};
pub use grid::{eigenvalue, in_half_space, make_grid, norm_sq, GridSpec, Mode};
pub use operator::{apply_operator, LinearOperator};
