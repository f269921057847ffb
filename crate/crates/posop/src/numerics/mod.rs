//! Scalar building blocks shared by every operator family: generalized
//! rising factorials, complex principal powers, removable-singularity
//! helpers, tail-bounded series summation, adaptive quadrature and the
//! Irwin-Hall density.

mod quadrature;
mod series;
mod special;

pub use quadrature::{adaptive_integrate, QuadratureSpec};
pub use series::{sum_series, KahanSum, SeriesTerm, TruncationPolicy};
pub use special::{
    complex_pow_one_minus, complex_principal_pow, expm1_over, irwin_hall_density,
    ln_rising_factorial_c, rising_factorial_c,
};
pub(crate) use special::{cis, cis_m1, sinc};

/// Complex scalar used for every characteristic-function value.
pub type Complex = num_complex::Complex64;
