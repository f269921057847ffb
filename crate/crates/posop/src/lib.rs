//! Positive linear operators, their characteristic functions, and a
//! desk-scale convergence laboratory.
//!
//! The crate evaluates the classical discrete families (Bernstein,
//! Szász-Mirakjan, Baskakov, Meyer-König-Zeller, Bleimann-Butzer-Hahn,
//! Jakimovski-Leviatan and friends), their Kantorovich and discrete
//! modifications, and the integral operators (Gamma, Weierstrass,
//! Bernstein-Schnabl) that arise as their limits. Every family carries a
//! closed-form characteristic function `L(e^{ist}; x)` next to a
//! brute-force series form, so each formula is testable against an
//! independent route.
//!
//! The [`convergence`] module turns the limit theorems relating these
//! families into executable experiments: evaluate a transformed operator at
//! increasing index, compare with its limit operator, and fit the empirical
//! convergence order.
//!
//! A rendered guide with worked examples lives in `book/`; the same
//! snippets are compiled as doctests through the `posop-book` crate.

pub mod charfun;
pub mod convergence;
pub mod error;
pub mod expr;
pub mod laws;
pub mod numerics;
pub mod operators;
pub mod weights;

pub use error::{Error, Result};
pub use numerics::{Complex, QuadratureSpec, TruncationPolicy};
pub use operators::{Domain, FunctionHandle};
