//! Numerical residuals for the identities characterizing the limit
//! operators: the discrete scaling law, its weight-level form, the
//! integral scaling law and the kernel homogeneity it is equivalent to.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{QuadratureSpec, TruncationPolicy};
use crate::operators::{apply_discrete, apply_gamma, FunctionHandle};
use crate::weights::{self, WeightFamily};

/// Outcome of one identity check.
#[derive(Debug, Clone, Copy)]
pub struct LawResidual {
    /// `|lhs - rhs|`.
    pub residual: f64,
    /// Numeric tolerance the two sides were computed under.
    pub tolerance: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl LawResidual {
    fn new(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        LawResidual {
            residual: (lhs - rhs).abs(),
            tolerance,
            lhs,
            rhs,
        }
    }
}

/// The scaling law only holds for families sampling at nodes `a_k / m`.
fn require_node_homogeneous(fam: &WeightFamily) -> Result<()> {
    match fam {
        WeightFamily::Baskakov { c } if *c == 0.0 => Ok(()),
        WeightFamily::JlExp { .. } | WeightFamily::Lr => Ok(()),
        other => Err(Error::domain(format!(
            "scaling law requires a node-homogeneous family \
             (szasz, jl_exp or lr), got {other:?}"
        ))),
    }
}

/// Residual of `T_{m nu}(f(nu t); x / nu) = T_m(f; x)`.
pub fn discrete_scaling_residual(
    fam: &WeightFamily,
    m: u32,
    nu: u32,
    f: &FunctionHandle,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<LawResidual> {
    require_node_homogeneous(fam)?;
    if nu == 0 {
        return Err(Error::domain("scaling factor nu must be positive"));
    }
    let order = m
        .checked_mul(nu)
        .ok_or_else(|| Error::domain("operator order m*nu overflows"))?;
    let nu_f = f64::from(nu);
    let scaled = f.precompose(f.domain(), move |t| nu_f * t);
    let lhs = apply_discrete(fam, order, &scaled, x / nu_f, policy)?;
    let rhs = apply_discrete(fam, m, f, x, policy)?;
    Ok(LawResidual::new(lhs, rhs, policy.rel_tail_tol))
}

/// Residual of the weight-level law `w_{m,k}(x) = w_{1,k}(m x)`.
pub fn phi_residual(fam: &WeightFamily, m: u32, k: u64, x: f64) -> Result<LawResidual> {
    require_node_homogeneous(fam)?;
    let lhs = weights::weight(fam, m, k, x)?;
    let rhs = weights::weight(fam, 1, k, f64::from(m) * x)?;
    Ok(LawResidual::new(lhs, rhs, f64::EPSILON))
}

/// Residual of `Z(f(t / nu); nu x) = Z(f; x)` for the Gamma operator of
/// order `mu`.
pub fn integral_scaling_residual(
    mu: f64,
    nu: f64,
    f: &FunctionHandle,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<LawResidual> {
    if !(nu > 0.0) || !(x > 0.0) {
        return Err(Error::domain(format!(
            "integral scaling law needs nu > 0 and x > 0, got nu = {nu}, x = {x}"
        )));
    }
    let scaled = f.precompose(f.domain(), move |t| t / nu);
    let lhs = apply_gamma(mu, &scaled, nu * x, quad)?;
    let rhs = apply_gamma(mu, f, x, quad)?;
    Ok(LawResidual::new(lhs, rhs, quad.rel_tol))
}

/// Gamma-operator kernel `K_m(t, x) = x^{-m} m^m t^{m-1} e^{-m t / x} / (m-1)!`,
/// evaluated in the log domain with an overflow guard.
pub fn gamma_kernel(m: u32, t: f64, x: f64) -> Result<f64> {
    if m == 0 || !(t > 0.0) || !(x > 0.0) {
        return Err(Error::domain(format!(
            "gamma kernel needs m >= 1, t > 0, x > 0; got m = {m}, t = {t}, x = {x}"
        )));
    }
    let mf = f64::from(m);
    let ln_k = -mf * x.ln() + mf * mf.ln() + (mf - 1.0) * t.ln() - mf * t / x - ln_gamma(mf);
    if ln_k > 700.0 {
        return Err(Error::domain(format!(
            "gamma kernel overflows for m = {m}, t = {t}, x = {x}"
        )));
    }
    Ok(ln_k.exp())
}

/// Residual of the kernel homogeneity `K_m(nu t, nu x) = K_m(t, x) / nu`.
pub fn kernel_homogeneity_residual(m: u32, nu: f64, t: f64, x: f64) -> Result<LawResidual> {
    if !(nu > 0.0) {
        return Err(Error::domain(format!("kernel law needs nu > 0, got {nu}")));
    }
    let lhs = gamma_kernel(m, nu * t, nu * x)?;
    let rhs = gamma_kernel(m, t, x)? / nu;
    Ok(LawResidual::new(lhs, rhs, f64::EPSILON))
}
