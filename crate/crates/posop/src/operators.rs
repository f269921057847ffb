//! Application of each operator family to a user-supplied bounded
//! continuous function: the discrete series, the Gamma / Weierstrass
//! integrals, the Lototsky-Schnabl mixture and the Bernstein-Schnabl
//! moving average.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{
    adaptive_integrate, irwin_hall_density, sum_series, Complex, KahanSum, QuadratureSpec,
    SeriesTerm, TruncationPolicy,
};
use crate::weights::{self, Support, WeightFamily};

/// Runtime bound standing in for the boundedness hypothesis on `f`.
pub const BOUNDEDNESS_GUARD: f64 = 1e12;

/// Declared domain of a probe function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `[0, inf)`
    NonnegReals,
    /// `[0, 1]`
    UnitInterval,
    /// all reals
    Reals,
}

/// A real-valued evaluation map plus its declared domain.
///
/// Every evaluation is guarded: non-finite values or magnitudes above
/// [`BOUNDEDNESS_GUARD`] surface as [`Error::GuardViolation`] instead of
/// propagating through a series.
#[derive(Clone)]
pub struct FunctionHandle {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    domain: Domain,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("FunctionHandle")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl FunctionHandle {
    pub fn new<F>(domain: Domain, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FunctionHandle {
            f: Arc::new(f),
            domain,
        }
    }

    pub fn constant(c: f64) -> Self {
        FunctionHandle::new(Domain::Reals, move |_| c)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = (self.f)(t);
        if !v.is_finite() || v.abs() > BOUNDEDNESS_GUARD {
            return Err(Error::GuardViolation { at: t, value: v });
        }
        Ok(v)
    }

    /// Handle evaluating `self` at `transform(t)`; the guard applies to the
    /// composed value as usual.
    pub fn precompose<G>(&self, domain: Domain, transform: G) -> FunctionHandle
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.f);
        FunctionHandle {
            f: Arc::new(move |t| inner(transform(t))),
            domain,
        }
    }
}

/// Identifies one concrete operator.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    Discrete { family: WeightFamily, n: u32 },
    /// Gamma operator of real order `mu > 0` (`Γ(mu)` replaces the
    /// factorial of the integer-order definition).
    Gamma { mu: f64 },
    Weierstrass { a: f64 },
    Lototsky { n: u32, lambda: FunctionHandle },
    BernsteinSchnabl { n: u32, half_width: f64 },
}

impl OperatorSpec {
    /// Szász-Mirakjan operator of order `m`.
    pub fn szasz(m: u32) -> Self {
        OperatorSpec::Discrete {
            family: WeightFamily::Baskakov { c: 0.0 },
            n: m,
        }
    }

    /// Jakimovski-Leviatan operator with exponential generating function.
    pub fn jl_limit(m: u32, p: f64) -> Self {
        OperatorSpec::Discrete {
            family: WeightFamily::JlExp { p },
            n: m,
        }
    }

    /// Leśniewicz-Rempulska operator of order `m`.
    pub fn lr_limit(m: u32) -> Self {
        OperatorSpec::Discrete {
            family: WeightFamily::Lr,
            n: m,
        }
    }

    pub fn apply(&self, f: &FunctionHandle, x: f64, ctx: &EvalContext) -> Result<f64> {
        match self {
            OperatorSpec::Discrete { family, n } => apply_discrete(family, *n, f, x, &ctx.policy),
            OperatorSpec::Gamma { mu } => apply_gamma(*mu, f, x, &ctx.quad),
            OperatorSpec::Weierstrass { a } => apply_weierstrass(*a, f, x, &ctx.quad),
            OperatorSpec::Lototsky { n, lambda } => apply_lototsky(*n, lambda, f, x, &ctx.policy),
            OperatorSpec::BernsteinSchnabl { n, half_width } => {
                apply_bernstein_schnabl(*n, *half_width, f, x, ctx).map(|v| v.value)
            }
        }
    }
}

/// Numeric controls shared by the operator evaluations.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub policy: TruncationPolicy,
    pub quad: QuadratureSpec,
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for EvalContext {
    fn default() -> Self {
        EvalContext {
            policy: TruncationPolicy::default(),
            quad: QuadratureSpec::default(),
            mc_samples: 100_000,
            seed: 0,
        }
    }
}

/// Discrete-series application `sum_j w_j(x) f(node_j)`.
///
/// Boundary conventions: the Meyer-König-Zeller operator at `x = 1`
/// returns `f(1)`, and the averaged-Bernstein operator at `x = 1` with odd
/// order `n = 2p + 1` returns `f(2p / (2p+1))`, the continuous extension of
/// its formula.
pub fn apply_discrete(
    family: &WeightFamily,
    n: u32,
    f: &FunctionHandle,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    weights::validate(family, n)?;
    match family {
        WeightFamily::Mkz if x == 1.0 => return f.eval(1.0),
        WeightFamily::MixedBernstein if x == 1.0 && n % 2 == 1 => {
            return f.eval(f64::from(n - 1) / f64::from(n));
        }
        _ => {}
    }
    let sup = weights::support(family, n)?;
    let sum = sum_series(
        |j| {
            if !sup.contains(j) {
                return Ok(None);
            }
            let w = weights::weight(family, n, j, x)?;
            let v = f.eval(weights::node(family, n, j)?)?;
            let value = Complex::new(w * v, 0.0);
            Ok(Some(SeriesTerm::new(value, w.max(value.norm()))))
        },
        policy,
    )?;
    Ok(sum.re)
}

/// Gamma operator of order `mu > 0`:
/// `x^{-mu} / Γ(mu) * \int_0^inf f(t/mu) t^{mu-1} e^{-t/x} dt`,
/// with `f(0)` at `x = 0`.
///
/// The integral is truncated at `T = x (mu + 40 + 12 sqrt(mu))`, where the
/// remaining Gamma tail is below 1e-15 of the total mass.
pub fn apply_gamma(mu: f64, f: &FunctionHandle, x: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain(format!("gamma operator needs mu > 0, got {mu}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma operator needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return f.eval(0.0);
    }
    let upper = x * (mu + 40.0 + 12.0 * mu.sqrt());
    let ln_norm = -mu * x.ln() - ln_gamma(mu);
    adaptive_integrate(
        |t| {
            let kernel = if t > 0.0 {
                (ln_norm + (mu - 1.0) * t.ln() - t / x).exp()
            } else if mu == 1.0 {
                ln_norm.exp()
            } else {
                0.0
            };
            Ok(f.eval(t / mu)? * kernel)
        },
        0.0,
        upper,
        quad,
    )
}

/// Weierstrass operator: Gaussian smoothing with variance `a`, truncated at
/// twelve standard deviations (tail below 1e-31).
pub fn apply_weierstrass(
    a: f64,
    f: &FunctionHandle,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("weierstrass operator needs a > 0, got {a}")));
    }
    let radius = 12.0 * a.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * a).sqrt();
    adaptive_integrate(
        |t| {
            let d = t - x;
            Ok(f.eval(t)? * norm * (-d * d / (2.0 * a)).exp())
        },
        x - radius,
        x + radius,
        quad,
    )
}

pub(crate) fn binomial_pmf(n: u32, r: u32, p: f64) -> f64 {
    if p == 0.0 {
        return if r == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if r == n { 1.0 } else { 0.0 };
    }
    let (nf, rf) = (f64::from(n), f64::from(r));
    (ln_gamma(nf + 1.0) - ln_gamma(rf + 1.0) - ln_gamma(nf - rf + 1.0)
        + rf * p.ln()
        + (nf - rf) * (-p).ln_1p())
    .exp()
}

/// Lototsky-Schnabl operator built from Bernstein operators:
/// `sum_r C(n,r) λ(x)^r (1-λ(x))^{n-r} B_r(f_{x,r/n}; x)` with
/// `f_{x,a}(t) = f(a t + (1-a) x)`. The `r = 0` term contributes the
/// constant `f(x)`. Cost is O(n^2).
pub fn apply_lototsky(
    n: u32,
    lambda: &FunctionHandle,
    f: &FunctionHandle,
    x: f64,
    _policy: &TruncationPolicy,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("lototsky operator needs n >= 1"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "lototsky operator needs x in [0, 1], got {x}"
        )));
    }
    let lambda_zero = lambda.eval(0.0)?;
    if (lambda_zero - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "lototsky mixture function must satisfy lambda(0) = 1, got {lambda_zero}"
        )));
    }
    let lam = lambda.eval(x)?;
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::domain(format!(
            "lototsky mixture function must map into [0, 1], got lambda({x}) = {lam}"
        )));
    }
    let nf = f64::from(n);
    let mut acc = KahanSum::new();
    for r in 0..=n {
        let outer = binomial_pmf(n, r, lam);
        if outer == 0.0 {
            continue;
        }
        let inner = if r == 0 {
            f.eval(x)?
        } else {
            let shift = (1.0 - f64::from(r) / nf) * x;
            let mut inner_acc = KahanSum::new();
            for k in 0..=r {
                let w = binomial_pmf(r, k, x);
                if w == 0.0 {
                    continue;
                }
                inner_acc.add(w * f.eval(f64::from(k) / nf + shift)?);
            }
            inner_acc.value()
        };
        acc.add(outer * inner);
    }
    Ok(acc.value())
}

/// Result of a Bernstein-Schnabl evaluation: the Monte Carlo path also
/// reports a standard-error estimate.
#[derive(Debug, Clone, Copy)]
pub struct BernsteinSchnablValue {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Bernstein-Schnabl operator: the expectation of `f` at the mean of `n`
/// independent uniforms on `[x - h, x + h]`.
///
/// For `n <= 25` the n-dimensional integral collapses to a one-dimensional
/// integral against the Irwin-Hall density; past that the alternating sum
/// in the density loses too many digits and a seeded Monte Carlo estimate
/// takes over.
pub fn apply_bernstein_schnabl(
    n: u32,
    half_width: f64,
    f: &FunctionHandle,
    x: f64,
    ctx: &EvalContext,
) -> Result<BernsteinSchnablValue> {
    if n > 25 {
        let (value, std_error) =
            bernstein_schnabl_monte_carlo(n, half_width, f, x, ctx.mc_samples, ctx.seed)?;
        Ok(BernsteinSchnablValue {
            value,
            std_error: Some(std_error),
        })
    } else {
        let value = bernstein_schnabl_irwin_hall(n, half_width, f, x, &ctx.quad)?;
        Ok(BernsteinSchnablValue {
            value,
            std_error: None,
        })
    }
}

/// Exact reformulation for `n <= 25`:
/// `\int_0^n f(x - h + 2 h s / n) irwin_hall(n, s) ds`,
/// integrated segment by segment so each piece of the piecewise polynomial
/// density is smooth.
pub fn bernstein_schnabl_irwin_hall(
    n: u32,
    half_width: f64,
    f: &FunctionHandle,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    validate_bernstein_schnabl(n, half_width)?;
    if n > 25 {
        return Err(Error::domain(format!(
            "Irwin-Hall path supports n <= 25, got {n} (use the Monte Carlo path)"
        )));
    }
    let nf = f64::from(n);
    let mut acc = KahanSum::new();
    for k in 0..n {
        let piece = adaptive_integrate(
            |s| Ok(f.eval(x - half_width + 2.0 * half_width * s / nf)? * irwin_hall_density(n, s)?),
            f64::from(k),
            f64::from(k + 1),
            quad,
        )?;
        acc.add(piece);
    }
    Ok(acc.value())
}

/// Seeded Monte Carlo estimate, deterministic given `(seed, samples)`.
/// Each sample draws from its own substream, so the result does not depend
/// on evaluation order. Returns `(estimate, standard error)`.
pub fn bernstein_schnabl_monte_carlo(
    n: u32,
    half_width: f64,
    f: &FunctionHandle,
    x: f64,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    validate_bernstein_schnabl(n, half_width)?;
    if samples < 2 {
        return Err(Error::domain("Monte Carlo path needs at least 2 samples"));
    }
    let nf = f64::from(n);
    let mut sum = KahanSum::new();
    let mut sum_sq = KahanSum::new();
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, i));
        let mut mean = KahanSum::new();
        for _ in 0..n {
            let u: f64 = rng.random();
            mean.add(x - half_width + 2.0 * half_width * u);
        }
        let v = f.eval(mean.value() / nf)?;
        sum.add(v);
        sum_sq.add(v * v);
    }
    let count = samples as f64;
    let estimate = sum.value() / count;
    let variance = ((sum_sq.value() - count * estimate * estimate) / (count - 1.0)).max(0.0);
    Ok((estimate, (variance / count).sqrt()))
}

fn validate_bernstein_schnabl(n: u32, half_width: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("bernstein_schnabl operator needs n >= 1"));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::domain(format!(
            "bernstein_schnabl operator needs a positive half-width, got {half_width}"
        )));
    }
    Ok(())
}

// splitmix64 of (seed, index); distinct indexes land in distinct substreams
fn substream(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Largest index the series loop may touch for a family, used by callers
/// that iterate supports directly.
pub fn support_limit(family: &WeightFamily, n: u32) -> Result<Support> {
    weights::support(family, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity() -> FunctionHandle {
        FunctionHandle::new(Domain::Reals, |t| t)
    }

    #[test]
    fn discrete_normalization() {
        let f = FunctionHandle::constant(1.0);
        let v = apply_discrete(
            &WeightFamily::Baskakov { c: 0.0 },
            5,
            &f,
            0.7,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!((v - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bernstein_reproduces_identity() {
        // oracle: the five-term binomial sum with mean n x / n = x
        let mut brute = 0.0;
        for j in 0..=4u64 {
            let w = weights::weight(&WeightFamily::Baskakov { c: -1.0 }, 4, j, 0.3).unwrap();
            brute += w * (j as f64 / 4.0);
        }
        assert_relative_eq!(brute, 0.3, max_relative = 1e-14);
        let v = apply_discrete(
            &WeightFamily::Baskakov { c: -1.0 },
            4,
            &identity(),
            0.3,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert_relative_eq!(v, 0.3, max_relative = 1e-14);
    }

    #[test]
    fn bbh_normalization_at_one() {
        let f = FunctionHandle::constant(1.0);
        let v = apply_discrete(&WeightFamily::Bbh, 2, &f, 1.0, &TruncationPolicy::default())
            .unwrap();
        assert!((v - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mkz_boundary_convention() {
        let v = apply_discrete(&WeightFamily::Mkz, 6, &identity(), 1.0, &TruncationPolicy::default())
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn mixed_bernstein_boundary_convention() {
        let v = apply_discrete(
            &WeightFamily::MixedBernstein,
            5,
            &identity(),
            1.0,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert_eq!(v, 0.8);
    }

    #[test]
    fn gamma_normalizes() {
        let f = FunctionHandle::constant(1.0);
        let v = apply_gamma(3.0, &f, 2.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn gamma_reproduces_identity() {
        let v = apply_gamma(4.0, &identity(), 1.5, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(v, 1.5, max_relative = 1e-10);
    }

    #[test]
    fn gamma_exponential_probe() {
        // x^{-1} \int_0^inf e^{-t} e^{-t/x} dt = 1 / (1 + x) at mu = 1, x = 1
        let f = FunctionHandle::new(Domain::NonnegReals, |t| (-t).exp());
        let v = apply_gamma(1.0, &f, 1.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn gamma_at_origin() {
        let f = FunctionHandle::new(Domain::NonnegReals, |t| 3.0 + t);
        assert_eq!(apply_gamma(2.0, &f, 0.0, &QuadratureSpec::default()).unwrap(), 3.0);
    }

    #[test]
    fn weierstrass_normalizes() {
        let f = FunctionHandle::constant(1.0);
        let v = apply_weierstrass(3.0, &f, -2.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn weierstrass_reproduces_identity() {
        let v = apply_weierstrass(2.0, &identity(), 0.4, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(v, 0.4, max_relative = 1e-10);
    }

    #[test]
    fn weierstrass_cosine_probe() {
        let f = FunctionHandle::new(Domain::Reals, f64::cos);
        let v = apply_weierstrass(1.0, &f, 0.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(v, (-0.5f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn lototsky_collapses_to_bernstein() {
        let lambda = FunctionHandle::constant(1.0);
        let v = apply_lototsky(3, &lambda, &identity(), 0.5, &TruncationPolicy::default())
            .unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn lototsky_constants() {
        let lambda = FunctionHandle::new(Domain::UnitInterval, |t| (1.0 + (std::f64::consts::PI * t).cos()) / 2.0);
        let f = FunctionHandle::constant(1.0);
        let v = apply_lototsky(6, &lambda, &f, 0.8, &TruncationPolicy::default()).unwrap();
        assert!((v - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn lototsky_affine_invariance() {
        let lambda = FunctionHandle::new(Domain::UnitInterval, |t| 1.0 - t);
        let v = apply_lototsky(2, &lambda, &identity(), 0.25, &TruncationPolicy::default())
            .unwrap();
        assert_relative_eq!(v, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn lototsky_rejects_bad_mixture() {
        let lambda = FunctionHandle::new(Domain::UnitInterval, |t| 0.5 + t);
        assert!(apply_lototsky(3, &lambda, &identity(), 0.5, &TruncationPolicy::default())
            .is_err());
    }

    #[test]
    fn bernstein_schnabl_constants() {
        let f = FunctionHandle::constant(1.0);
        let ctx = EvalContext::default();
        let v = apply_bernstein_schnabl(4, 0.3, &f, 1.0, &ctx).unwrap();
        assert!((v.value - 1.0).abs() <= 1e-10);
        assert!(v.std_error.is_none());
    }

    #[test]
    fn bernstein_schnabl_mean() {
        let ctx = EvalContext::default();
        let v = apply_bernstein_schnabl(2, 0.5, &identity(), 0.7, &ctx).unwrap();
        assert_relative_eq!(v.value, 0.7, max_relative = 1e-10);
    }

    #[test]
    fn bernstein_schnabl_second_moment() {
        let f = FunctionHandle::new(Domain::Reals, |t| t * t);
        let ctx = EvalContext::default();
        let v = apply_bernstein_schnabl(1, 0.5, &f, 0.0, &ctx).unwrap();
        assert_relative_eq!(v.value, 1.0 / 12.0, max_relative = 1e-10);
    }

    #[test]
    fn monte_carlo_is_order_independent_and_seeded() {
        let f = FunctionHandle::new(Domain::Reals, |t| t * t);
        let (a, _) = bernstein_schnabl_monte_carlo(30, 0.5, &f, 0.0, 2000, 7).unwrap();
        let (b, _) = bernstein_schnabl_monte_carlo(30, 0.5, &f, 0.0, 2000, 7).unwrap();
        assert_eq!(a, b);
        let (c, _) = bernstein_schnabl_monte_carlo(30, 0.5, &f, 0.0, 2000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn guard_violation_reported() {
        let f = FunctionHandle::new(Domain::NonnegReals, |t| 1.0 / t);
        let r = apply_discrete(
            &WeightFamily::Baskakov { c: 0.0 },
            3,
            &f,
            0.5,
            &TruncationPolicy::default(),
        );
        assert!(matches!(r, Err(Error::GuardViolation { .. })));
    }

    #[test]
    fn monotonicity_spot_check() {
        let g = FunctionHandle::new(Domain::NonnegReals, |t| t + 0.1);
        let lhs = apply_gamma(2.0, &identity(), 0.9, &QuadratureSpec::default()).unwrap();
        let rhs = apply_gamma(2.0, &g, 0.9, &QuadratureSpec::default()).unwrap();
        assert!(lhs <= rhs + 1e-10);
    }
}
