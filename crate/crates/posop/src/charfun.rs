//! Characteristic functions `L(e^{ist}; x)` for every family, in closed
//! form and in brute-force series form. The series form is the independent
//! oracle for the closed expressions: the two routes share no algebra
//! beyond the weights themselves.

use crate::error::{Error, Result};
use crate::numerics::{
    cis, cis_m1, complex_pow_one_minus, complex_principal_pow, expm1_over, sinc, sum_series,
    Complex, KahanSum, SeriesTerm, TruncationPolicy,
};
use crate::operators::{apply_lototsky, Domain, FunctionHandle};
use crate::weights::{self, baskakov_real_order, Support, WeightFamily};

/// One family whose characteristic function can be evaluated.
#[derive(Debug, Clone)]
pub enum CharfunSpec {
    Baskakov { c: f64, n: u32 },
    /// Constant-preserving k-th Kantorovich modification `V_n^{[c](k)}`.
    KantorovichV { c: f64, k: u32, n: u32 },
    DiscreteD { c: f64, k: u32, rho: f64, n: u32 },
    QA { a: f64, n: u32 },
    Szasz { m: u32 },
    /// Limit of the Kantorovich experiments: `V_m^{[0](k)}`.
    V0Limit { k: u32, m: u32 },
    Gamma { mu: f64 },
    Weierstrass { a: f64 },
    JlExp { p: f64, m: u32 },
    Lr { m: u32 },
    BernsteinSchnabl { n: u32, b: f64 },
    Lototsky { n: u32, lambda: FunctionHandle },
    Mkz { n: u32 },
    Bbh { n: u32 },
    MixedBernstein { n: u32 },
}

const ONE: Complex = Complex::new(1.0, 0.0);

/// Closed-form characteristic function.
///
/// Every family except Meyer-König-Zeller has a closed or finitely
/// summable form; `Mkz` is refused here and must go through
/// [`charfun_series`]. The value at `s = 0` is exactly 1 by a dedicated
/// branch: all in-scope families preserve constants.
pub fn charfun_closed(spec: &CharfunSpec, s: f64, x: f64) -> Result<Complex> {
    if !s.is_finite() || !x.is_finite() {
        return Err(Error::domain("charfun arguments must be finite"));
    }
    match *spec {
        CharfunSpec::Baskakov { c, n } => {
            validate_point(&WeightFamily::Baskakov { c }, n, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            baskakov_closed(c, f64::from(n), f64::from(n), s, x)
        }
        CharfunSpec::Szasz { m } => {
            validate_point(&WeightFamily::Baskakov { c: 0.0 }, m, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            baskakov_closed(0.0, f64::from(m), f64::from(m), s, x)
        }
        CharfunSpec::KantorovichV { c, k, n } => {
            validate_point(&WeightFamily::Baskakov { c }, n, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let nf = f64::from(n);
            let prefactor = complex_principal_pow(
                expm1_over(Complex::new(0.0, s / nf)),
                f64::from(k),
            )?;
            let tail = baskakov_shifted_closed(c, nf, k, s / nf, x)?;
            Ok(prefactor * tail)
        }
        CharfunSpec::V0Limit { k, m } => {
            if x < 0.0 {
                return Err(Error::domain(format!("v0_limit needs x >= 0, got {x}")));
            }
            if m == 0 {
                return Err(Error::domain("v0_limit needs m >= 1"));
            }
            if s == 0.0 {
                return Ok(ONE);
            }
            let mf = f64::from(m);
            let prefactor = complex_principal_pow(
                expm1_over(Complex::new(0.0, s / mf)),
                f64::from(k),
            )?;
            Ok(prefactor * (mf * x * cis_m1(s / mf)).exp())
        }
        CharfunSpec::DiscreteD { c, k, rho, n } => {
            validate_point(&WeightFamily::DiscreteD { c, k, rho }, n, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let (nf, kf) = (f64::from(n), f64::from(k));
            let scale = nf * rho - kf * c;
            let phase = cis(s * kf * (rho + 1.0) / (2.0 * scale));
            let tail = baskakov_shifted_closed(c, nf, k, s * rho / scale, x)?;
            Ok(phase * tail)
        }
        CharfunSpec::QA { a, n } => {
            validate_point(&WeightFamily::QA { a }, n, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let w = cis_m1(s / f64::from(n));
            let binomial_part = complex_pow_one_minus(x * w, -f64::from(n))?;
            Ok(binomial_part * (a * x / (1.0 + x) * w).exp())
        }
        CharfunSpec::Gamma { mu } => {
            if !(mu > 0.0) || x < 0.0 {
                return Err(Error::domain(format!(
                    "gamma charfun needs mu > 0 and x >= 0, got mu = {mu}, x = {x}"
                )));
            }
            if s == 0.0 {
                return Ok(ONE);
            }
            complex_principal_pow(Complex::new(1.0, -s * x / mu), -mu)
        }
        CharfunSpec::Weierstrass { a } => {
            if !(a > 0.0) {
                return Err(Error::domain(format!("weierstrass charfun needs a > 0, got {a}")));
            }
            if s == 0.0 {
                return Ok(ONE);
            }
            Ok((-0.5 * a * s * s).exp() * cis(s * x))
        }
        CharfunSpec::JlExp { p, m } => {
            validate_point(&WeightFamily::JlExp { p }, m, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            Ok(((f64::from(m) * x + p) * cis_m1(s / f64::from(m))).exp())
        }
        CharfunSpec::Lr { m } => {
            validate_point(&WeightFamily::Lr, m, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            // cosh(m x e^{is/m}) / cosh(m x), written with e^{-.} factors so
            // nothing overflows for large m x
            let w = f64::from(m) * x;
            let z = w * cis(s / f64::from(m));
            let numerator = (z - w).exp() + (-z - w).exp();
            let denominator = 1.0 + (-2.0 * w).exp();
            Ok(numerator / denominator)
        }
        CharfunSpec::BernsteinSchnabl { n, b } => {
            if n == 0 || !(b > 0.0) {
                return Err(Error::domain(format!(
                    "bernstein_schnabl charfun needs n >= 1 and b > 0, got n = {n}, b = {b}"
                )));
            }
            if s == 0.0 {
                return Ok(ONE);
            }
            Ok(sinc(s * b).powi(n as i32) * cis(s * x))
        }
        CharfunSpec::Lototsky { n, ref lambda } => {
            if s == 0.0 {
                lototsky_mixture_value(lambda, x)?;
                return Ok(ONE);
            }
            lototsky_closed(n, lambda, s, x)
        }
        CharfunSpec::Bbh { n } => {
            validate_point(&WeightFamily::Bbh, n, x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            bbh_finite_sum(n, s, x)
        }
        CharfunSpec::MixedBernstein { n } => {
            if s == 0.0 {
                if x == 1.0 && n % 2 == 1 {
                    return Ok(ONE);
                }
                validate_point(&WeightFamily::MixedBernstein, n, x)?;
                return Ok(ONE);
            }
            mixed_bernstein_closed(n, s, x)
        }
        CharfunSpec::Mkz { .. } => Err(Error::domain(
            "mkz has no closed-form characteristic function; use charfun_series",
        )),
    }
}

/// Brute-force series form `sum_j w_j(x) e^{i s node_j}` for the discrete
/// families; the oracle against which every closed form is checked.
pub fn charfun_series(
    spec: &CharfunSpec,
    s: f64,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    match *spec {
        CharfunSpec::Baskakov { c, n } => weight_series(&WeightFamily::Baskakov { c }, n, s, x, policy),
        CharfunSpec::Szasz { m } => weight_series(&WeightFamily::Baskakov { c: 0.0 }, m, s, x, policy),
        CharfunSpec::QA { a, n } => weight_series(&WeightFamily::QA { a }, n, s, x, policy),
        CharfunSpec::JlExp { p, m } => weight_series(&WeightFamily::JlExp { p }, m, s, x, policy),
        CharfunSpec::Lr { m } => weight_series(&WeightFamily::Lr, m, s, x, policy),
        CharfunSpec::Mkz { n } => {
            if x == 1.0 {
                return Ok(cis(s));
            }
            weight_series(&WeightFamily::Mkz, n, s, x, policy)
        }
        CharfunSpec::Bbh { n } => weight_series(&WeightFamily::Bbh, n, s, x, policy),
        CharfunSpec::MixedBernstein { n } => {
            if x == 1.0 && n % 2 == 1 {
                return Ok(cis(s * f64::from(n - 1) / f64::from(n)));
            }
            weight_series(&WeightFamily::MixedBernstein, n, s, x, policy)
        }
        CharfunSpec::DiscreteD { c, k, rho, n } => {
            weight_series(&WeightFamily::DiscreteD { c, k, rho }, n, s, x, policy)
        }
        CharfunSpec::KantorovichV { c, k, n } => {
            validate_point(&WeightFamily::Baskakov { c }, n, x)?;
            let nf = f64::from(n);
            let prefactor = complex_principal_pow(
                expm1_over(Complex::new(0.0, s / nf)),
                f64::from(k),
            )?;
            let tail = shifted_weight_series(c, n, k, s, x, policy)?;
            Ok(prefactor * tail)
        }
        CharfunSpec::V0Limit { k, m } => {
            if x < 0.0 {
                return Err(Error::domain(format!("v0_limit needs x >= 0, got {x}")));
            }
            let mf = f64::from(m);
            let prefactor = complex_principal_pow(
                expm1_over(Complex::new(0.0, s / mf)),
                f64::from(k),
            )?;
            let tail = shifted_weight_series(0.0, m, k, s, x, policy)?;
            Ok(prefactor * tail)
        }
        CharfunSpec::Lototsky { n, ref lambda } => {
            let re = apply_lototsky(
                n,
                lambda,
                &FunctionHandle::new(Domain::Reals, move |t| (s * t).cos()),
                x,
                policy,
            )?;
            let im = apply_lototsky(
                n,
                lambda,
                &FunctionHandle::new(Domain::Reals, move |t| (s * t).sin()),
                x,
                policy,
            )?;
            Ok(Complex::new(re, im))
        }
        CharfunSpec::Gamma { .. }
        | CharfunSpec::Weierstrass { .. }
        | CharfunSpec::BernsteinSchnabl { .. } => Err(Error::domain(
            "charfun_series requires a discrete family",
        )),
    }
}

/// Un-normalized k-th Kantorovich modification of the Baskakov-type
/// operator applied to `e^{ist}`. Its value at `s = 0` is
/// `n^{c,k} / n^k`, so the constant-preserving variant
/// [`CharfunSpec::KantorovichV`] rescales by the reciprocal.
pub fn kantorovich_modification_closed(
    c: f64,
    k: u32,
    n: u32,
    s: f64,
    x: f64,
) -> Result<Complex> {
    validate_point(&WeightFamily::Baskakov { c }, n, x)?;
    let nf = f64::from(n);
    let rising = crate::numerics::rising_factorial_c(nf, c, k)?;
    let ratio = expm1_over(Complex::new(0.0, s / nf)) / nf;
    let prefactor = complex_principal_pow(ratio, f64::from(k))?;
    let tail = baskakov_shifted_closed(c, nf, k, s / nf, x)?;
    Ok(rising * prefactor * tail)
}

/// `(1 - c x (e^{i theta} - 1))^{-n/c - k}`, the common tail of the
/// Kantorovich and discrete-D closed forms (with `e^{n x (e^{i theta}-1)}`
/// as its `c = 0` limit).
pub(crate) fn baskakov_shifted_closed(
    c: f64,
    nf: f64,
    k: u32,
    theta: f64,
    x: f64,
) -> Result<Complex> {
    let w = cis_m1(theta);
    if c == 0.0 {
        Ok((nf * x * w).exp())
    } else {
        complex_pow_one_minus(c * x * w, -nf / c - f64::from(k))
    }
}

fn baskakov_closed(c: f64, order: f64, freq: f64, s: f64, x: f64) -> Result<Complex> {
    let w = cis_m1(s / freq);
    if c == 0.0 {
        Ok((order * x * w).exp())
    } else {
        complex_pow_one_minus(c * x * w, -order / c)
    }
}

fn lototsky_mixture_value(lambda: &FunctionHandle, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("lototsky needs x in [0, 1], got {x}")));
    }
    let at_zero = lambda.eval(0.0)?;
    if (at_zero - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "lototsky mixture function must satisfy lambda(0) = 1, got {at_zero}"
        )));
    }
    let lam = lambda.eval(x)?;
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::domain(format!(
            "lototsky mixture function must map into [0, 1], got lambda({x}) = {lam}"
        )));
    }
    Ok(lam)
}

fn lototsky_closed(n: u32, lambda: &FunctionHandle, s: f64, x: f64) -> Result<Complex> {
    if n == 0 {
        return Err(Error::domain("lototsky needs n >= 1"));
    }
    let lam = lototsky_mixture_value(lambda, x)?;
    let nf = f64::from(n);
    let bernoulli = ONE + x * cis_m1(s / nf);
    let base = ONE - lam + lam * bernoulli * cis(-s * x / nf);
    Ok(cis(s * x) * complex_principal_pow(base, nf)?)
}

fn bbh_finite_sum(n: u32, s: f64, x: f64) -> Result<Complex> {
    let fam = WeightFamily::Bbh;
    let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
    for j in 0..=u64::from(n) {
        let w = weights::weight(&fam, n, j, x)?;
        let node = weights::node(&fam, n, j)?;
        let phase = cis(s * node);
        re.add(w * phase.re);
        im.add(w * phase.im);
    }
    Ok(Complex::new(re.value(), im.value()))
}

fn mixed_bernstein_closed(n: u32, s: f64, x: f64) -> Result<Complex> {
    if x == 1.0 && n % 2 == 1 {
        // continuous extension of the formula: the operator samples at
        // (n-1)/n there
        return Ok(cis(s * f64::from(n - 1) / f64::from(n)));
    }
    validate_point(&WeightFamily::MixedBernstein, n, x)?;
    let nf = f64::from(n);
    let z = x * cis(s / nf);
    let plus = complex_principal_pow(ONE - x + z, nf)?;
    let minus = complex_principal_pow(ONE - x - z, nf)?;
    let denom = 1.0 + (1.0 - 2.0 * x).powi(n as i32);
    Ok((plus + minus) / denom)
}

/// Series over the order-shifted Baskakov basis `p^{[c]}_{n+kc, j}(x)` at
/// the frequency nodes `j / n`; the series route to the Kantorovich tails.
fn shifted_weight_series(
    c: f64,
    n: u32,
    k: u32,
    s: f64,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    let nf = f64::from(n);
    let order = nf + f64::from(k) * c;
    let sup = if c < 0.0 {
        Support::Finite((-order / c).round() as u64)
    } else {
        Support::Unbounded
    };
    sum_series(
        |j| {
            if !sup.contains(j) {
                return Ok(None);
            }
            let w = baskakov_real_order(c, order, j, x)?;
            let value = w * cis(s * j as f64 / nf);
            Ok(Some(SeriesTerm::new(value, w)))
        },
        policy,
    )
}

fn weight_series(
    fam: &WeightFamily,
    n: u32,
    s: f64,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<Complex> {
    weights::validate(fam, n)?;
    let sup = weights::support(fam, n)?;
    sum_series(
        |j| {
            if !sup.contains(j) {
                return Ok(None);
            }
            let w = weights::weight(fam, n, j, x)?;
            let value = w * cis(s * weights::node(fam, n, j)?);
            Ok(Some(SeriesTerm::new(value, w)))
        },
        policy,
    )
}

pub(crate) fn validate_point(fam: &WeightFamily, n: u32, x: f64) -> Result<()> {
    weights::validate(fam, n)?;
    // the weight at j = 0 performs the family's own x-domain check
    weights::weight(fam, n, 0, x).map(|_| ())
}
