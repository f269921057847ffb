//! The convergence laboratory: each limit theorem relating a transformed
//! operator sequence to its limit operator becomes an executable
//! experiment. The runner evaluates the transformed operator at increasing
//! index, compares with the limit, and fits the empirical convergence
//! order; `levy_scan` checks the characteristic-function condition on a
//! frequency grid, which is what the theorems reduce to.

use crate::charfun::{self, CharfunSpec};
use crate::error::{Error, Result};
use crate::numerics::{
    cis, cis_m1, complex_pow_one_minus, complex_principal_pow, expm1_over, sinc, Complex,
};
use crate::operators::{
    apply_bernstein_schnabl, apply_discrete, apply_gamma, apply_weierstrass, Domain, EvalContext,
    FunctionHandle,
};
use crate::weights::WeightFamily;

const ONE: Complex = Complex::new(1.0, 0.0);

/// Which probes an experiment accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationMode {
    /// Bounded-function probes and frequency probes.
    GeneralF,
    /// Frequency probes only: the sequence is verified on the exponential
    /// test family, which is exactly what the underlying theorem needs.
    CharfunOnly,
}

/// How the sequence index enters the transformed operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRole {
    /// The operator order grows with `n` (Poissonization-type transforms).
    ScalesOperator,
    /// The operator is fixed and `n` rescales the argument and the point.
    ScalesArgument,
}

/// One experiment from the catalog. Each variant is one limit theorem:
/// the transformed sequence on the left converges to the limit operator on
/// the right as the index grows.
///
/// | id  | transformed sequence                                  | limit                  |
/// |-----|-------------------------------------------------------|------------------------|
/// | E1  | Bernstein `B_{mn}(f(nt); x/n)`                        | Szász `S_m`            |
/// | E2  | Baskakov-type `B^{[c]}_{mn}(f(nt); x/n)`              | Szász `S_m`            |
/// | E3  | Kantorovich `V^{[c](k)}_{mn}(f(nt); x/n)`             | `V^{[0](k)}_m`         |
/// | E4  | discrete `D^{[c](k)}_{mn,rho}(f(nt); x/n)`            | `D^{[0](k)}_{m,rho}`   |
/// | E5  | `Q^a_{mn}(f(nt); x/n)`                                | Szász `S_m`            |
/// | E6a | BBH `H_{mn}(f(nt/(1+t)); x/n)`                        | Szász `S_m`            |
/// | E6b | BBH `H_{mn}(f((mn+1)t/(m(1+t))); x/n)`                | Szász `S_m`            |
/// | E7a | MKZ `M_{mn}(f(nt/(1-t)); x/n)`                        | Szász `S_m`            |
/// | E7b | MKZ `M_{mn}(f((mn+1)t/(m(1-t))); x/n)`                | Szász `S_m`            |
/// | E8  | MKZ `M_m(f(t/(n(1-t))); nx/(1+nx))`                   | Gamma `G_{m+1}`        |
/// | E9  | Lototsky-Schnabl `A_{mn}(f(nt); x/n)`                 | Szász `S_m`            |
/// | E10 | `V^{[c](k)}_m(f(t/n); nx)`, `c > 0`                   | Gamma `G_{m/c+k}`      |
/// | E11 | Bernstein around `u` at frequency scale `sqrt(an)`    | Weierstrass `W_a`      |
/// | E12 | Bernstein-Schnabl `S_{n,b_n}`, `b_n = sqrt(a/n)`      | Weierstrass `W_{a/3}`  |
/// | E13 | Baskakov `B^{[1]}_{mn}(f(nt); (x+p/m)/n)`             | Jakimovski-Leviatan    |
/// | E14 | averaged Bernstein `L_{mn}(f(nt); x/n)`               | Leśniewicz-Rempulska   |
#[derive(Debug, Clone)]
pub enum ExperimentSpec {
    E1 { m: u32 },
    E2 { m: u32, c: f64 },
    E3 { m: u32, c: f64, k: u32 },
    E4 { m: u32, c: f64, k: u32, rho: f64 },
    E5 { m: u32, a: f64 },
    E6a { m: u32 },
    E6b { m: u32 },
    E7a { m: u32 },
    E7b { m: u32 },
    E8 { m: u32 },
    E9 { m: u32, lambda: FunctionHandle },
    E10 { m: u32, c: f64, k: u32 },
    E11 { u: f64, a: f64 },
    E12 { a: f64 },
    E13 { m: u32, p: f64 },
    E14 { m: u32 },
}

/// A probe for the two sides of a limit theorem: either a bounded function
/// or one frequency of the exponential test family.
#[derive(Debug, Clone)]
pub enum Probe {
    Function(FunctionHandle),
    Frequency(f64),
}

impl ExperimentSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentSpec::E1 { .. } => "E1",
            ExperimentSpec::E2 { .. } => "E2",
            ExperimentSpec::E3 { .. } => "E3",
            ExperimentSpec::E4 { .. } => "E4",
            ExperimentSpec::E5 { .. } => "E5",
            ExperimentSpec::E6a { .. } => "E6a",
            ExperimentSpec::E6b { .. } => "E6b",
            ExperimentSpec::E7a { .. } => "E7a",
            ExperimentSpec::E7b { .. } => "E7b",
            ExperimentSpec::E8 { .. } => "E8",
            ExperimentSpec::E9 { .. } => "E9",
            ExperimentSpec::E10 { .. } => "E10",
            ExperimentSpec::E11 { .. } => "E11",
            ExperimentSpec::E12 { .. } => "E12",
            ExperimentSpec::E13 { .. } => "E13",
            ExperimentSpec::E14 { .. } => "E14",
        }
    }

    pub fn mode(&self) -> EvaluationMode {
        match self {
            ExperimentSpec::E3 { .. } => EvaluationMode::CharfunOnly,
            ExperimentSpec::E10 { k, .. } if *k >= 1 => EvaluationMode::CharfunOnly,
            _ => EvaluationMode::GeneralF,
        }
    }

    pub fn index_role(&self) -> IndexRole {
        match self {
            ExperimentSpec::E8 { .. } | ExperimentSpec::E10 { .. } => IndexRole::ScalesArgument,
            _ => IndexRole::ScalesOperator,
        }
    }

    fn validate(&self) -> Result<()> {
        let check_m = |m: u32| -> Result<()> {
            if m == 0 {
                Err(Error::domain("experiment needs m >= 1"))
            } else {
                Ok(())
            }
        };
        match self {
            ExperimentSpec::E1 { m }
            | ExperimentSpec::E6a { m }
            | ExperimentSpec::E6b { m }
            | ExperimentSpec::E7a { m }
            | ExperimentSpec::E7b { m }
            | ExperimentSpec::E8 { m }
            | ExperimentSpec::E14 { m } => check_m(*m),
            ExperimentSpec::E2 { m, c } | ExperimentSpec::E3 { m, c, .. } => {
                check_m(*m)?;
                if !c.is_finite() {
                    return Err(Error::domain("experiment needs a finite c"));
                }
                Ok(())
            }
            ExperimentSpec::E4 { m, c, rho, .. } => {
                check_m(*m)?;
                if !c.is_finite() || !(*rho > 0.0) {
                    return Err(Error::domain(format!(
                        "E4 needs finite c and rho > 0, got c = {c}, rho = {rho}"
                    )));
                }
                Ok(())
            }
            ExperimentSpec::E5 { m, a } => {
                check_m(*m)?;
                if !(*a >= 0.0) {
                    return Err(Error::domain(format!("E5 needs a >= 0, got {a}")));
                }
                Ok(())
            }
            ExperimentSpec::E9 { m, .. } => check_m(*m),
            ExperimentSpec::E10 { m, c, .. } => {
                check_m(*m)?;
                if !(*c > 0.0) {
                    return Err(Error::domain(format!("E10 needs c > 0, got {c}")));
                }
                Ok(())
            }
            ExperimentSpec::E11 { u, a } => {
                if !(*u > 0.0 && *u < 1.0) {
                    return Err(Error::domain(format!("E11 needs 0 < u < 1, got {u}")));
                }
                if !(*a > 0.0) {
                    return Err(Error::domain(format!("E11 needs a > 0, got {a}")));
                }
                Ok(())
            }
            ExperimentSpec::E12 { a } => {
                if !(*a > 0.0) {
                    return Err(Error::domain(format!("E12 needs a > 0, got {a}")));
                }
                Ok(())
            }
            ExperimentSpec::E13 { m, p } => {
                check_m(*m)?;
                if !(*p >= 0.0) {
                    return Err(Error::domain(format!("E13 needs p >= 0, got {p}")));
                }
                Ok(())
            }
        }
    }
}

fn scaled_order(m: u32, n: u32) -> Result<u32> {
    m.checked_mul(n)
        .ok_or_else(|| Error::domain("operator order m*n overflows"))
}

/// Transformed-sequence value at index `n`.
///
/// Frequency probes use the closed transformed characteristic functions;
/// function probes apply the actual source operator with the transform
/// composed in.
pub fn lhs_value(
    exp: &ExperimentSpec,
    n: u32,
    probe: &Probe,
    x: f64,
    ctx: &EvalContext,
) -> Result<Complex> {
    exp.validate()?;
    if n == 0 {
        return Err(Error::domain("sequence index n must be positive"));
    }
    match probe {
        Probe::Frequency(s) => lhs_charfun(exp, n, *s, x),
        Probe::Function(f) => {
            if exp.mode() == EvaluationMode::CharfunOnly {
                return Err(Error::ModeMismatch(format!(
                    "{} accepts frequency probes only",
                    exp.id()
                )));
            }
            lhs_general(exp, n, f, x, ctx).map(|v| Complex::new(v, 0.0))
        }
    }
}

/// Limit-operator value for the same probe.
pub fn limit_value(exp: &ExperimentSpec, probe: &Probe, x: f64, ctx: &EvalContext) -> Result<Complex> {
    exp.validate()?;
    match probe {
        Probe::Frequency(s) => {
            let (spec, point) = limit_charfun_spec(exp, x)?;
            charfun::charfun_closed(&spec, *s, point)
        }
        Probe::Function(f) => {
            if exp.mode() == EvaluationMode::CharfunOnly {
                return Err(Error::ModeMismatch(format!(
                    "{} accepts frequency probes only",
                    exp.id()
                )));
            }
            limit_general(exp, f, x, ctx).map(|v| Complex::new(v, 0.0))
        }
    }
}

fn limit_charfun_spec(exp: &ExperimentSpec, x: f64) -> Result<(CharfunSpec, f64)> {
    Ok(match *exp {
        ExperimentSpec::E1 { m }
        | ExperimentSpec::E2 { m, .. }
        | ExperimentSpec::E5 { m, .. }
        | ExperimentSpec::E6a { m }
        | ExperimentSpec::E6b { m }
        | ExperimentSpec::E7a { m }
        | ExperimentSpec::E7b { m }
        | ExperimentSpec::E9 { m, .. } => (CharfunSpec::Szasz { m }, x),
        ExperimentSpec::E3 { m, k, .. } => (CharfunSpec::V0Limit { k, m }, x),
        ExperimentSpec::E4 { m, k, rho, .. } => {
            (CharfunSpec::DiscreteD { c: 0.0, k, rho, n: m }, x)
        }
        ExperimentSpec::E8 { m } => {
            let mf = f64::from(m);
            (CharfunSpec::Gamma { mu: mf + 1.0 }, (mf + 1.0) * x / mf)
        }
        ExperimentSpec::E10 { m, c, k } => {
            let mf = f64::from(m);
            (
                CharfunSpec::Gamma { mu: mf / c + f64::from(k) },
                (mf + c * f64::from(k)) * x / mf,
            )
        }
        ExperimentSpec::E11 { a, .. } => (CharfunSpec::Weierstrass { a }, x),
        ExperimentSpec::E12 { a } => (CharfunSpec::Weierstrass { a: a / 3.0 }, x),
        ExperimentSpec::E13 { m, p } => (CharfunSpec::JlExp { p, m }, x),
        ExperimentSpec::E14 { m } => (CharfunSpec::Lr { m }, x),
    })
}

fn limit_general(exp: &ExperimentSpec, f: &FunctionHandle, x: f64, ctx: &EvalContext) -> Result<f64> {
    match *exp {
        ExperimentSpec::E1 { m }
        | ExperimentSpec::E2 { m, .. }
        | ExperimentSpec::E5 { m, .. }
        | ExperimentSpec::E6a { m }
        | ExperimentSpec::E6b { m }
        | ExperimentSpec::E7a { m }
        | ExperimentSpec::E7b { m }
        | ExperimentSpec::E9 { m, .. } => {
            apply_discrete(&WeightFamily::Baskakov { c: 0.0 }, m, f, x, &ctx.policy)
        }
        ExperimentSpec::E4 { m, k, rho, .. } => {
            apply_discrete(&WeightFamily::DiscreteD { c: 0.0, k, rho }, m, f, x, &ctx.policy)
        }
        ExperimentSpec::E8 { m } => {
            let mf = f64::from(m);
            apply_gamma(mf + 1.0, f, (mf + 1.0) * x / mf, &ctx.quad)
        }
        ExperimentSpec::E10 { m, c, k } => {
            let mf = f64::from(m);
            apply_gamma(
                mf / c + f64::from(k),
                f,
                (mf + c * f64::from(k)) * x / mf,
                &ctx.quad,
            )
        }
        ExperimentSpec::E11 { a, .. } => apply_weierstrass(a, f, x, &ctx.quad),
        ExperimentSpec::E12 { a } => apply_weierstrass(a / 3.0, f, x, &ctx.quad),
        ExperimentSpec::E13 { m, p } => {
            apply_discrete(&WeightFamily::JlExp { p }, m, f, x, &ctx.policy)
        }
        ExperimentSpec::E14 { m } => apply_discrete(&WeightFamily::Lr, m, f, x, &ctx.policy),
        ExperimentSpec::E3 { .. } => unreachable!("charfun-only mode checked by caller"),
    }
}

/// Closed transformed characteristic functions, one per catalog row; each
/// is the finite-index form whose limit the corresponding theorem takes.
fn lhs_charfun(exp: &ExperimentSpec, n: u32, s: f64, x: f64) -> Result<Complex> {
    let nf = f64::from(n);
    match *exp {
        ExperimentSpec::E1 { m } => transformed_baskakov(-1.0, m, n, s, x),
        ExperimentSpec::E2 { m, c } => transformed_baskakov(c, m, n, s, x),
        ExperimentSpec::E3 { m, c, k } => {
            let order = scaled_order(m, n)?;
            charfun::validate_point(&WeightFamily::Baskakov { c }, order, x / nf)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let mf = f64::from(m);
            let prefactor =
                complex_principal_pow(expm1_over(Complex::new(0.0, s / mf)), f64::from(k))?;
            let tail =
                charfun::baskakov_shifted_closed(c, f64::from(order), k, s / mf, x / nf)?;
            Ok(prefactor * tail)
        }
        ExperimentSpec::E4 { m, c, k, rho } => {
            let order = scaled_order(m, n)?;
            charfun::validate_point(&WeightFamily::DiscreteD { c, k, rho }, order, x / nf)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let scale = f64::from(order) * rho - f64::from(k) * c;
            let phase = cis(s * nf * f64::from(k) * (rho + 1.0) / (2.0 * scale));
            let tail = charfun::baskakov_shifted_closed(
                c,
                f64::from(order),
                k,
                s * nf * rho / scale,
                x / nf,
            )?;
            Ok(phase * tail)
        }
        ExperimentSpec::E5 { m, a } => {
            let order = scaled_order(m, n)?;
            let y = x / nf;
            charfun::validate_point(&WeightFamily::QA { a }, order, y)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let w = cis_m1(s / f64::from(m));
            let binomial_part = complex_pow_one_minus(y * w, -f64::from(order))?;
            Ok(binomial_part * (a * y / (1.0 + y) * w).exp())
        }
        ExperimentSpec::E6a { m } => {
            let order = scaled_order(m, n)?;
            let y = x / nf;
            charfun::validate_point(&WeightFamily::Bbh, order, y)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let theta = s * nf / (f64::from(order) + 1.0);
            let numer = complex_pow_one_minus(-y * cis(theta), f64::from(order))?;
            let denom = complex_pow_one_minus(Complex::new(-y, 0.0), -f64::from(order))?;
            Ok(numer * denom)
        }
        ExperimentSpec::E6b { m } => {
            let order = scaled_order(m, n)?;
            let y = x / nf;
            charfun::validate_point(&WeightFamily::Bbh, order, y)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let numer = complex_pow_one_minus(-y * cis(s / f64::from(m)), f64::from(order))?;
            let denom = complex_pow_one_minus(Complex::new(-y, 0.0), -f64::from(order))?;
            Ok(numer * denom)
        }
        ExperimentSpec::E7a { m } => transformed_mkz(m, n, s / f64::from(m), x),
        ExperimentSpec::E7b { m } => {
            let order = scaled_order(m, n)?;
            let mf = f64::from(m);
            let theta = s * (f64::from(order) + 1.0) / (mf * mf * nf);
            transformed_mkz(m, n, theta, x)
        }
        ExperimentSpec::E8 { m } => {
            if x < 0.0 {
                return Err(Error::domain(format!("E8 needs x >= 0, got {x}")));
            }
            if s == 0.0 {
                return Ok(ONE);
            }
            let theta = s / (f64::from(m) * nf);
            let base = ONE - nf * x * cis_m1(theta);
            complex_principal_pow(base, -(f64::from(m) + 1.0))
        }
        ExperimentSpec::E9 { m, ref lambda } => {
            let order = scaled_order(m, n)?;
            let y = x / nf;
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::domain(format!(
                    "E9 needs x/n in [0, 1], got {y} (n = {n})"
                )));
            }
            let lam = lambda.eval(y)?;
            if !(0.0..=1.0).contains(&lam) {
                return Err(Error::domain(format!(
                    "E9 mixture function must map into [0, 1], got lambda({y}) = {lam}"
                )));
            }
            if s == 0.0 {
                return Ok(ONE);
            }
            let mf = f64::from(m);
            let z = ONE + y * cis_m1(s / mf);
            let base = ONE - lam + lam * z * cis(-s * x / (mf * nf * nf));
            Ok(cis(s * y) * complex_principal_pow(base, f64::from(order))?)
        }
        ExperimentSpec::E10 { m, c, k } => {
            charfun::validate_point(&WeightFamily::Baskakov { c }, m, nf * x)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let mf = f64::from(m);
            let theta = s / (nf * mf);
            let prefactor =
                complex_principal_pow(expm1_over(Complex::new(0.0, theta)), f64::from(k))?;
            let base = ONE - c * nf * x * cis_m1(theta);
            Ok(prefactor * complex_principal_pow(base, -mf / c - f64::from(k))?)
        }
        ExperimentSpec::E11 { u, a } => {
            if s == 0.0 {
                return Ok(ONE);
            }
            let b_n = (a / nf).sqrt();
            let beta = b_n / (u * (1.0 - u)).sqrt();
            let base = (1.0 - u) * cis(-s * u * beta) + u * cis(s * (1.0 - u) * beta);
            Ok(cis(s * x) * complex_principal_pow(base, nf)?)
        }
        ExperimentSpec::E12 { a } => {
            if s == 0.0 {
                return Ok(ONE);
            }
            let b_n = (a / nf).sqrt();
            Ok(cis(s * x) * sinc(s * b_n).powi(n as i32))
        }
        ExperimentSpec::E13 { m, p } => {
            let order = scaled_order(m, n)?;
            let y = (x + p / f64::from(m)) / nf;
            charfun::validate_point(&WeightFamily::Baskakov { c: 1.0 }, order, y)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let base = ONE - y * cis_m1(s / f64::from(m));
            complex_principal_pow(base, -f64::from(order))
        }
        ExperimentSpec::E14 { m } => {
            let order = scaled_order(m, n)?;
            let y = x / nf;
            charfun::validate_point(&WeightFamily::MixedBernstein, order, y)?;
            if s == 0.0 {
                return Ok(ONE);
            }
            let z = y * cis(s / f64::from(m));
            let plus = complex_principal_pow(ONE - y + z, f64::from(order))?;
            let minus = complex_principal_pow(ONE - y - z, f64::from(order))?;
            let denom = 1.0 + (1.0 - 2.0 * y).powi(order as i32);
            Ok((plus + minus) / denom)
        }
    }
}

/// `(1 - c (x/n) (e^{is/m} - 1))^{-mn/c}`, the Poissonization of the
/// Baskakov-type closed form (its `c = 0` case is exact at every index).
fn transformed_baskakov(c: f64, m: u32, n: u32, s: f64, x: f64) -> Result<Complex> {
    let order = scaled_order(m, n)?;
    let y = x / f64::from(n);
    charfun::validate_point(&WeightFamily::Baskakov { c }, order, y)?;
    if s == 0.0 {
        return Ok(ONE);
    }
    let w = cis_m1(s / f64::from(m));
    if c == 0.0 {
        Ok((f64::from(order) * y * w).exp())
    } else {
        complex_principal_pow(ONE - c * y * w, -f64::from(order) / c)
    }
}

/// `((1 - y) / (1 - y e^{i theta}))^{mn + 1}` with `y = x/n`: the exact
/// finite-index form of the transformed Meyer-König-Zeller sequences (the
/// generating function carries exponent `mn + 1`, matching the series).
fn transformed_mkz(m: u32, n: u32, theta: f64, x: f64) -> Result<Complex> {
    let order = scaled_order(m, n)?;
    let y = x / f64::from(n);
    charfun::validate_point(&WeightFamily::Mkz, order, y)?;
    if theta == 0.0 {
        return Ok(ONE);
    }
    let base = (1.0 - y) / (ONE - y * cis(theta));
    complex_principal_pow(base, f64::from(order) + 1.0)
}

fn lhs_general(
    exp: &ExperimentSpec,
    n: u32,
    f: &FunctionHandle,
    x: f64,
    ctx: &EvalContext,
) -> Result<f64> {
    let nf = f64::from(n);
    match *exp {
        ExperimentSpec::E1 { m } => {
            let g = f.precompose(f.domain(), move |t| nf * t);
            apply_discrete(
                &WeightFamily::Baskakov { c: -1.0 },
                scaled_order(m, n)?,
                &g,
                x / nf,
                &ctx.policy,
            )
        }
        ExperimentSpec::E2 { m, c } => {
            let g = f.precompose(f.domain(), move |t| nf * t);
            apply_discrete(
                &WeightFamily::Baskakov { c },
                scaled_order(m, n)?,
                &g,
                x / nf,
                &ctx.policy,
            )
        }
        ExperimentSpec::E4 { m, c, k, rho } => {
            let g = f.precompose(f.domain(), move |t| nf * t);
            apply_discrete(
                &WeightFamily::DiscreteD { c, k, rho },
                scaled_order(m, n)?,
                &g,
                x / nf,
                &ctx.policy,
            )
        }
        ExperimentSpec::E5 { m, a } => {
            let g = f.precompose(f.domain(), move |t| nf * t);
            apply_discrete(
                &WeightFamily::QA { a },
                scaled_order(m, n)?,
                &g,
                x / nf,
                &ctx.policy,
            )
        }
        ExperimentSpec::E6a { m } => {
            let g = f.precompose(f.domain(), move |t| nf * t / (1.0 + t));
            apply_discrete(&WeightFamily::Bbh, scaled_order(m, n)?, &g, x / nf, &ctx.policy)
        }
        ExperimentSpec::E6b { m } => {
            let order = scaled_order(m, n)?;
            let scale = (f64::from(order) + 1.0) / f64::from(m);
            let g = f.precompose(f.domain(), move |t| scale * t / (1.0 + t));
            apply_discrete(&WeightFamily::Bbh, order, &g, x / nf, &ctx.policy)
        }
        ExperimentSpec::E7a { m } => {
            let g = f.precompose(f.domain(), move |t| nf * t / (1.0 - t));
            apply_discrete(&WeightFamily::Mkz, scaled_order(m, n)?, &g, x / nf, &ctx.policy)
        }
        ExperimentSpec::E7b { m } => {
            let order = scaled_order(m, n)?;
            let scale = (f64::from(order) + 1.0) / f64::from(m);
            let g = f.precompose(f.domain(), move |t| scale * t / (1.0 - t));
            apply_discrete(&WeightFamily::Mkz, order, &g, x / nf, &ctx.policy)
        }
        ExperimentSpec::E8 { m } => {
            let g = f.precompose(f.domain(), move |t| t / (nf * (1.0 - t)));
            apply_discrete(
                &WeightFamily::Mkz,
                m,
                &g,
                nf * x / (1.0 + nf * x),
                &ctx.policy,
            )
        }
        ExperimentSpec::E9 { m, ref lambda } => lototsky_transformed(m, lambda, n, f, x),
        ExperimentSpec::E10 { m, c, k: _ } => {
            let g = f.precompose(f.domain(), move |t| t / nf);
            apply_discrete(&WeightFamily::Baskakov { c }, m, &g, nf * x, &ctx.policy)
        }
        ExperimentSpec::E11 { u, a } => {
            let spread = (a * nf).sqrt() / (u * (1.0 - u)).sqrt();
            let g = f.precompose(Domain::Reals, move |t| x + spread * (t - u));
            apply_discrete(&WeightFamily::Baskakov { c: -1.0 }, n, &g, u, &ctx.policy)
        }
        ExperimentSpec::E12 { a } => {
            let half_width = (a * nf).sqrt();
            apply_bernstein_schnabl(n, half_width, f, x, ctx).map(|v| v.value)
        }
        ExperimentSpec::E13 { m, p } => {
            let g = f.precompose(f.domain(), move |t| nf * t);
            apply_discrete(
                &WeightFamily::Baskakov { c: 1.0 },
                scaled_order(m, n)?,
                &g,
                (x + p / f64::from(m)) / nf,
                &ctx.policy,
            )
        }
        ExperimentSpec::E14 { m } => {
            let g = f.precompose(f.domain(), move |t| nf * t);
            apply_discrete(
                &WeightFamily::MixedBernstein,
                scaled_order(m, n)?,
                &g,
                x / nf,
                &ctx.policy,
            )
        }
        ExperimentSpec::E3 { .. } => Err(Error::ModeMismatch(
            "E3 accepts frequency probes only".into(),
        )),
    }
}

/// The transformed Lototsky-Schnabl sequence, with the localization
/// applied before the index rescaling (`f_{x/n, r/(mn)}` evaluated at
/// `nt`): the inner Bernstein operator of rank `r` samples `f` at
/// `k/m + (1 - r/(mn)) x/n`. The `r = 0` term contributes `f(x/n)`.
fn lototsky_transformed(
    m: u32,
    lambda: &FunctionHandle,
    n: u32,
    f: &FunctionHandle,
    x: f64,
) -> Result<f64> {
    let order = scaled_order(m, n)?;
    let y = x / f64::from(n);
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("E9 needs x/n in [0, 1], got {y}")));
    }
    let at_zero = lambda.eval(0.0)?;
    if (at_zero - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "E9 mixture function must satisfy lambda(0) = 1, got {at_zero}"
        )));
    }
    let lam = lambda.eval(y)?;
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::domain(format!(
            "E9 mixture function must map into [0, 1], got lambda({y}) = {lam}"
        )));
    }
    let (mf, order_f) = (f64::from(m), f64::from(order));
    let mut acc = crate::numerics::KahanSum::new();
    for r in 0..=order {
        let outer = crate::operators::binomial_pmf(order, r, lam);
        if outer == 0.0 {
            continue;
        }
        let inner = if r == 0 {
            f.eval(y)?
        } else {
            let shift = (1.0 - f64::from(r) / order_f) * y;
            let mut inner_acc = crate::numerics::KahanSum::new();
            for k in 0..=r {
                let w = crate::operators::binomial_pmf(r, k, y);
                if w == 0.0 {
                    continue;
                }
                inner_acc.add(w * f.eval(f64::from(k) / mf + shift)?);
            }
            inner_acc.value()
        };
        acc.add(outer * inner);
    }
    Ok(acc.value())
}

/// Brute-force value of the transformed sequence at a frequency probe:
/// the source operator applied to the transformed `cos`/`sin` pair (or,
/// for the Kantorovich experiments, the order-shifted weight series). The
/// cross-check for every closed form in [`lhs_value`].
pub fn lhs_brute_force(
    exp: &ExperimentSpec,
    n: u32,
    s: f64,
    x: f64,
    ctx: &EvalContext,
) -> Result<Complex> {
    exp.validate()?;
    let nf = f64::from(n);
    match *exp {
        ExperimentSpec::E3 { m, c, k } => {
            let spec = CharfunSpec::KantorovichV { c, k, n: scaled_order(m, n)? };
            charfun::charfun_series(&spec, s * nf, x / nf, &ctx.policy)
        }
        ExperimentSpec::E10 { m, c, k } => {
            let spec = CharfunSpec::KantorovichV { c, k, n: m };
            charfun::charfun_series(&spec, s / nf, nf * x, &ctx.policy)
        }
        _ => {
            let re = lhs_general(
                exp,
                n,
                &FunctionHandle::new(Domain::Reals, move |t| (s * t).cos()),
                x,
                ctx,
            )?;
            let im = lhs_general(
                exp,
                n,
                &FunctionHandle::new(Domain::Reals, move |t| (s * t).sin()),
                x,
                ctx,
            )?;
            Ok(Complex::new(re, im))
        }
    }
}

/// One row of a convergence run.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRecord {
    pub n: u32,
    pub value: Complex,
    pub abs_error: f64,
}

/// Per-index values, absolute errors against the limit operator, and the
/// least-squares fitted convergence order.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub records: Vec<ConvergenceRecord>,
    /// Slope of `-log |error|` against `log n`; `None` when every error is
    /// at the noise floor (the transform is exact) and a fit would be
    /// meaningless.
    pub fitted_order: Option<f64>,
    pub fit_r2: Option<f64>,
    pub final_error: f64,
    /// Exact-zero errors dropped from the fit.
    pub dropped_zero_errors: usize,
}

/// Errors at or below this level are treated as roundoff, not convergence.
pub const ERROR_NOISE_FLOOR: f64 = 1e-12;

/// Runs one experiment over an ascending index grid and fits the
/// convergence order from `log |error|` against `log n`.
pub fn run_experiment(
    exp: &ExperimentSpec,
    n_list: &[u32],
    probe: &Probe,
    x: f64,
    ctx: &EvalContext,
) -> Result<ConvergenceReport> {
    if n_list.len() < 4 {
        return Err(Error::domain(
            "run_experiment needs at least 4 index values (geometric spacing recommended)",
        ));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("index list must be strictly ascending"));
    }
    let limit = limit_value(exp, probe, x, ctx)?;
    let mut records = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let value = lhs_value(exp, n, probe, x, ctx)?;
        let abs_error = (value - limit).norm();
        if !abs_error.is_finite() {
            return Err(Error::domain(format!(
                "non-finite error at n = {n} in experiment {}",
                exp.id()
            )));
        }
        records.push(ConvergenceRecord { n, value, abs_error });
    }

    let dropped_zero_errors = records.iter().filter(|r| r.abs_error == 0.0).count();
    let fit_points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.abs_error > 0.0)
        .map(|r| (f64::from(r.n).ln(), r.abs_error.ln()))
        .collect();
    let max_error = records.iter().fold(0.0_f64, |m, r| m.max(r.abs_error));

    let (fitted_order, fit_r2) = if fit_points.len() < 2 || max_error <= ERROR_NOISE_FLOOR {
        (None, None)
    } else {
        let (slope, r2) = least_squares_line(&fit_points);
        (Some(-slope), Some(r2))
    };

    Ok(ConvergenceReport {
        experiment: exp.id().to_string(),
        final_error: records.last().map(|r| r.abs_error).unwrap_or(f64::NAN),
        records,
        fitted_order,
        fit_r2,
        dropped_zero_errors,
    })
}

fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Residual of the characteristic-function condition at one frequency.
#[derive(Debug, Clone, Copy)]
pub struct LevyResidual {
    pub s: f64,
    pub residual: f64,
}

/// Evaluates `|lhs(s) - limit(s)|` over a frequency grid at a fixed index:
/// the pointwise condition whose locally-uniform smallness is what the
/// continuity theorem turns into operator convergence.
pub fn levy_scan(
    exp: &ExperimentSpec,
    n: u32,
    s_grid: &[f64],
    x: f64,
) -> Result<Vec<LevyResidual>> {
    let ctx = EvalContext::default();
    let mut rows = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let lhs = lhs_value(exp, n, &Probe::Frequency(s), x, &ctx)?;
        let limit = limit_value(exp, &Probe::Frequency(s), x, &ctx)?;
        rows.push(LevyResidual {
            s,
            residual: (lhs - limit).norm(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> EvalContext {
        EvalContext::default()
    }

    fn geometric_grid() -> Vec<u32> {
        (4..=12).map(|e| 1u32 << e).collect()
    }

    #[test]
    fn normalization_survives_the_transform() {
        let exp = ExperimentSpec::E1 { m: 2 };
        let one = FunctionHandle::constant(1.0);
        let v = lhs_value(&exp, 10, &Probe::Function(one), 0.5, &ctx()).unwrap();
        assert!((v.re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bbh_transformed_closed_form_matches_brute_force() {
        // five-term sum: (1 + 1/4)^{-4} sum_k C(4,k) (1/4)^k e^{i 4 pi k / 5}
        let exp = ExperimentSpec::E6a { m: 1 };
        let s = std::f64::consts::PI;
        let closed = lhs_value(&exp, 4, &Probe::Frequency(s), 1.0, &ctx()).unwrap();
        let brute = lhs_brute_force(&exp, 4, s, 1.0, &ctx()).unwrap();
        assert!((closed - brute).norm() <= 1e-13);

        let theta = 4.0 * std::f64::consts::PI / 5.0;
        let mut hand = Complex::new(0.0, 0.0);
        let coeff = [1.0, 4.0, 6.0, 4.0, 1.0];
        for (k, c) in coeff.iter().enumerate() {
            hand += c * 0.25f64.powi(k as i32) * cis(theta * k as f64);
        }
        hand /= 1.25f64.powi(4);
        assert!((closed - hand).norm() <= 1e-13);
    }

    #[test]
    fn e12_closed_form_at_origin() {
        let exp = ExperimentSpec::E12 { a: 3.0 };
        let v = lhs_value(&exp, 9, &Probe::Frequency(1.0), 0.0, &ctx()).unwrap();
        let b9 = (3.0f64 / 9.0).sqrt();
        let expected = (b9.sin() / b9).powi(9);
        assert!((v - Complex::new(expected, 0.0)).norm() <= 1e-14);
    }

    #[test]
    fn e10_limit_value_hand_computed() {
        // (1 - i/2)^{-2} = (0.75 + i) / 1.5625 = 0.48 + 0.64 i
        let exp = ExperimentSpec::E10 { m: 2, c: 1.0, k: 0 };
        let v = limit_value(&exp, &Probe::Frequency(1.0), 1.0, &ctx()).unwrap();
        assert!((v - Complex::new(0.48, 0.64)).norm() <= 1e-15, "got {v}");
    }

    #[test]
    fn e11_limit_is_gaussian() {
        let exp = ExperimentSpec::E11 { u: 0.5, a: 2.0 };
        let v = limit_value(&exp, &Probe::Frequency(1.0), 0.0, &ctx()).unwrap();
        assert!((v - Complex::new((-1.0f64).exp(), 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn closed_transformed_forms_match_brute_force() {
        let lambda = FunctionHandle::new(Domain::UnitInterval, |t| 1.0 - t);
        let cases: Vec<ExperimentSpec> = vec![
            ExperimentSpec::E1 { m: 2 },
            ExperimentSpec::E2 { m: 2, c: 1.0 },
            ExperimentSpec::E2 { m: 1, c: -0.5 },
            ExperimentSpec::E3 { m: 2, c: 1.0, k: 1 },
            ExperimentSpec::E4 { m: 1, c: 1.0, k: 1, rho: 2.0 },
            ExperimentSpec::E5 { m: 2, a: 2.0 },
            ExperimentSpec::E6a { m: 2 },
            ExperimentSpec::E6b { m: 2 },
            ExperimentSpec::E7a { m: 2 },
            ExperimentSpec::E7b { m: 1 },
            ExperimentSpec::E8 { m: 2 },
            ExperimentSpec::E9 { m: 1, lambda },
            ExperimentSpec::E10 { m: 2, c: 1.0, k: 1 },
            ExperimentSpec::E11 { u: 0.3, a: 1.0 },
            ExperimentSpec::E13 { m: 2, p: 1.0 },
            ExperimentSpec::E14 { m: 1 },
        ];
        for exp in &cases {
            for n in [6u32, 17] {
                for s in [-2.3, 0.8] {
                    let x = 0.9;
                    let closed = lhs_value(exp, n, &Probe::Frequency(s), x, &ctx()).unwrap();
                    let brute = lhs_brute_force(exp, n, s, x, &ctx()).unwrap();
                    assert!(
                        (closed - brute).norm() <= 1e-10,
                        "{} n={n} s={s}: closed {closed} vs brute {brute}",
                        exp.id()
                    );
                }
            }
        }
    }

    #[test]
    fn e12_closed_matches_quadrature_route() {
        let exp = ExperimentSpec::E12 { a: 2.0 };
        for n in [4u32, 9] {
            for s in [0.6, 1.9] {
                let closed = lhs_value(&exp, n, &Probe::Frequency(s), 0.4, &ctx()).unwrap();
                let brute = lhs_brute_force(&exp, n, s, 0.4, &ctx()).unwrap();
                assert!(
                    (closed - brute).norm() <= 1e-9,
                    "n={n} s={s}: {closed} vs {brute}"
                );
            }
        }
    }

    // Leading-defect constants derived by expanding the closed transformed
    // forms: for E2 the log of lhs minus log of limit is
    //   m c x^2 w^2 / (2n) + O(1/n^2),      w = e^{is/m} - 1,
    // so n |lhs - limit| -> |limit| |m c x^2 w^2| / 2. For E11 the cubic
    // term of the Bernoulli factor gives
    //   sqrt(n) |lhs - limit| -> |limit| |s|^3 a^{3/2} |1 - 2u| / (6 sqrt(u(1-u))).
    #[test]
    fn taylor_defect_constant_first_order() {
        let exp = ExperimentSpec::E2 { m: 1, c: 1.0 };
        let (s, x) = (1.0, 1.0);
        let limit = limit_value(&exp, &Probe::Frequency(s), x, &ctx()).unwrap();
        let w = cis_m1(s);
        let predicted = (limit * 0.5 * w * w).norm();
        for n in [2048u32, 8192] {
            let lhs = lhs_value(&exp, n, &Probe::Frequency(s), x, &ctx()).unwrap();
            let scaled = (lhs - limit).norm() * f64::from(n);
            assert!(
                (scaled - predicted).abs() <= 0.02 * predicted,
                "n={n}: n*err = {scaled}, predicted {predicted}"
            );
        }
    }

    #[test]
    fn taylor_defect_constant_half_order() {
        let (u, a) = (0.25, 1.0);
        let exp = ExperimentSpec::E11 { u, a };
        let (s, x) = (1.0, 0.0);
        let limit = limit_value(&exp, &Probe::Frequency(s), x, &ctx()).unwrap();
        let predicted =
            limit.norm() * s.powi(3).abs() * a.powf(1.5) * (1.0 - 2.0 * u).abs()
                / (6.0 * (u * (1.0 - u)).sqrt());
        for n in [4096u32, 16384] {
            let lhs = lhs_value(&exp, n, &Probe::Frequency(s), x, &ctx()).unwrap();
            let scaled = (lhs - limit).norm() * f64::from(n).sqrt();
            assert!(
                (scaled - predicted).abs() <= 0.05 * predicted,
                "n={n}: sqrt(n)*err = {scaled}, predicted {predicted}"
            );
        }
    }

    #[test]
    fn fitted_order_first_order_experiment() {
        let exp = ExperimentSpec::E2 { m: 1, c: 1.0 };
        let report = run_experiment(
            &exp,
            &geometric_grid(),
            &Probe::Frequency(1.0),
            1.0,
            &ctx(),
        )
        .unwrap();
        let order = report.fitted_order.unwrap();
        assert!((order - 1.0).abs() <= 0.15, "fitted order {order}");
        assert!(report.fit_r2.unwrap() > 0.99);
    }

    #[test]
    fn fitted_order_half_order_experiment() {
        let exp = ExperimentSpec::E11 { u: 0.25, a: 1.0 };
        let report = run_experiment(
            &exp,
            &geometric_grid(),
            &Probe::Frequency(1.0),
            0.0,
            &ctx(),
        )
        .unwrap();
        let order = report.fitted_order.unwrap();
        assert!((order - 0.5).abs() <= 0.15, "fitted order {order}");
    }

    #[test]
    fn exact_transform_skips_fit() {
        // the c = 0 Poissonization is exact at every index
        let exp = ExperimentSpec::E2 { m: 2, c: 0.0 };
        let report = run_experiment(
            &exp,
            &[16, 32, 64, 128],
            &Probe::Frequency(1.0),
            1.0,
            &ctx(),
        )
        .unwrap();
        assert!(report.fitted_order.is_none());
        assert!(report.final_error <= 1e-12);
    }

    #[test]
    fn levy_scan_zero_frequency_is_exact() {
        let exp = ExperimentSpec::E13 { m: 2, p: 1.0 };
        let rows = levy_scan(&exp, 50, &[0.0], 1.0).unwrap();
        assert_eq!(rows[0].residual, 0.0);
    }

    #[test]
    fn levy_scan_shrinks_with_n() {
        let exp = ExperimentSpec::E2 { m: 1, c: 1.0 };
        let grid: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.1).collect();
        let coarse = levy_scan(&exp, 100, &grid, 1.0).unwrap();
        let fine = levy_scan(&exp, 1000, &grid, 1.0).unwrap();
        let max = |rows: &[LevyResidual]| rows.iter().fold(0.0f64, |m, r| m.max(r.residual));
        assert!(max(&fine) < max(&coarse));
        assert!(max(&fine) <= 0.01, "max residual {}", max(&fine));
    }

    #[test]
    fn charfun_only_experiments_reject_function_probes() {
        let exp = ExperimentSpec::E3 { m: 1, c: 1.0, k: 1 };
        let f = FunctionHandle::constant(1.0);
        let r = lhs_value(&exp, 8, &Probe::Function(f), 0.5, &ctx());
        assert!(matches!(r, Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn e3_preserves_constants_at_every_index() {
        let exp = ExperimentSpec::E3 { m: 2, c: 1.0, k: 2 };
        for n in [5u32, 50, 500] {
            let v = lhs_value(&exp, n, &Probe::Frequency(0.0), 1.3, &ctx()).unwrap();
            assert_eq!(v, ONE);
        }
    }

    #[test]
    fn gamma_limits_normalized_at_zero_frequency() {
        for exp in [
            ExperimentSpec::E8 { m: 3 },
            ExperimentSpec::E10 { m: 2, c: 1.0, k: 1 },
        ] {
            let v = limit_value(&exp, &Probe::Frequency(0.0), 0.7, &ctx()).unwrap();
            assert_eq!(v, ONE);
        }
    }

    #[test]
    fn index_roles_and_modes() {
        assert_eq!(ExperimentSpec::E8 { m: 1 }.index_role(), IndexRole::ScalesArgument);
        assert_eq!(
            ExperimentSpec::E10 { m: 1, c: 1.0, k: 0 }.index_role(),
            IndexRole::ScalesArgument
        );
        assert_eq!(ExperimentSpec::E1 { m: 1 }.index_role(), IndexRole::ScalesOperator);
        assert_eq!(
            ExperimentSpec::E10 { m: 1, c: 1.0, k: 0 }.mode(),
            EvaluationMode::GeneralF
        );
        assert_eq!(
            ExperimentSpec::E10 { m: 1, c: 1.0, k: 1 }.mode(),
            EvaluationMode::CharfunOnly
        );
    }

    #[test]
    fn e10_general_mode_against_gamma() {
        let exp = ExperimentSpec::E10 { m: 1, c: 1.0, k: 0 };
        let f = FunctionHandle::new(Domain::NonnegReals, |t| (-t).exp());
        let probe = Probe::Function(f);
        let lhs = lhs_value(&exp, 512, &probe, 1.0, &ctx()).unwrap();
        let limit = limit_value(&exp, &probe, 1.0, &ctx()).unwrap();
        assert!((lhs - limit).norm() <= 1e-2, "error {}", (lhs - limit).norm());
    }

    #[test]
    fn hermitian_symmetry_of_transformed_forms() {
        let exp = ExperimentSpec::E5 { m: 2, a: 1.0 };
        for s in [0.7, 2.4] {
            let plus = lhs_value(&exp, 12, &Probe::Frequency(s), 1.1, &ctx()).unwrap();
            let minus = lhs_value(&exp, 12, &Probe::Frequency(-s), 1.1, &ctx()).unwrap();
            assert!((minus - plus.conj()).norm() <= 1e-13);
        }
    }

    #[test]
    fn run_experiment_validates_grid() {
        let exp = ExperimentSpec::E1 { m: 1 };
        assert!(run_experiment(&exp, &[16, 32], &Probe::Frequency(1.0), 1.0, &ctx()).is_err());
        assert!(
            run_experiment(&exp, &[16, 32, 32, 64], &Probe::Frequency(1.0), 1.0, &ctx()).is_err()
        );
    }
}
