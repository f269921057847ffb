//! Weight values and evaluation nodes for the discrete operator families.
//!
//! Everything is computed in the log domain and exponentiated at the end,
//! so weights spanning hundreds of orders of magnitude come out with full
//! relative accuracy. The convention `0^0 = 1` applies throughout (the
//! `j = 0` weight at `x = 0`).

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::ln_rising_factorial_c;

/// Discrete weight family.
///
/// The order parameter `n` is supplied at each call site. `Baskakov { c }`
/// unifies the Bernstein (`c = -1`), Szász-Mirakjan (`c = 0`) and
/// classical Baskakov (`c = 1`) weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    Baskakov { c: f64 },
    Mkz,
    Bbh,
    QA { a: f64 },
    JlExp { p: f64 },
    Lr,
    DiscreteD { c: f64, k: u32, rho: f64 },
    MixedBernstein,
}

/// Upper end of the index range carrying nonzero weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Finite(u64),
    Unbounded,
}

impl Support {
    pub fn contains(&self, j: u64) -> bool {
        match self {
            Support::Finite(max) => j <= *max,
            Support::Unbounded => true,
        }
    }
}

/// Checks the family parameter constraints for order `n`.
pub fn validate(fam: &WeightFamily, n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("operator order n must be positive"));
    }
    match *fam {
        WeightFamily::Baskakov { c } => validate_baskakov_order(c, f64::from(n)),
        WeightFamily::QA { a } => {
            if a < 0.0 || !a.is_finite() {
                return Err(Error::domain(format!("q_a needs a >= 0, got {a}")));
            }
            Ok(())
        }
        WeightFamily::JlExp { p } => {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::domain(format!("jl_exp needs p >= 0, got {p}")));
            }
            Ok(())
        }
        WeightFamily::DiscreteD { c, k, rho } => {
            if !(rho > 0.0) {
                return Err(Error::domain(format!("discrete_d needs rho > 0, got {rho}")));
            }
            if f64::from(n) * rho <= f64::from(k) * c {
                return Err(Error::domain(format!(
                    "discrete_d needs n*rho > k*c (n={n}, rho={rho}, k={k}, c={c})"
                )));
            }
            validate_baskakov_order(c, f64::from(n) + f64::from(k) * c)
        }
        WeightFamily::Mkz | WeightFamily::Bbh | WeightFamily::Lr | WeightFamily::MixedBernstein => {
            Ok(())
        }
    }
}

fn validate_baskakov_order(c: f64, order: f64) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::domain("baskakov parameter c must be finite"));
    }
    if c >= 0.0 {
        // any positive order gives a normalized weight family (the weights
        // follow a negative-binomial law with shape order/c)
        if order <= 0.0 {
            return Err(Error::domain(format!(
                "baskakov with c = {c} needs a positive order, got {order}"
            )));
        }
    } else {
        let ratio = -order / c;
        if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "baskakov with c = {c} needs -order/c to be a positive integer, \
                 got order {order}"
            )));
        }
    }
    Ok(())
}

/// The weight of index `j` at the point `x`.
pub fn weight(fam: &WeightFamily, n: u32, j: u64, x: f64) -> Result<f64> {
    validate(fam, n)?;
    if !x.is_finite() {
        return Err(Error::domain("weight point x must be finite"));
    }
    let nf = f64::from(n);
    match *fam {
        WeightFamily::Baskakov { c } => baskakov_weight(c, nf, j, x),
        WeightFamily::DiscreteD { c, k, rho: _ } => {
            baskakov_weight(c, nf + f64::from(k) * c, j, x)
        }
        WeightFamily::Mkz => mkz_weight(n, j, x),
        WeightFamily::Bbh => bbh_weight(n, j, x),
        WeightFamily::QA { a } => q_a_weight(a, nf, j, x),
        WeightFamily::JlExp { p } => poisson_weight(nf * x + p, j, x < 0.0),
        WeightFamily::Lr => lr_weight(nf, j, x),
        WeightFamily::MixedBernstein => mixed_bernstein_weight(n, j, x),
    }
}

/// The abscissa at which the operator of order `n` samples `f` for index `j`.
pub fn node(fam: &WeightFamily, n: u32, j: u64) -> Result<f64> {
    validate(fam, n)?;
    let nf = f64::from(n);
    let jf = j as f64;
    match *fam {
        WeightFamily::Baskakov { .. }
        | WeightFamily::QA { .. }
        | WeightFamily::JlExp { .. }
        | WeightFamily::MixedBernstein => Ok(jf / nf),
        WeightFamily::Mkz => Ok(jf / (nf + jf)),
        WeightFamily::Bbh => {
            if j > u64::from(n) {
                return Err(Error::domain(format!(
                    "bbh node index {j} beyond finite support {n}"
                )));
            }
            Ok(jf / (nf - jf + 1.0))
        }
        WeightFamily::Lr => Ok(2.0 * jf / nf),
        WeightFamily::DiscreteD { c, k, rho } => {
            let kf = f64::from(k);
            Ok(((2.0 * jf + kf) * rho + kf) / (2.0 * (nf * rho - kf * c)))
        }
    }
}

/// The largest index with nonzero weight, or [`Support::Unbounded`].
pub fn support(fam: &WeightFamily, n: u32) -> Result<Support> {
    validate(fam, n)?;
    match *fam {
        WeightFamily::Baskakov { c } if c < 0.0 => {
            Ok(Support::Finite((-f64::from(n) / c).round() as u64))
        }
        WeightFamily::DiscreteD { c, k, .. } if c < 0.0 => {
            let order = f64::from(n) + f64::from(k) * c;
            Ok(Support::Finite((-order / c).round() as u64))
        }
        WeightFamily::Bbh | WeightFamily::MixedBernstein => Ok(Support::Finite(u64::from(n))),
        _ => Ok(Support::Unbounded),
    }
}

/// Baskakov-type weight with a real order parameter, for callers whose
/// basis order is `n + kc` (the Kantorovich series tails).
pub(crate) fn baskakov_real_order(c: f64, order: f64, j: u64, x: f64) -> Result<f64> {
    validate_baskakov_order(c, order)?;
    baskakov_weight(c, order, j, x)
}

fn ln_factorial(j: u64) -> f64 {
    ln_gamma(j as f64 + 1.0)
}

fn ln_binomial(n: f64, j: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(j + 1.0) - ln_gamma(n - j + 1.0)
}

/// Baskakov-type weight with real order (the discrete-D basis needs order
/// `n + kc`, which is not an integer for fractional `c`).
fn baskakov_weight(c: f64, order: f64, j: u64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::domain(format!("baskakov weight needs x >= 0, got {x}")));
    }
    if c == 0.0 {
        return poisson_weight(order * x, j, false);
    }
    if c < 0.0 {
        // reduces to a binomial: C(N, j) y^j (1-y)^{N-j} with y = -c x
        let big_n = (-order / c).round();
        let y = -c * x;
        if y > 1.0 {
            return Err(Error::domain(format!(
                "baskakov with c = {c}: x = {x} outside [0, {}]",
                -1.0 / c
            )));
        }
        if j as f64 > big_n {
            return Err(Error::domain(format!(
                "baskakov index {j} beyond finite support {big_n}"
            )));
        }
        let jf = j as f64;
        if y == 0.0 {
            return Ok(if j == 0 { 1.0 } else { 0.0 });
        }
        if y == 1.0 {
            return Ok(if jf == big_n { 1.0 } else { 0.0 });
        }
        let ln_w = ln_binomial(big_n, jf) + jf * y.ln() + (big_n - jf) * (-y).ln_1p();
        return Ok(ln_w.exp());
    }
    // c > 0
    if x == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    if j > u64::from(u32::MAX) {
        return Err(Error::NonConvergence { terms: j });
    }
    let jf = j as f64;
    let ln_rf = ln_rising_factorial_c(order, c, j as u32)?;
    let ln_w = ln_rf - ln_factorial(j) + jf * x.ln() - (order / c + jf) * (c * x).ln_1p();
    Ok(ln_w.exp())
}

fn poisson_weight(lambda: f64, j: u64, negative_x: bool) -> Result<f64> {
    if negative_x || lambda < 0.0 {
        return Err(Error::domain(format!(
            "poisson-type weight needs a nonnegative mean, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let jf = j as f64;
    Ok((-lambda + jf * lambda.ln() - ln_factorial(j)).exp())
}

fn mkz_weight(n: u32, j: u64, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain(format!(
            "mkz weight needs x in [0, 1), got {x} (the operator handles x = 1)"
        )));
    }
    if x == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let nf = f64::from(n);
    let jf = j as f64;
    let ln_w = ln_binomial(nf + jf, jf) + jf * x.ln() + (nf + 1.0) * (-x).ln_1p();
    Ok(ln_w.exp())
}

fn bbh_weight(n: u32, j: u64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::domain(format!("bbh weight needs x >= 0, got {x}")));
    }
    if j > u64::from(n) {
        return Err(Error::domain(format!(
            "bbh index {j} beyond finite support {n}"
        )));
    }
    if x == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let nf = f64::from(n);
    let jf = j as f64;
    let ln_w = ln_binomial(nf, jf) + jf * x.ln() - nf * x.ln_1p();
    Ok(ln_w.exp())
}

/// `q^a_{n,k}` weight. The inner sum `sum_i C(k,i) n^{1,i} a^{k-i}` is run
/// by forward recurrence in `i`, rescaled whenever the running term grows
/// past 1e250 so no intermediate overflows.
fn q_a_weight(a: f64, nf: f64, j: u64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::domain(format!("q_a weight needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let jf = j as f64;
    let ln_inner = if a == 0.0 {
        // only the i = k term survives: n^{1, k}
        if j > u64::from(u32::MAX) {
            return Err(Error::NonConvergence { terms: j });
        }
        ln_rising_factorial_c(nf, 1.0, j as u32)?
    } else {
        const RESCALE: f64 = 1e250;
        let mut log_scale = jf * a.ln();
        let mut term = 1.0_f64; // C(k,0) n^{1,0} a^k, divided by e^{log_scale}
        let mut sum = term;
        for i in 0..j {
            let i_f = i as f64;
            term *= (jf - i_f) * (nf + i_f) / ((i_f + 1.0) * a);
            sum += term;
            if term > RESCALE || sum > RESCALE {
                term /= RESCALE;
                sum /= RESCALE;
                log_scale += RESCALE.ln();
            }
        }
        sum.ln() + log_scale
    };
    let ln_w = -a * x / (1.0 + x) + ln_inner - ln_factorial(j) + jf * x.ln()
        - (nf + jf) * x.ln_1p();
    Ok(ln_w.exp())
}

fn lr_weight(nf: f64, j: u64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::domain(format!("lr weight needs x >= 0, got {x}")));
    }
    let z = nf * x;
    if z == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let jf = j as f64;
    // ln cosh(z) = z - ln 2 + ln(1 + e^{-2z}) for z >= 0
    let ln_cosh = z - std::f64::consts::LN_2 + (-2.0 * z).exp().ln_1p();
    let ln_w = 2.0 * jf * z.ln() - ln_factorial(2 * j) - ln_cosh;
    Ok(ln_w.exp())
}

/// Averaged-Bernstein weight: zero at odd `j`, and
/// `2 C(n,j) x^j (1-x)^{n-j} / (1 + (1-2x)^n)` at even `j` (the algebraic
/// simplification of averaging the Bernstein weights at `x` and `-x`).
fn mixed_bernstein_weight(n: u32, j: u64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "mixed_bernstein weight needs x in [0, 1], got {x}"
        )));
    }
    if j > u64::from(n) {
        return Err(Error::domain(format!(
            "mixed_bernstein index {j} beyond finite support {n}"
        )));
    }
    if j % 2 == 1 {
        return Ok(0.0);
    }
    let nf = f64::from(n);
    let denom = 1.0 + (1.0 - 2.0 * x).powi(n as i32);
    if denom == 0.0 {
        return Err(Error::domain(format!(
            "mixed_bernstein weight undefined at x = 1 with odd n = {n} \
             (the operator handles this point)"
        )));
    }
    if x == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    if x == 1.0 {
        return Ok(if j == u64::from(n) { 1.0 } else { 0.0 });
    }
    let jf = j as f64;
    let ln_w = ln_binomial(nf, jf) + jf * x.ln() + (nf - jf) * (-x).ln_1p();
    Ok(2.0 * ln_w.exp() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sum_series, Complex, SeriesTerm, TruncationPolicy};
    use approx::assert_relative_eq;

    fn weight_sum(fam: &WeightFamily, n: u32, x: f64) -> f64 {
        let policy = TruncationPolicy::default();
        let sup = support(fam, n).unwrap();
        sum_series(
            |j| {
                if !sup.contains(j) {
                    return Ok(None);
                }
                let w = weight(fam, n, j, x)?;
                Ok(Some(SeriesTerm::exact(Complex::new(w, 0.0))))
            },
            &policy,
        )
        .unwrap()
        .re
    }

    #[test]
    fn szasz_weight_at_origin() {
        let fam = WeightFamily::Baskakov { c: 0.0 };
        assert_eq!(weight(&fam, 3, 0, 0.0).unwrap(), 1.0);
        assert_eq!(weight(&fam, 3, 2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bernstein_weight_direct() {
        let fam = WeightFamily::Baskakov { c: -1.0 };
        assert_relative_eq!(weight(&fam, 2, 1, 0.5).unwrap(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn baskakov_weight_direct() {
        let fam = WeightFamily::Baskakov { c: 1.0 };
        assert_relative_eq!(weight(&fam, 1, 1, 1.0).unwrap(), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn lr_weight_direct() {
        let fam = WeightFamily::Lr;
        assert_relative_eq!(
            weight(&fam, 1, 0, 1.0).unwrap(),
            1.0 / 1.0f64.cosh(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn nodes_match_family_definitions() {
        assert_eq!(node(&WeightFamily::Bbh, 5, 5).unwrap(), 5.0);
        assert_eq!(node(&WeightFamily::Mkz, 3, 0).unwrap(), 0.0);
        assert_eq!(
            node(&WeightFamily::DiscreteD { c: 0.0, k: 0, rho: 1.0 }, 4, 2).unwrap(),
            0.5
        );
        assert_eq!(node(&WeightFamily::Lr, 4, 3).unwrap(), 1.5);
        assert_eq!(node(&WeightFamily::Mkz, 3, 3).unwrap(), 0.5);
    }

    #[test]
    fn supports() {
        assert_eq!(
            support(&WeightFamily::Baskakov { c: -1.0 }, 7).unwrap(),
            Support::Finite(7)
        );
        assert_eq!(
            support(&WeightFamily::Baskakov { c: 1.0 }, 7).unwrap(),
            Support::Unbounded
        );
        assert_eq!(
            support(&WeightFamily::Baskakov { c: -0.5 }, 3).unwrap(),
            Support::Finite(6)
        );
        assert_eq!(
            support(&WeightFamily::DiscreteD { c: -1.0, k: 1, rho: 1.0 }, 5).unwrap(),
            Support::Finite(4)
        );
        assert_eq!(support(&WeightFamily::Bbh, 9).unwrap(), Support::Finite(9));
    }

    #[test]
    fn invalid_orders_rejected() {
        // -n/c must be a positive integer for c < 0
        assert!(validate(&WeightFamily::Baskakov { c: -0.3 }, 5).is_err());
        assert!(validate(&WeightFamily::Baskakov { c: -0.5 }, 5).is_ok());
        // n rho > k c
        assert!(validate(&WeightFamily::DiscreteD { c: 4.0, k: 2, rho: 1.0 }, 3).is_err());
        assert!(validate(&WeightFamily::QA { a: -1.0 }, 3).is_err());
    }

    #[test]
    fn weights_normalize() {
        let cases: Vec<(WeightFamily, u32, f64)> = vec![
            (WeightFamily::Baskakov { c: 0.0 }, 6, 1.7),
            (WeightFamily::Baskakov { c: -1.0 }, 9, 0.4),
            (WeightFamily::Baskakov { c: 1.0 }, 4, 2.2),
            (WeightFamily::Baskakov { c: 2.0 }, 5, 0.8),
            (WeightFamily::Baskakov { c: -0.5 }, 6, 1.3),
            (WeightFamily::Mkz, 5, 0.6),
            (WeightFamily::Bbh, 8, 1.9),
            (WeightFamily::QA { a: 2.0 }, 5, 1.1),
            (WeightFamily::JlExp { p: 1.5 }, 4, 0.9),
            (WeightFamily::Lr, 3, 1.4),
            (WeightFamily::DiscreteD { c: 1.0, k: 1, rho: 2.0 }, 5, 0.7),
            (WeightFamily::DiscreteD { c: -1.0, k: 1, rho: 1.0 }, 6, 0.5),
            (WeightFamily::MixedBernstein, 7, 0.3),
        ];
        for (fam, n, x) in cases {
            let total = weight_sum(&fam, n, x);
            assert!(
                (total - 1.0).abs() <= 1e-12,
                "{fam:?} n={n} x={x}: sum = {total}"
            );
        }
    }

    #[test]
    fn weights_nonnegative() {
        let fams = [
            WeightFamily::Baskakov { c: 1.0 },
            WeightFamily::Mkz,
            WeightFamily::Bbh,
            WeightFamily::QA { a: 3.0 },
            WeightFamily::Lr,
            WeightFamily::MixedBernstein,
        ];
        for fam in &fams {
            for j in 0..12u64 {
                let w = weight(fam, 12, j, 0.45).unwrap();
                assert!(w >= 0.0, "{fam:?} j={j}: {w}");
            }
        }
    }

    #[test]
    fn szasz_factorization_is_exact() {
        let fam = WeightFamily::Baskakov { c: 0.0 };
        for m in [2u32, 3, 7, 19] {
            for j in [0u64, 1, 4, 11] {
                for x in [0.0, 0.31, 1.25, 2.5] {
                    let lhs = weight(&fam, m, j, x).unwrap();
                    let rhs = weight(&fam, 1, j, f64::from(m) * x).unwrap();
                    assert_eq!(lhs, rhs, "m={m} j={j} x={x}");
                }
            }
        }
    }

    #[test]
    fn q_a_zero_matches_classical_baskakov() {
        let qa = WeightFamily::QA { a: 0.0 };
        let bask = WeightFamily::Baskakov { c: 1.0 };
        for j in 0..25u64 {
            let lhs = weight(&qa, 7, j, 1.3).unwrap();
            let rhs = weight(&bask, 7, j, 1.3).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn q_a_inner_sum_brute_force() {
        // oracle: direct evaluation of sum_i C(k,i) n^{1,i} a^{k-i}
        let (a, n, x) = (2.0_f64, 5u32, 1.1_f64);
        for k in [0u64, 1, 3, 8] {
            let kf = k as f64;
            let mut inner = 0.0;
            for i in 0..=k {
                let mut binom = 1.0;
                for l in 0..i {
                    binom *= (kf - l as f64) / (l as f64 + 1.0);
                }
                let mut rising = 1.0;
                for l in 0..i {
                    rising *= f64::from(n) + l as f64;
                }
                inner += binom * rising * a.powi((k - i) as i32);
            }
            let mut factorial = 1.0;
            for l in 1..=k {
                factorial *= l as f64;
            }
            let expected = (-a * x / (1.0 + x)).exp() * inner / factorial * x.powi(k as i32)
                / (1.0 + x).powi(n as i32 + k as i32);
            let got = weight(&WeightFamily::QA { a }, n, k, x).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn mixed_bernstein_odd_weights_vanish() {
        let fam = WeightFamily::MixedBernstein;
        for j in [1u64, 3, 5, 7] {
            assert_eq!(weight(&fam, 8, j, 0.37).unwrap(), 0.0);
        }
    }

    #[test]
    fn mixed_bernstein_rejects_odd_order_at_one() {
        let fam = WeightFamily::MixedBernstein;
        assert!(weight(&fam, 5, 2, 1.0).is_err());
        assert_eq!(weight(&fam, 6, 6, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn mkz_excludes_right_endpoint() {
        assert!(weight(&WeightFamily::Mkz, 4, 1, 1.0).is_err());
    }

    #[test]
    fn out_of_domain_rejected() {
        assert!(weight(&WeightFamily::Baskakov { c: -1.0 }, 3, 1, 1.5).is_err());
        assert!(weight(&WeightFamily::Bbh, 3, 1, -0.2).is_err());
        assert!(weight(&WeightFamily::Baskakov { c: -1.0 }, 3, 4, 0.5).is_err());
    }
}
