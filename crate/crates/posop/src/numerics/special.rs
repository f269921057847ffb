use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{Complex, KahanSum};

/// Generalized rising factorial with step `c`:
/// the product of `a + c*l` for `l = 0, .., j-1`, with the empty product 1.
///
/// Every factor must be strictly positive; all in-scope weight families
/// satisfy this on their parameter domains.
pub fn rising_factorial_c(a: f64, c: f64, j: u32) -> Result<f64> {
    check_factors(a, c, j)?;
    let mut prod = 1.0;
    for l in 0..j {
        prod *= a + c * f64::from(l);
    }
    Ok(prod)
}

/// Log-domain variant of [`rising_factorial_c`] for large `j`.
///
/// Short products sum the logarithms of the factors; past 64 factors the
/// sum switches to `ln Γ` differences so the cost stays O(1) in `j`.
pub fn ln_rising_factorial_c(a: f64, c: f64, j: u32) -> Result<f64> {
    check_factors(a, c, j)?;
    if j == 0 {
        return Ok(0.0);
    }
    if j <= 64 && c != 0.0 {
        let mut acc = KahanSum::new();
        for l in 0..j {
            acc.add((a + c * f64::from(l)).ln());
        }
        return Ok(acc.value());
    }
    let jf = f64::from(j);
    if c == 0.0 {
        Ok(jf * a.ln())
    } else if c > 0.0 {
        // prod (a + c l) = c^j * Γ(a/c + j) / Γ(a/c)
        let r = a / c;
        Ok(jf * c.ln() + ln_gamma(r + jf) - ln_gamma(r))
    } else {
        // prod (a + c l) = (-c)^j * Γ(A + 1) / Γ(A - j + 1), A = a / (-c)
        let big_a = a / (-c);
        Ok(jf * (-c).ln() + ln_gamma(big_a + 1.0) - ln_gamma(big_a - jf + 1.0))
    }
}

fn check_factors(a: f64, c: f64, j: u32) -> Result<()> {
    if !a.is_finite() || !c.is_finite() {
        return Err(Error::domain("rising factorial: non-finite arguments"));
    }
    // smallest factor is at l = 0 or l = j - 1 depending on the sign of c
    if j > 0 {
        let last = a + c * f64::from(j - 1);
        if a <= 0.0 || last <= 0.0 {
            return Err(Error::domain(format!(
                "rising factorial: nonpositive factor in a={a}, c={c}, j={j}"
            )));
        }
    }
    Ok(())
}

/// Principal-branch complex power `z^w`.
///
/// Integer exponents are evaluated by binary exponentiation and accept any
/// nonzero base. Non-integer exponents require `Re(z) > 0`, where the
/// principal logarithm is unambiguous; anything else is refused.
pub fn complex_principal_pow(z: Complex, w: f64) -> Result<Complex> {
    if !w.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain("complex power: non-finite arguments"));
    }
    if w.fract() == 0.0 && w.abs() <= 9.007_199_254_740_992e15 {
        return powi(z, w as i64);
    }
    if z.re <= 0.0 {
        return Err(Error::domain(format!(
            "complex power: branch ambiguity for base {z} with non-integer exponent {w}"
        )));
    }
    let value = (w * principal_ln(z)).exp();
    ensure_finite(value, "complex power")
}

/// Principal logarithm, accurate near `z = 1` where large exponents would
/// amplify the absorption error of the plain `ln |z|`.
fn principal_ln(z: Complex) -> Complex {
    let u = z - Complex::new(1.0, 0.0);
    if u.norm() < 0.5 {
        Complex::new(ln_abs_one_plus(u), z.im.atan2(z.re))
    } else {
        z.ln()
    }
}

// ln|1+u| = ln1p(2 Re u + |u|^2) / 2 keeps full relative accuracy
fn ln_abs_one_plus(u: Complex) -> f64 {
    0.5 * (2.0 * u.re + u.re * u.re + u.im * u.im).ln_1p()
}

/// `(1 - u)^w` for bases written as one minus a small correction.
///
/// Forming `1 - u` in f64 rounds `u` at the 1-ulp-of-one level, which a
/// large exponent amplifies into the leading digits of the power; this
/// keeps `u` exact through a complex `ln1p` instead. Falls back to
/// [`complex_principal_pow`] when `u` is not small.
pub fn complex_pow_one_minus(u: Complex, w: f64) -> Result<Complex> {
    if u.norm() >= 0.5 {
        return complex_principal_pow(Complex::new(1.0 - u.re, -u.im), w);
    }
    let log = Complex::new(ln_abs_one_plus(-u), (-u.im).atan2(1.0 - u.re));
    ensure_finite((w * log).exp(), "complex power")
}

fn powi(z: Complex, n: i64) -> Result<Complex> {
    if n == 0 {
        return Ok(Complex::new(1.0, 0.0));
    }
    if z == Complex::new(0.0, 0.0) {
        if n > 0 {
            return Ok(z);
        }
        return Err(Error::domain("complex power: zero base with negative exponent"));
    }
    let mut base = if n < 0 { z.inv() } else { z };
    let mut exp = n.unsigned_abs();
    let mut acc = Complex::new(1.0, 0.0);
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        exp >>= 1;
        if exp > 0 {
            base *= base;
        }
    }
    ensure_finite(acc, "complex power")
}

fn ensure_finite(v: Complex, what: &str) -> Result<Complex> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{what}: non-finite result {v}")))
    }
}

/// `(e^w - 1) / w` with its removable singularity filled in: the value at
/// `w = 0` is 1, and for `|w| < 1e-6` the cubic Taylor polynomial
/// `1 + w/2 + w^2/6 + w^3/24` is used (truncation ~1e-26, no cancellation).
pub fn expm1_over(w: Complex) -> Complex {
    if w.norm() < 1e-6 {
        let w2 = w * w;
        return Complex::new(1.0, 0.0) + w * 0.5 + w2 * (1.0 / 6.0) + w2 * w * (1.0 / 24.0);
    }
    (w.exp() - Complex::new(1.0, 0.0)) / w
}

/// `e^{i theta}` on the unit circle.
pub(crate) fn cis(theta: f64) -> Complex {
    Complex::new(theta.cos(), theta.sin())
}

/// `e^{i theta} - 1` without cancellation: the real part is
/// `-2 sin^2(theta / 2)`.
pub(crate) fn cis_m1(theta: f64) -> Complex {
    let half = (0.5 * theta).sin();
    Complex::new(-2.0 * half * half, theta.sin())
}

/// `sin t / t` with a Taylor branch around the removable singularity.
pub(crate) fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        1.0 - t * t / 6.0 + t.powi(4) / 120.0
    } else {
        t.sin() / t
    }
}

/// Density of the sum of `n` independent uniforms on `[0, 1]`, evaluated by
/// the alternating piecewise-polynomial formula with compensated summation.
///
/// The alternating sum is well conditioned only up to `n = 25`; larger
/// orders are refused (callers switch to Monte Carlo).
pub fn irwin_hall_density(n: u32, s: f64) -> Result<f64> {
    if n == 0 || n > 25 {
        return Err(Error::domain(format!(
            "Irwin-Hall density needs 1 <= n <= 25, got {n}"
        )));
    }
    if !s.is_finite() {
        return Err(Error::domain("Irwin-Hall density: non-finite point"));
    }
    let nf = f64::from(n);
    if s < 0.0 || s > nf {
        return Ok(0.0);
    }
    let mut acc = KahanSum::new();
    let mut binom = 1.0; // C(n, k), exact in f64 for n <= 25
    let upper = (s.floor() as u32).min(n);
    for k in 0..=upper {
        let term = binom * (s - f64::from(k)).powi(n as i32 - 1);
        acc.add(if k % 2 == 0 { term } else { -term });
        binom = binom * f64::from(n - k) / f64::from(k + 1);
    }
    let mut factorial = 1.0; // (n-1)!
    for i in 2..n {
        factorial *= f64::from(i);
    }
    Ok((acc.value() / factorial).max(0.0))
}
