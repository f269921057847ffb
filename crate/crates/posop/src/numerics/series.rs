use crate::error::{Error, Result};
use crate::numerics::Complex;

/// Stopping rule for the infinite series behind the discrete operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Relative tail tolerance: summation stops once the dominating term
    /// magnitude falls below `rel_tail_tol * |partial sum|` for eight
    /// consecutive indices past the weight mode.
    pub rel_tail_tol: f64,
    /// Hard cap on the number of terms before reporting non-convergence.
    pub max_terms: u64,
}

impl TruncationPolicy {
    pub fn new(rel_tail_tol: f64, max_terms: u64) -> Result<Self> {
        if !(rel_tail_tol > 0.0 && rel_tail_tol < 1.0) {
            return Err(Error::domain(format!(
                "truncation policy needs 0 < rel_tail_tol < 1, got {rel_tail_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::domain("truncation policy needs max_terms >= 1"));
        }
        Ok(TruncationPolicy {
            rel_tail_tol,
            max_terms,
        })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tail_tol: 1e-16,
            max_terms: 10_000_000,
        }
    }
}

/// One series term plus the nonnegative weight that dominates its magnitude.
///
/// The weight drives the stopping rule, so a term whose value happens to
/// vanish (a probe with a zero) cannot stop the sum prematurely.
#[derive(Debug, Clone, Copy)]
pub struct SeriesTerm {
    pub value: Complex,
    pub magnitude: f64,
}

impl SeriesTerm {
    pub fn new(value: Complex, magnitude: f64) -> Self {
        SeriesTerm { value, magnitude }
    }

    /// Term whose own modulus is the dominating magnitude.
    pub fn exact(value: Complex) -> Self {
        SeriesTerm {
            value,
            magnitude: value.norm(),
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `term(0) + term(1) + ...` with compensated accumulation.
///
/// The generator returns `Ok(None)` once a finite support is exhausted, in
/// which case the finite sum is returned exactly (up to compensated
/// rounding). Otherwise summation stops at the first index past the weight
/// mode where the dominating magnitude stays below
/// `rel_tail_tol * |partial sum|` for eight consecutive terms. The weight
/// families summed here rise to a mode before decaying, so engaging the
/// tail test earlier would truncate large-argument series at their leading
/// foothill.
pub fn sum_series<F>(mut term: F, policy: &TruncationPolicy) -> Result<Complex>
where
    F: FnMut(u64) -> Result<Option<SeriesTerm>>,
{
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    let mut max_magnitude = 0.0_f64;
    let mut past_mode = false;
    let mut quiet_run = 0u32;

    for j in 0..policy.max_terms {
        let t = match term(j)? {
            Some(t) => t,
            None => return Ok(Complex::new(re.value(), im.value())),
        };
        if !t.value.re.is_finite() || !t.value.im.is_finite() || !t.magnitude.is_finite() {
            return Err(Error::domain(format!("series term {j} is not finite")));
        }
        re.add(t.value.re);
        im.add(t.value.im);

        if t.magnitude < max_magnitude {
            past_mode = true;
        } else {
            max_magnitude = t.magnitude;
        }
        let partial = Complex::new(re.value(), im.value()).norm();
        if past_mode && t.magnitude <= policy.rel_tail_tol * partial {
            quiet_run += 1;
            if quiet_run >= 8 {
                return Ok(Complex::new(re.value(), im.value()));
            }
        } else {
            quiet_run = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: policy.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        let policy = TruncationPolicy::default();
        let sum = sum_series(
            |j| Ok(Some(SeriesTerm::exact(Complex::new(0.5f64.powi(j as i32), 0.0)))),
            &policy,
        )
        .unwrap();
        assert!((sum.re - 2.0).abs() <= 1e-15, "got {}", sum.re);
        assert_eq!(sum.im, 0.0);
    }

    #[test]
    fn single_spike() {
        let policy = TruncationPolicy::default();
        let sum = sum_series(
            |j| {
                let v = if j == 0 { 1.0 } else { 0.0 };
                Ok(Some(SeriesTerm::exact(Complex::new(v, 0.0))))
            },
            &policy,
        )
        .unwrap();
        assert_eq!(sum, Complex::new(1.0, 0.0));
    }

    #[test]
    fn poisson_weights_normalize() {
        let policy = TruncationPolicy::default();
        let lambda = 5.0_f64;
        let sum = sum_series(
            |j| {
                let mut w = (-lambda).exp();
                for i in 1..=j {
                    w *= lambda / i as f64;
                }
                Ok(Some(SeriesTerm::exact(Complex::new(w, 0.0))))
            },
            &policy,
        )
        .unwrap();
        assert!((sum.re - 1.0).abs() <= 1e-14, "got {}", sum.re);
    }

    #[test]
    fn finite_support_is_exact() {
        let policy = TruncationPolicy::default();
        let values = [3.0, -1.5, 0.25, 7.0];
        let sum = sum_series(
            |j| {
                Ok(values
                    .get(j as usize)
                    .map(|&v| SeriesTerm::exact(Complex::new(v, 0.0))))
            },
            &policy,
        )
        .unwrap();
        assert_eq!(sum.re, 3.0 - 1.5 + 0.25 + 7.0);
    }

    #[test]
    fn rising_weights_do_not_stop_early() {
        // weights rise for 200 indices before decaying; a premature tail
        // test would stop near j = 8
        let policy = TruncationPolicy::default();
        let sum = sum_series(
            |j| {
                let w = if j <= 200 {
                    1e-30 * 1.4f64.powi(j as i32)
                } else {
                    1e-30 * 1.4f64.powi(200) * 0.5f64.powi((j - 200) as i32)
                };
                Ok(Some(SeriesTerm::exact(Complex::new(w, 0.0))))
            },
            &policy,
        )
        .unwrap();
        assert!(sum.re > 1e-30 * 1.4f64.powi(200));
    }

    #[test]
    fn non_convergence_reported() {
        let policy = TruncationPolicy::new(1e-16, 500).unwrap();
        let err = sum_series(
            |_| Ok(Some(SeriesTerm::exact(Complex::new(1.0, 0.0)))),
            &policy,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { terms: 500 }));
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(0.0, 10).is_err());
        assert!(TruncationPolicy::new(1.0, 10).is_err());
        assert!(TruncationPolicy::new(1e-12, 0).is_err());
    }
}
