use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::numerics::KahanSum;

/// Tolerances and budget for [`adaptive_integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
            return Err(Error::domain(format!(
                "quadrature tolerances must be positive, got rel={rel_tol}, abs={abs_tol}"
            )));
        }
        if max_subdivisions == 0 {
            return Err(Error::domain("quadrature needs max_subdivisions >= 1"));
        }
        Ok(QuadratureSpec {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 1000,
        }
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    integral: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_15<F>(f: &mut F, lo: f64, hi: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let mut eval = |t: f64| -> Result<f64> {
        let v = f(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("integrand not finite at t = {t}")))
        }
    };

    let f_center = eval(center)?;
    let mut res_gauss = WG[3] * f_center;
    let mut res_kronrod = WGK[7] * f_center;
    let mut res_abs = WGK[7] * f_center.abs();
    let mut fv = [[0.0_f64; 2]; 7];

    for (i, item) in fv.iter_mut().enumerate() {
        let x = half * XGK[i];
        let f1 = eval(center - x)?;
        let f2 = eval(center + x)?;
        *item = [f1, f2];
        let fsum = f1 + f2;
        res_kronrod += WGK[i] * fsum;
        res_abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            res_gauss += WG[i / 2] * fsum;
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for (i, item) in fv.iter().enumerate() {
        res_asc += WGK[i] * ((item[0] - mean).abs() + (item[1] - mean).abs());
    }

    let integral = res_kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor > err {
        err = floor;
    }

    Ok(Segment {
        lo,
        hi,
        integral,
        error: err,
    })
}

/// Adaptive Gauss-Kronrod integration of `g` over the finite interval
/// `[lo, hi]` by worst-segment bisection.
///
/// Returns the estimate once the accumulated error estimate is below
/// `max(abs_tol, rel_tol * |result|)`. Callers integrating over unbounded
/// ranges truncate the interval themselves.
pub fn adaptive_integrate<F>(mut g: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(
            "adaptive_integrate requires finite endpoints; truncate the tail first",
        ));
    }
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return adaptive_integrate(g, hi, lo, spec).map(|v| -v);
    }

    let mut heap = BinaryHeap::new();
    heap.push(gauss_kronrod_15(&mut g, lo, hi)?);
    let mut total_integral = heap.peek().map(|s| s.integral).unwrap_or(0.0);
    let mut total_error = heap.peek().map(|s| s.error).unwrap_or(0.0);

    for _ in 0..spec.max_subdivisions {
        let target = spec.abs_tol.max(spec.rel_tol * total_integral.abs());
        if total_error <= target {
            return Ok(resum(&heap));
        }
        let worst = heap.pop().expect("heap never empty inside the loop");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval no longer splittable in f64; keep its estimate
            let others_err = total_error - worst.error;
            heap.push(worst);
            if others_err <= target {
                return Ok(resum(&heap));
            }
            return Err(Error::ToleranceNotMet {
                subdivisions: spec.max_subdivisions,
                error_estimate: total_error,
            });
        }
        let left = gauss_kronrod_15(&mut g, worst.lo, mid)?;
        let right = gauss_kronrod_15(&mut g, mid, worst.hi)?;
        total_integral += left.integral + right.integral - worst.integral;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let target = spec.abs_tol.max(spec.rel_tol * total_integral.abs());
    if total_error <= target {
        return Ok(resum(&heap));
    }
    Err(Error::ToleranceNotMet {
        subdivisions: spec.max_subdivisions,
        error_estimate: total_error,
    })
}

fn resum(heap: &BinaryHeap<Segment>) -> f64 {
    let mut acc = KahanSum::new();
    for seg in heap.iter() {
        acc.add(seg.integral);
    }
    acc.value()
}
