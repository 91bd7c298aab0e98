use crate::error::{Error, Result};

/// Bisection on a bracketing interval `[lo, hi]` where `f` changes sign.
///
/// Stops once the bracket width is below `rel_tol * max(|lo|, |hi|)` or the
/// midpoint is exactly a root. Returns the midpoint of the final bracket.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::NoConvergence(format!(
            "bisection bracket [{lo:e}, {hi:e}] is empty"
        )));
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoConvergence(format!(
            "no sign change on [{lo:e}, {hi:e}] (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * lo.abs().max(hi.abs()) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!(
        "bisection exceeded {max_iter} iterations on [{lo:e}, {hi:e}]"
    )))
}
