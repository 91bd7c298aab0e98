const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Assumes `f` is unimodal on the interval. Returns `(x_min, f(x_min))`.
pub fn golden_section_min<F>(mut f: F, mut a: f64, mut b: f64, abs_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    // 200 iterations shrink any bracket by ~1e-42.
    for _ in 0..200 {
        if (b - a).abs() <= abs_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
