//! Bracketed scalar root finders.
//!
//! Both routines expect `fun(lo)` and `fun(hi)` to have opposite signs and
//! return `None` otherwise.

/// Plain bisection down to an absolute bracket width of `tol`.
pub fn bisect<F>(fun: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = fun(lo);
    let f_hi = fun(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = fun(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Newton iteration kept inside a shrinking sign-change bracket.
///
/// A Newton step that would leave the bracket, or that fails to halve the
/// previous step, is replaced by a bisection step.
pub fn safeguarded_newton<F, D>(fun: F, dfun: D, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let f_lo = fun(lo);
    let f_hi = fun(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    // orient so that fun(neg) < 0 < fun(pos)
    let (mut neg, mut pos) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let mut fx = fun(x);
    let mut dfx = dfun(x);
    for _ in 0..max_iter {
        let newton_leaves = ((x - pos) * dfx - fx) * ((x - neg) * dfx - fx) > 0.0;
        let too_slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        if newton_leaves || too_slow || !dfx.is_finite() {
            dx_old = dx;
            dx = 0.5 * (pos - neg);
            x = neg + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() < tol {
            return Some(x);
        }
        fx = fun(x);
        dfx = dfun(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
    }
    Some(x)
}
