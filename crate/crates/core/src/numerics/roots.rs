use super::error::{NumericsError, Result};
use super::real::Real;

const MAX_ITER: usize = 200;

/// Root of `f` on `[lo, hi]` by Brent's method.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them be zero).
/// Iteration stops once the bracket is narrower than `tol`.
pub fn find_root<T, F>(mut f: F, lo: T, hi: T, tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !(tol > T::zero()) {
        return Err(super::error::invalid("tolerance must be positive"));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(NumericsError::Bracket {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
            f_lo: fa.to_f64().unwrap_or(f64::NAN),
            f_hi: fb.to_f64().unwrap_or(f64::NAN),
        });
    }
    let two = T::c(2.0);
    let half = T::c(0.5);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + half * tol;
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = T::c(3.0) * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else {
            b + tol1 * xm.signum()
        };
        fb = f(b);
    }
    Err(NumericsError::NoConvergence(format!(
        "Brent iteration exceeded {MAX_ITER} steps"
    )))
}

/// Newton iteration safeguarded by bisection on `[lo, hi]`.
///
/// `fdf` returns the function value and its derivative. The function must
/// be increasing on the bracket with `f(lo) < 0 < f(hi)`.
pub fn newton_bisect<T, F>(mut fdf: F, mut lo: T, mut hi: T, x0: T, tol: T) -> T
where
    T: Real,
    F: FnMut(T) -> (T, T),
{
    let mut x = if x0 > lo && x0 < hi {
        x0
    } else {
        (lo + hi) * T::c(0.5)
    };
    for _ in 0..MAX_ITER {
        let (fx, dfx) = fdf(x);
        if fx == T::zero() {
            return x;
        }
        if fx < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx > T::zero() && newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            (lo + hi) * T::c(0.5)
        };
        if (next - x).abs() <= tol * (T::one() + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}
