use nalgebra::DMatrix;

use super::error::{NumericsError, Result};
use super::real::Real;

/// Default relative finite-difference steps: max(1e-4·|θ_k|, 1e-5).
pub fn default_steps<T: Real>(theta: &[T]) -> Vec<T> {
    theta
        .iter()
        .map(|&x| (T::c(1e-4) * x.abs()).max(T::c(1e-5)))
        .collect()
}

fn eval<T: Real, F: FnMut(&[T]) -> T>(f: &mut F, x: &[T]) -> Result<T> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NumericsError::Evaluation {
            theta: x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            value: v.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Central-difference gradient.
pub fn numeric_gradient<T, F>(mut f: F, theta: &[T], steps: Option<&[T]>) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let h = steps
        .map(<[T]>::to_vec)
        .unwrap_or_else(|| default_steps(theta));
    let mut x = theta.to_vec();
    let mut g = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        x[k] = theta[k] + h[k];
        let fp = eval(&mut f, &x)?;
        x[k] = theta[k] - h[k];
        let fm = eval(&mut f, &x)?;
        x[k] = theta[k];
        g.push((fp - fm) / (h[k] + h[k]));
    }
    Ok(g)
}

/// Central-difference Hessian of `f` at `theta`, symmetrized as (H + Hᵀ)/2.
///
/// Uses the default steps when `steps` is `None`. Any non-finite function
/// value aborts with an evaluation error carrying the offending point.
pub fn numeric_hessian<T, F>(mut f: F, theta: &[T], steps: Option<&[T]>) -> Result<DMatrix<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let n = theta.len();
    let h = steps
        .map(<[T]>::to_vec)
        .unwrap_or_else(|| default_steps(theta));
    if h.len() != n {
        return Err(super::error::invalid(
            "step vector length differs from theta",
        ));
    }
    let f0 = eval(&mut f, theta)?;
    let mut x = theta.to_vec();
    let mut hess = DMatrix::from_element(n, n, T::zero());
    let two = T::c(2.0);
    for i in 0..n {
        x[i] = theta[i] + h[i];
        let fp = eval(&mut f, &x)?;
        x[i] = theta[i] - h[i];
        let fm = eval(&mut f, &x)?;
        x[i] = theta[i];
        hess[(i, i)] = (fp - two * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: T, sj: T, x: &mut Vec<T>| -> Result<T> {
                x[i] = theta[i] + si * h[i];
                x[j] = theta[j] + sj * h[j];
                let v = eval(&mut f, x);
                x[i] = theta[i];
                x[j] = theta[j];
                v
            };
            let one = T::one();
            let fpp = corner(one, one, &mut x)?;
            let fpm = corner(one, -one, &mut x)?;
            let fmp = corner(-one, one, &mut x)?;
            let fmm = corner(-one, -one, &mut x)?;
            let v = (fpp - fpm - fmp + fmm) / (T::c(4.0) * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let sym = DMatrix::from_fn(n, n, |i, j| (hess[(i, j)] + hess[(j, i)]) * T::c(0.5));
    Ok(sym)
}
