//! Map between [`ParameterSet`] and the unconstrained optimization vector:
//! β₁, β₂, α, log-Cholesky(D), ln σ, ln λ, η in that order.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterSet};

/// Number of free parameters (D counted as r(r+1)/2, ν excluded).
pub fn dim(spec: &ModelSpec) -> usize {
    let r = spec.r();
    spec.p() + spec.q() + spec.alpha_len() + r * (r + 1) / 2 + 1 + spec.k() + spec.ell()
}

pub fn pack(params: &ParameterSet, spec: &ModelSpec) -> Result<Vec<f64>> {
    params.validate(spec)?;
    let r = spec.r();
    let mut v = Vec::with_capacity(dim(spec));
    v.extend_from_slice(&params.beta1);
    v.extend_from_slice(&params.beta2);
    v.extend_from_slice(&params.alpha);
    let chol = params
        .d
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameters("D is not positive definite".into()))?;
    let l = chol.l();
    for i in 0..r {
        for j in 0..=i {
            v.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
        }
    }
    v.push(params.sigma.ln());
    v.extend(params.lambda.iter().map(|l| l.ln()));
    v.extend_from_slice(&params.eta);
    Ok(v)
}

pub fn unpack(v: &[f64], spec: &ModelSpec) -> Result<ParameterSet> {
    if v.len() != dim(spec) {
        return Err(Error::InvalidArgument(format!(
            "parameter vector has {} entries, expected {}",
            v.len(),
            dim(spec)
        )));
    }
    let r = spec.r();
    let mut it = v.iter().copied();
    let mut take = |n: usize| -> Vec<f64> { it.by_ref().take(n).collect() };
    let beta1 = take(spec.p());
    let beta2 = take(spec.q());
    let alpha = take(spec.alpha_len());
    let tri = take(r * (r + 1) / 2);
    let mut l = DMatrix::zeros(r, r);
    let mut idx = 0;
    for i in 0..r {
        for j in 0..=i {
            l[(i, j)] = if i == j { tri[idx].exp() } else { tri[idx] };
            idx += 1;
        }
    }
    let d = &l * l.transpose();
    let sigma = take(1)[0].exp();
    let lambda = take(spec.k()).into_iter().map(f64::exp).collect();
    let eta = take(spec.ell());
    let nu = match spec.copula {
        crate::model::Copula::StudentT { nu } => Some(nu),
        _ => None,
    };
    Ok(ParameterSet {
        beta1,
        beta2,
        alpha,
        d,
        sigma,
        lambda,
        eta,
        nu,
    })
}

/// Natural-scale values in [`ParameterSet::named_values`] order.
pub(crate) fn natural(v: &[f64], spec: &ModelSpec) -> Result<Vec<f64>> {
    Ok(unpack(v, spec)?
        .named_values(spec)
        .into_iter()
        .map(|(_, x)| x)
        .collect())
}

/// Jacobian of the natural-scale values with respect to the packed vector,
/// by central differences.
pub(crate) fn natural_jacobian(v: &[f64], spec: &ModelSpec) -> Result<DMatrix<f64>> {
    let base = natural(v, spec)?;
    let mut jac = DMatrix::zeros(base.len(), v.len());
    let mut x = v.to_vec();
    for k in 0..v.len() {
        let h = 1e-6 * v[k].abs().max(1.0);
        x[k] = v[k] + h;
        let up = natural(&x, spec)?;
        x[k] = v[k] - h;
        let dn = natural(&x, spec)?;
        x[k] = v[k];
        for i in 0..base.len() {
            jac[(i, k)] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}
