use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParameterSet, SubjectData};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gaussian law of b_i given y_i.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRE {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Quantities of the random-effects prior reused across subjects.
#[derive(Debug, Clone)]
pub(crate) struct PriorRE {
    pub d: DMatrix<f64>,
    pub d_inv: DMatrix<f64>,
    pub ln_det_d: f64,
}

impl PriorRE {
    pub fn new(d: &DMatrix<f64>) -> Result<Self> {
        let chol = d.clone().cholesky().ok_or_else(|| {
            Error::Conditioning("random-effects covariance is not positive definite".into())
        })?;
        let ln_det_d = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            d: d.clone(),
            d_inv: chol.inverse(),
            ln_det_d,
        })
    }
}

/// Marginal log density of the residual vector e = y − Xβ₁ together with
/// the posterior of b, via the r×r identity
/// V⁻¹ = σ⁻²I − σ⁻⁴ Z (D⁻¹ + ZᵀZ/σ²)⁻¹ Zᵀ.
///
/// `z` holds the n×r random-effects design row-major.
pub(crate) fn gaussian_parts(
    z: &[f64],
    e: &[f64],
    r: usize,
    sigma: f64,
    prior: &PriorRE,
) -> Result<(f64, PosteriorRE)> {
    let n = e.len();
    if n == 0 {
        return Ok((
            0.0,
            PosteriorRE {
                mean: DVector::zeros(r),
                covariance: prior.d.clone(),
            },
        ));
    }
    let s2 = sigma * sigma;
    let mut p = prior.d_inv.clone();
    let mut g = DVector::zeros(r);
    for j in 0..n {
        let row = &z[j * r..(j + 1) * r];
        for a in 0..r {
            g[a] += row[a] * e[j] / s2;
            for c in 0..r {
                p[(a, c)] += row[a] * row[c] / s2;
            }
        }
    }
    let chol = p.cholesky().ok_or_else(|| {
        Error::Conditioning("marginal covariance of the responses is singular".into())
    })?;
    let ln_det_p = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let cov = chol.inverse();
    let mean = &cov * &g;
    let ee: f64 = e.iter().map(|v| v * v).sum::<f64>() / s2;
    let quad = ee - g.dot(&mean);
    let ln_det_v = 2.0 * n as f64 * sigma.ln() + prior.ln_det_d + ln_det_p;
    let ll = -0.5 * (n as f64 * LN_2PI + ln_det_v + quad);
    if !ll.is_finite() {
        return Err(Error::Conditioning(
            "non-finite marginal density of the responses".into(),
        ));
    }
    Ok((
        ll,
        PosteriorRE {
            mean,
            covariance: cov,
        },
    ))
}

/// Residuals y − Xβ₁ and the random-effects design, both row-major.
pub(crate) fn residuals_and_design(
    subject: &SubjectData,
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if params.beta1.len() != spec.p() || subject.long_covariates.len() != spec.long_covariates.len()
    {
        return Err(Error::InvalidArgument(
            "covariate dimension mismatch".into(),
        ));
    }
    let r = spec.r();
    let mut row = Vec::with_capacity(spec.p());
    let mut e = Vec::with_capacity(subject.n_obs());
    let mut z = Vec::with_capacity(subject.n_obs() * r);
    for (&s, &y) in subject.times.iter().zip(&subject.y) {
        spec.design_row(s, &subject.long_covariates, &mut row)?;
        let m: f64 = row.iter().zip(&params.beta1).map(|(a, b)| a * b).sum();
        e.push(y - m);
        let (zr, used) = spec.random_effects.design(s);
        z.extend_from_slice(&zr[..used]);
    }
    Ok((e, z))
}

/// b_i | y_i ~ N(D Zᵀ V⁻¹ (y − Xβ₁), D − D Zᵀ V⁻¹ Z D).
pub fn posterior_re(
    subject: &SubjectData,
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<PosteriorRE> {
    let prior = PriorRE::new(&params.d)?;
    let (e, z) = residuals_and_design(subject, params, spec)?;
    Ok(gaussian_parts(&z, &e, spec.r(), params.sigma, &prior)?.1)
}

/// ln of the multivariate normal density of y_i with covariance
/// V = Z D Zᵀ + σ²I.
pub fn marginal_y_logdensity(
    subject: &SubjectData,
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    let prior = PriorRE::new(&params.d)?;
    let (e, z) = residuals_and_design(subject, params, spec)?;
    Ok(gaussian_parts(&z, &e, spec.r(), params.sigma, &prior)?.0)
}
