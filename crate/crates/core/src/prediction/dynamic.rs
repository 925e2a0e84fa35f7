use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimation::optim::{bfgs, OptimOptions, OptimStatus};
use crate::estimation::FittedModel;
use crate::likelihood::posterior::{gaussian_parts, residuals_and_design, PriorRE};
use crate::likelihood::CopulaKernel;
use crate::model::{ModelSpec, ParameterSet, SubjectData, SubjectHazard};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Cumulative hazard beyond which the conditional survival at the landmark
/// is treated as zero.
const H_DEAD: f64 = 32.236_191_301_916_64;

/// Empirical Bayes estimate of the random effects.
#[derive(Debug, Clone, PartialEq)]
pub struct EbMode {
    pub b: Vec<f64>,
    /// False when the optimizer failed and the Gaussian posterior mean of b
    /// given the responses was used instead.
    pub converged: bool,
}

/// Longitudinal history of a subject up to a landmark.
struct History {
    e: Vec<f64>,
    z: Vec<f64>,
    times: Vec<f64>,
    rho: Vec<f64>,
}

impl History {
    fn new(subject: &SubjectData, t: f64, params: &ParameterSet, spec: &ModelSpec) -> Result<Self> {
        let keep = subject.times.partition_point(|&s| s <= t);
        let trimmed = SubjectData {
            times: subject.times[..keep].to_vec(),
            y: subject.y[..keep].to_vec(),
            ..subject.clone()
        };
        let (e, z) = residuals_and_design(&trimmed, params, spec)?;
        let rho = trimmed
            .times
            .iter()
            .map(|&s| params.rho_at(spec, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            e,
            z,
            times: trimmed.times,
            rho,
        })
    }

    fn n(&self) -> usize {
        self.times.len()
    }

    fn z_y(&self, j: usize, b: &[f64], sigma: f64) -> f64 {
        let r = b.len();
        let zb: f64 = self.z[j * r..(j + 1) * r]
            .iter()
            .zip(b)
            .map(|(a, c)| a * c)
            .sum();
        (self.e[j] - zb) / sigma
    }
}

fn check_request(subject: &SubjectData, t: f64, spec: &ModelSpec) -> Result<()> {
    let horizon = spec.baseline.horizon();
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "landmark {t} outside [0, {horizon}]"
        )));
    }
    if subject.long_covariates.len() != spec.long_covariates.len()
        || subject.surv_covariates.len() != spec.surv_covariates.len()
    {
        return Err(Error::data(
            &subject.id,
            "covariates do not match the fitted model",
        ));
    }
    Ok(())
}

/// ln f(b, 𝒴(t), T* > t) up to a constant in b.
fn ln_posterior(
    h: &History,
    subject: &SubjectData,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
    prior: &PriorRE,
    kernel: &CopulaKernel,
) -> Result<f64> {
    let r = b.len();
    let bv = DVector::from_column_slice(b);
    let mut ll = -0.5 * (bv.dot(&(&prior.d_inv * &bv)) + prior.ln_det_d + r as f64 * LN_2PI);
    let sigma = params.sigma;
    for j in 0..h.n() {
        let zy = h.z_y(j, b, sigma);
        ll += -0.5 * (zy * zy + LN_2PI) - sigma.ln();
    }
    let hz = SubjectHazard::new(spec, params, &subject.surv_covariates, b);
    let mut clamps = 0;
    if h.n() == 0 {
        return Ok(ll - hz.cumulative(0.0, t)?);
    }
    ll -= hz.cumulative(0.0, h.times[0])?;
    for j in 0..h.n() {
        let end = if j + 1 < h.n() { h.times[j + 1] } else { t };
        let hh = hz.cumulative(h.times[j], end)?;
        if hh > 0.0 {
            ll += kernel.ln_survival_factor(hh, h.z_y(j, b, sigma), h.rho[j], &mut clamps);
        }
    }
    Ok(ll)
}

/// Mode of f(b | T* > t, 𝒴(t), w; θ) by quasi-Newton from the Gaussian
/// posterior mean of b given the responses.
pub fn empirical_bayes_mode_with(
    subject: &SubjectData,
    t: f64,
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<EbMode> {
    check_request(subject, t, spec)?;
    params.validate(spec)?;
    let h = History::new(subject, t, params, spec)?;
    let prior = PriorRE::new(&params.d)?;
    let kernel = CopulaKernel::new(spec.copula)?;
    let r = spec.r();
    let (_, post) = gaussian_parts(&h.z, &h.e, r, params.sigma, &prior)?;
    let start: Vec<f64> = post.mean.iter().copied().collect();
    let objective = |b: &[f64]| match ln_posterior(&h, subject, t, b, params, spec, &prior, &kernel)
    {
        Ok(v) => -v,
        Err(_) => f64::INFINITY,
    };
    let opts = OptimOptions {
        ftol: 1e-12,
        xtol: 1e-9,
        gtol: 1e-8,
        max_iter: 200,
        max_step: 1.0,
    };
    let res = bfgs(objective, &start, &opts);
    let ok = res.fx.is_finite() && matches!(res.status, OptimStatus::Converged);
    if ok {
        Ok(EbMode {
            b: res.x,
            converged: true,
        })
    } else {
        Ok(EbMode {
            b: start,
            converged: false,
        })
    }
}

pub fn empirical_bayes_mode(subject: &SubjectData, t: f64, fit: &FittedModel) -> Result<EbMode> {
    empirical_bayes_mode_with(subject, t, &fit.theta_hat, &fit.spec)
}

/// First-order dynamic survival probabilities π̂(u|t) for several horizons
/// sharing one b̂. Uses only measurements taken at or before `t`.
pub fn predict_survival_curve_with(
    subject: &SubjectData,
    t: f64,
    horizons: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let horizon = spec.baseline.horizon();
    if let Some(&u) = horizons.iter().find(|&&u| !(u >= t && u <= horizon)) {
        return Err(Error::InvalidArgument(format!(
            "horizon {u} must lie in [{t}, {horizon}]"
        )));
    }
    let eb = empirical_bayes_mode_with(subject, t, params, spec)?;
    let h = History::new(subject, t, params, spec)?;
    let hz = SubjectHazard::new(spec, params, &subject.surv_covariates, &eb.b);
    let kernel = CopulaKernel::new(spec.copula)?;
    let mut clamps = 0;
    let (s, zy, rho) = match h.n() {
        0 => (0.0, 0.0, 0.0),
        n => (
            h.times[n - 1],
            h.z_y(n - 1, &eb.b, params.sigma),
            h.rho[n - 1],
        ),
    };
    let (s, kernel) = if h.n() == 0 {
        (s, CopulaKernel::Independence)
    } else {
        (s, kernel)
    };
    let h_t = hz.cumulative(s, t)?;
    if h_t > H_DEAD {
        return Err(Error::Evaluation(format!(
            "subject {}: survival to the landmark underflows (H = {h_t})",
            subject.id
        )));
    }
    let ln_den = if h_t > 0.0 {
        kernel.ln_survival_factor(h_t, zy, rho, &mut clamps)
    } else {
        0.0
    };
    horizons
        .iter()
        .map(|&u| {
            if u == t {
                return Ok(1.0);
            }
            let h_u = hz.cumulative(s, u)?;
            let ln_num = kernel.ln_survival_factor(h_u, zy, rho, &mut clamps);
            if !ln_den.is_finite() {
                return Err(Error::Evaluation(format!(
                    "subject {}: denominator underflow (ln numerator {ln_num}, ln denominator {ln_den})",
                    subject.id
                )));
            }
            Ok((ln_num - ln_den).exp().clamp(0.0, 1.0))
        })
        .collect()
}

pub fn predict_survival_with(
    subject: &SubjectData,
    t: f64,
    u: f64,
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    Ok(predict_survival_curve_with(subject, t, &[u], params, spec)?[0])
}

/// π̂(u|t) for one subject under a fitted model.
pub fn predict_survival(subject: &SubjectData, t: f64, u: f64, fit: &FittedModel) -> Result<f64> {
    predict_survival_with(subject, t, u, &fit.theta_hat, &fit.spec)
}

pub fn predict_survival_curve(
    subject: &SubjectData,
    t: f64,
    horizons: &[f64],
    fit: &FittedModel,
) -> Result<Vec<f64>> {
    predict_survival_curve_with(subject, t, horizons, &fit.theta_hat, &fit.spec)
}
