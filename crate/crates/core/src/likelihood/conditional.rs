use crate::error::{Error, Result};
use crate::model::{Copula, ModelSpec, ParameterSet, SubjectData, SubjectHazard};
use crate::numerics::dist::{
    normal_cdf, normal_ln_cdf, normal_ln_pdf, normal_quantile_unchecked, StudentT,
};

/// Conditional CDFs are clamped to [U_MIN, 1 − U_MIN] before quantile
/// transforms.
pub const U_MIN: f64 = 1e-14;
/// Cumulative hazards matching the U clamp: −ln(1 − U_MIN) and −ln(U_MIN).
const H_LO: f64 = 1.000_000_000_000_000_1e-14;
const H_HI: f64 = 32.236_191_301_916_64;
/// |z| beyond which Φ(z) is not representable to full relative precision.
const Z_CAP: f64 = 37.0;

/// The conditional CDF values of one (event time, response) pair and their
/// normal / Student-t scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalUniforms {
    pub u_t: f64,
    pub u_y: f64,
    pub z_t: f64,
    pub z_y: f64,
    /// Student-t scores, present for the t copula.
    pub w_t: Option<f64>,
    pub w_y: Option<f64>,
}

#[inline]
fn clamp_h(h: f64, clamps: &mut u32) -> f64 {
    if h < H_LO {
        *clamps += 1;
        H_LO
    } else if h > H_HI {
        *clamps += 1;
        H_HI
    } else {
        h
    }
}

/// Φ⁻¹(1 − e^{−h}) evaluated from whichever tail keeps precision.
#[inline]
pub(crate) fn normal_score(h: f64, clamps: &mut u32) -> f64 {
    let h = clamp_h(h, clamps);
    if h <= std::f64::consts::LN_2 {
        normal_quantile_unchecked(-(-h).exp_m1())
    } else {
        -normal_quantile_unchecked((-h).exp())
    }
}

/// Ψ⁻¹(1 − e^{−h}; ν).
#[inline]
pub(crate) fn t_score(h: f64, dist: &StudentT<f64>, clamps: &mut u32) -> f64 {
    let h = clamp_h(h, clamps);
    if h <= std::f64::consts::LN_2 {
        dist.quantile_unchecked(-(-h).exp_m1())
    } else {
        -dist.quantile_unchecked((-h).exp())
    }
}

/// Ψ⁻¹(Φ(z); ν) by symmetry from the lower tail.
#[inline]
pub(crate) fn t_score_of_normal(z: f64, dist: &StudentT<f64>, clamps: &mut u32) -> f64 {
    let mut a = z.abs();
    if a > Z_CAP {
        *clamps += 1;
        a = Z_CAP;
    }
    let w = dist.quantile_unchecked(normal_cdf(-a));
    if z > 0.0 {
        -w
    } else {
        w
    }
}

/// Copula-specific log factors of the conditional event-time density given
/// the longitudinal response.
#[derive(Debug, Clone, Copy)]
pub enum CopulaKernel {
    Independence,
    Gaussian,
    StudentT {
        marginal: StudentT<f64>,
        conditional: StudentT<f64>,
    },
}

impl CopulaKernel {
    pub fn new(copula: Copula) -> Result<Self> {
        Ok(match copula {
            Copula::Independence => CopulaKernel::Independence,
            Copula::Gaussian => CopulaKernel::Gaussian,
            Copula::StudentT { nu } => {
                if !(nu > 2.0) {
                    return Err(Error::InvalidArgument(format!(
                        "t copula requires nu > 2, got {nu}"
                    )));
                }
                CopulaKernel::StudentT {
                    marginal: StudentT::new(nu)?,
                    conditional: StudentT::new(nu + 1.0)?,
                }
            }
        })
    }

    /// ln P(T* > t | y, b, T* > s) where `h` = H(s, t) and `z_y` is the
    /// standardized residual at s.
    #[inline]
    pub fn ln_survival_factor(&self, h: f64, z_y: f64, rho: f64, clamps: &mut u32) -> f64 {
        match self {
            CopulaKernel::Independence => -h,
            CopulaKernel::Gaussian => {
                let z_t = normal_score(h, clamps);
                normal_ln_cdf(-(z_t - rho * z_y) / (1.0 - rho * rho).sqrt())
            }
            CopulaKernel::StudentT {
                marginal,
                conditional,
            } => {
                let nu = marginal.nu();
                let w_t = t_score(h, marginal, clamps);
                let w_y = t_score_of_normal(z_y, marginal, clamps);
                let sc = ((nu + w_y * w_y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                conditional.ln_cdf(-(w_t - rho * w_y) / sc)
            }
        }
    }

    /// ln f(t | y, b, T* > s) for an event at t, with `ln_rate` = ln h(t).
    #[inline]
    pub fn ln_event_factor(
        &self,
        h: f64,
        ln_rate: f64,
        z_y: f64,
        rho: f64,
        clamps: &mut u32,
    ) -> f64 {
        let ln_f = ln_rate - h;
        match self {
            CopulaKernel::Independence => ln_f,
            CopulaKernel::Gaussian => {
                let z_t = normal_score(h, clamps);
                let one_m = 1.0 - rho * rho;
                let x = (z_t - rho * z_y) / one_m.sqrt();
                normal_ln_pdf(x) - 0.5 * one_m.ln() - normal_ln_pdf(z_t) + ln_f
            }
            CopulaKernel::StudentT {
                marginal,
                conditional,
            } => {
                let nu = marginal.nu();
                let w_t = t_score(h, marginal, clamps);
                let w_y = t_score_of_normal(z_y, marginal, clamps);
                let sc = ((nu + w_y * w_y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                let x = (w_t - rho * w_y) / sc;
                conditional.ln_pdf(x) - sc.ln() - marginal.ln_pdf(w_t) + ln_f
            }
        }
    }
}

/// Ingredients of one (s_j, t) pair for a subject at random effects b.
pub(crate) struct PairState {
    pub h: f64,
    pub ln_rate: f64,
    pub z_y: f64,
    pub rho: f64,
    pub sigma: f64,
}

pub(crate) fn pair_state(
    subject: &SubjectData,
    j: usize,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<PairState> {
    if j >= subject.n_obs() {
        return Err(Error::InvalidArgument(format!(
            "observation {j} out of range"
        )));
    }
    let s = subject.times[j];
    if t < s {
        return Err(Error::InvalidArgument(format!(
            "time {t} precedes measurement time {s}"
        )));
    }
    let mean = crate::model::linear_predictor_long(subject, j, b, params, spec)?;
    let hz = SubjectHazard::new(spec, params, &subject.surv_covariates, b);
    Ok(PairState {
        h: hz.cumulative(s, t)?,
        ln_rate: hz.ln_rate(t)?,
        z_y: (subject.y[j] - mean) / params.sigma,
        rho: params.rho_at(spec, s)?,
        sigma: params.sigma,
    })
}

/// U_t = F(t | b, T* > s) = 1 − exp(−H(s, t)).
pub fn conditional_event_cdf(
    subject: &SubjectData,
    t: f64,
    s: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    if t < s {
        return Err(Error::InvalidArgument(format!(
            "conditional CDF needs t >= s, got s={s}, t={t}"
        )));
    }
    let hz = SubjectHazard::new(spec, params, &subject.surv_covariates, b);
    Ok(-(-hz.cumulative(s, t)?).exp_m1())
}

/// U, Z and (for the t copula) W transforms of the pair (t, y_ij).
pub fn conditional_uniforms(
    subject: &SubjectData,
    j: usize,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<ConditionalUniforms> {
    let st = pair_state(subject, j, t, b, params, spec)?;
    let mut clamps = 0;
    let (w_t, w_y) = match spec.copula {
        Copula::StudentT { nu } => {
            let d = StudentT::new(nu)?;
            (
                Some(t_score(st.h, &d, &mut clamps)),
                Some(t_score_of_normal(st.z_y, &d, &mut clamps)),
            )
        }
        _ => (None, None),
    };
    Ok(ConditionalUniforms {
        u_t: -(-st.h).exp_m1(),
        u_y: normal_cdf(st.z_y),
        z_t: normal_score(st.h, &mut clamps),
        z_y: st.z_y,
        w_t,
        w_y,
    })
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Evaluation(format!(
            "copula correlation {rho} outside (-1, 1)"
        )))
    }
}

fn finish(ln_factor: f64, st: &PairState, what: &str) -> Result<f64> {
    let v = (ln_factor + normal_ln_pdf(st.z_y)).exp() / st.sigma;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation(format!(
            "{what}: non-finite density (H={}, z_y={}, rho={})",
            st.h, st.z_y, st.rho
        )))
    }
}

fn censored_pair(kernel: CopulaKernel, st: PairState) -> Result<f64> {
    check_rho(st.rho)?;
    let mut clamps = 0;
    let f = kernel.ln_survival_factor(st.h, st.z_y, st.rho, &mut clamps);
    finish(f, &st, "censored pair")
}

fn event_pair(kernel: CopulaKernel, st: PairState) -> Result<f64> {
    check_rho(st.rho)?;
    if !(st.h > 0.0) {
        return Err(Error::Evaluation(format!(
            "event pair: U_t = 0 at the event time (H={}), quantile transform undefined",
            st.h
        )));
    }
    let mut clamps = 0;
    let f = kernel.ln_event_factor(st.h, st.ln_rate, st.z_y, st.rho, &mut clamps);
    finish(f, &st, "event pair")
}

fn t_kernel(spec: &ModelSpec, params: &ParameterSet) -> Result<CopulaKernel> {
    let nu = match (spec.copula, params.nu) {
        (Copula::StudentT { nu }, _) => nu,
        (_, Some(nu)) => nu,
        _ => {
            return Err(Error::InvalidArgument(
                "t copula pair needs degrees of freedom".into(),
            ))
        }
    };
    CopulaKernel::new(Copula::StudentT { nu })
}

/// Density of {T* > t, y_ij | T* > s_ij, b} under the Gaussian copula.
pub fn censored_pair_gaussian(
    subject: &SubjectData,
    j: usize,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    censored_pair(
        CopulaKernel::Gaussian,
        pair_state(subject, j, t, b, params, spec)?,
    )
}

/// Density of {T* = t, y_in | T* > s_in, b} under the Gaussian copula, using
/// the last measurement.
pub fn event_pair_gaussian(
    subject: &SubjectData,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    let j = subject
        .n_obs()
        .checked_sub(1)
        .ok_or_else(|| Error::data(&subject.id, "no measurements"))?;
    event_pair(
        CopulaKernel::Gaussian,
        pair_state(subject, j, t, b, params, spec)?,
    )
}

/// Student-t copula analogue of [`censored_pair_gaussian`].
pub fn censored_pair_t(
    subject: &SubjectData,
    j: usize,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    censored_pair(
        t_kernel(spec, params)?,
        pair_state(subject, j, t, b, params, spec)?,
    )
}

/// Student-t copula analogue of [`event_pair_gaussian`].
pub fn event_pair_t(
    subject: &SubjectData,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    let j = subject
        .n_obs()
        .checked_sub(1)
        .ok_or_else(|| Error::data(&subject.id, "no measurements"))?;
    event_pair(
        t_kernel(spec, params)?,
        pair_state(subject, j, t, b, params, spec)?,
    )
}
