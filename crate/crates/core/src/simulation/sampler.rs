use crate::error::{Error, Result};
use crate::likelihood::conditional::t_score_of_normal;
use crate::model::{Copula, SubjectHazard};
use crate::numerics::dist::{normal_ln_cdf, normal_upper_quantile_unchecked, StudentT};

/// Marginal cumulative hazard H(s, t*) that puts the conditional survival
/// probability of T* given y at `u`.
pub fn target_cumulative_hazard(z_y: f64, rho: f64, copula: Copula, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "uniform draw must lie in (0,1), got {u}"
        )));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "copula correlation must lie in (-1,1), got {rho}"
        )));
    }
    Ok(match copula {
        Copula::Independence => -u.ln(),
        Copula::Gaussian => {
            let z_t = rho * z_y + (1.0 - rho * rho).sqrt() * normal_upper_quantile_unchecked(u);
            -normal_ln_cdf(-z_t)
        }
        Copula::StudentT { nu } => {
            let marginal = StudentT::new(nu)?;
            let conditional = StudentT::new(nu + 1.0)?;
            let mut clamps = 0;
            let w_y = t_score_of_normal(z_y, &marginal, &mut clamps);
            let sc = ((nu + w_y * w_y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
            let w_t = rho * w_y + sc * conditional.upper_quantile_unchecked(u);
            -marginal.ln_cdf(-w_t)
        }
    })
}

/// Draws T* given T* > s, the standardized residual `z_y` at s and the
/// random effects folded into `hazard`, by inverting the conditional
/// survival function at `u`. Returns +∞ when the draw falls beyond the
/// hazard horizon.
pub fn sample_conditional_event_time(
    hazard: &SubjectHazard<'_>,
    s: f64,
    z_y: f64,
    rho: f64,
    copula: Copula,
    u: f64,
) -> Result<f64> {
    let h = target_cumulative_hazard(z_y, rho, copula, u)?;
    if !(h >= 0.0) {
        return Err(Error::Sampler(format!(
            "no cumulative-hazard target (s={s}, z_y={z_y}, rho={rho}, u={u}, copula={})",
            copula.label()
        )));
    }
    match hazard.invert(s, h) {
        Ok(Some(t)) if t > s => Ok(t),
        // a vanishing target rounds onto s
        Ok(Some(_)) => Ok(s + f64::EPSILON * s.max(1.0)),
        Ok(None) => Ok(f64::INFINITY),
        Err(e) => Err(Error::Sampler(format!(
            "hazard inversion failed (s={s}, z_y={z_y}, rho={rho}, u={u}, target={h}): {e}"
        ))),
    }
}
