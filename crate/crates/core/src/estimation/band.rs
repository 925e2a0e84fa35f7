use super::fit::FittedModel;
use crate::error::{Error, Result};
use crate::model::BandPoint;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Pointwise 95% bands for ρ(t) on `t_grid`, built on the Fisher-z scale.
pub fn correlation_band(fit: &FittedModel, t_grid: &[f64]) -> Result<Vec<BandPoint<f64>>> {
    let curve = fit
        .theta_hat
        .curve(&fit.spec)
        .ok_or_else(|| Error::InvalidArgument("model has no correlation curve".into()))?;
    let cov = fit
        .eta_covariance()
        .ok_or_else(|| Error::Unavailable("fit has no covariance matrix".into()))?;
    let curve = curve.with_covariance(cov)?;
    let (lo, hi) = curve.basis.domain();
    t_grid
        .iter()
        .map(|&t| {
            if !(lo..=hi).contains(&t) {
                return Err(Error::InvalidArgument(format!(
                    "t = {t} is outside [{lo}, {hi}]"
                )));
            }
            Ok(curve.band(t, Z_95)?)
        })
        .collect()
}
