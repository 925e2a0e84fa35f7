use serde::{Deserialize, Serialize};

use super::fit::{fit_from, FitOptions, FittedModel};
use super::init::initialize_with;
use crate::error::{Error, Result};
use crate::model::{Copula, Dataset, ModelSpec};
use crate::numerics::special::gamma_q;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatio {
    /// 2·(loglik_b − loglik_a).
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// AIC(a) − AIC(b); positive favours b.
    pub delta_aic: f64,
    pub delta_bic: f64,
    pub lrt: Option<LikelihoodRatio>,
}

/// Whether `a` is `b` with the copula switched off (or the same model). The
/// correlation basis is irrelevant under independence.
fn nested(a: &FittedModel, b: &FittedModel) -> bool {
    if a.n_subjects != b.n_subjects {
        return false;
    }
    if a.spec == b.spec {
        return true;
    }
    let mut reduced = b.spec.with_copula(Copula::Independence);
    reduced.correlation_basis = a.spec.correlation_basis.clone();
    a.spec.copula == Copula::Independence && reduced == a.spec
}

/// Information criteria differences, with the likelihood-ratio test when
/// `a` is nested in `b`.
pub fn compare(a: &FittedModel, b: &FittedModel) -> Comparison {
    Comparison {
        delta_aic: a.aic - b.aic,
        delta_bic: a.bic - b.bic,
        lrt: likelihood_ratio_test(a, b).ok(),
    }
}

/// χ² test of `a` (null) against `b` on dim(b) − dim(a) degrees of freedom.
pub fn likelihood_ratio_test(a: &FittedModel, b: &FittedModel) -> Result<LikelihoodRatio> {
    if !nested(a, b) {
        return Err(Error::InvalidArgument(
            "likelihood-ratio test needs the first model nested in the second".into(),
        ));
    }
    let df = b.dim - a.dim;
    let statistic = 2.0 * (b.loglik - a.loglik);
    let p_value = if df == 0 {
        1.0
    } else {
        gamma_q(0.5 * df as f64, 0.5 * statistic.max(0.0))
    };
    Ok(LikelihoodRatio {
        statistic,
        df,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub nu: f64,
    pub loglik: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TProfile {
    pub points: Vec<ProfilePoint>,
    pub best_nu: Option<f64>,
    pub best: Option<FittedModel>,
}

/// Refits the t-copula model at each ν in `df_grid`, warm-starting each fit
/// from the previous estimate. Failed grid points are recorded and skipped.
pub fn profile_t_df(
    dataset: &Dataset,
    spec: &ModelSpec,
    df_grid: &[f64],
    options: &FitOptions,
) -> Result<TProfile> {
    if df_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "empty degrees-of-freedom grid".into(),
        ));
    }
    if let Some(bad) = df_grid.iter().find(|&&v| !(v > 2.0) || v.fract() != 0.0) {
        return Err(Error::InvalidArgument(format!(
            "degrees of freedom must be integers above 2, got {bad}"
        )));
    }
    let first = spec.with_copula(Copula::StudentT { nu: df_grid[0] });
    let mut start = initialize_with(dataset, &first, options.quad, options.init_iterations)?;
    let mut points = Vec::with_capacity(df_grid.len());
    let mut best: Option<FittedModel> = None;
    for &nu in df_grid {
        let s = spec.with_copula(Copula::StudentT { nu });
        start.nu = Some(nu);
        match fit_from(dataset, &s, start.clone(), options) {
            Ok(f) => {
                points.push(ProfilePoint {
                    nu,
                    loglik: Some(f.loglik),
                    error: None,
                });
                start = f.theta_hat.clone();
                if best.as_ref().is_none_or(|b| f.loglik > b.loglik) {
                    best = Some(f);
                }
            }
            Err(e) => points.push(ProfilePoint {
                nu,
                loglik: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(TProfile {
        points,
        best_nu: best.as_ref().map(|b| b.theta_hat.nu.unwrap_or(f64::NAN)),
        best,
    })
}
