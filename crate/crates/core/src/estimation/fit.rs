use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::init::{initialize_with, DEFAULT_INIT_ITERATIONS};
use super::optim::{bfgs, nelder_mead, OptimOptions, OptimResult, OptimStatus};
use super::transform::{dim, natural_jacobian, pack, unpack};
use crate::error::{Error, Result};
use crate::likelihood::{Likelihood, DEFAULT_QUAD_NODES};
use crate::model::params::opt_matrix_rows;
use crate::model::{CorrelationCurve, Dataset, ModelSpec, ParameterSet};
use crate::numerics::numeric_hessian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    NelderMead,
    QuasiNewton,
    /// Quasi-Newton followed by a Nelder–Mead polish.
    #[default]
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub optimizer: Optimizer,
    /// Gauss–Hermite nodes per random-effect dimension.
    pub quad: usize,
    /// Absolute log-likelihood change for convergence.
    pub tol: f64,
    /// Parameter change for convergence (unconstrained scale).
    pub xtol: f64,
    pub max_iter: usize,
    pub init_iterations: usize,
    /// Skip the Hessian when only point estimates are needed.
    pub compute_vcov: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Hybrid,
            quad: DEFAULT_QUAD_NODES,
            tol: 1e-6,
            xtol: 1e-5,
            max_iter: 2000,
            init_iterations: DEFAULT_INIT_ITERATIONS,
            compute_vcov: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub status: OptimStatus,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub gradient_norm: Option<f64>,
    pub simplex_size: Option<f64>,
}

/// Natural-scale estimate with its delta-method standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub theta_hat: ParameterSet,
    /// θ̂ on the unconstrained scale.
    pub theta_packed: Vec<f64>,
    /// Inverse observed information on the unconstrained scale.
    #[serde(with = "opt_matrix_rows")]
    pub vcov: Option<DMatrix<f64>>,
    pub se: Vec<Estimate>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub dim: usize,
    pub n_subjects: usize,
    pub convergence: Convergence,
    pub quad_nodes: usize,
    /// Conditional CDF values clamped at θ̂.
    pub clamps: u64,
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.se.iter().find(|e| e.name == name)
    }

    /// Covariance of η̂ (η is not transformed, so this is a block of vcov).
    pub fn eta_covariance(&self) -> Option<DMatrix<f64>> {
        let ell = self.spec.ell();
        let v = self.vcov.as_ref()?;
        let o = self.dim - ell;
        Some(v.view((o, o), (ell, ell)).into_owned())
    }

    /// Fitted correlation curve, with the η̂ covariance when available.
    pub fn curve(&self) -> Option<CorrelationCurve<f64>> {
        let c = self.theta_hat.curve(&self.spec)?;
        match self.eta_covariance() {
            Some(cov) => c.with_covariance(cov).ok(),
            None => Some(c),
        }
    }
}

/// Fits from the default starting values.
pub fn fit(dataset: &Dataset, spec: &ModelSpec, options: &FitOptions) -> Result<FittedModel> {
    let start = initialize_with(dataset, spec, options.quad, options.init_iterations)?;
    fit_from(dataset, spec, start, options)
}

/// Fits from caller-supplied starting values.
pub fn fit_from(
    dataset: &Dataset,
    spec: &ModelSpec,
    start: ParameterSet,
    options: &FitOptions,
) -> Result<FittedModel> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot fit an empty dataset".into()));
    }
    if options.quad == 0 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least one node".into(),
        ));
    }
    let lik = Likelihood::for_dataset(dataset, spec, options.quad)?;
    let x0 = pack(&start, spec)?;
    let objective = |v: &[f64]| match unpack(v, spec).and_then(|p| lik.total(&p)) {
        Ok(e) => -e.loglik,
        Err(_) => f64::INFINITY,
    };
    let opts = OptimOptions {
        ftol: options.tol,
        xtol: options.xtol,
        max_iter: options.max_iter,
        ..Default::default()
    };
    let (res, convergence) = match options.optimizer {
        Optimizer::QuasiNewton => {
            let r = bfgs(objective, &x0, &opts);
            let c = convergence_of(&r, true, r.iterations, r.evaluations);
            (r, c)
        }
        Optimizer::NelderMead => {
            let r = nelder_mead(objective, &x0, 0.1, &opts);
            let c = convergence_of(&r, false, r.iterations, r.evaluations);
            (r, c)
        }
        Optimizer::Hybrid => {
            let q = bfgs(objective, &x0, &opts);
            debug!(
                "quasi-Newton: {:?} after {} iterations, -ll {}",
                q.status, q.iterations, q.fx
            );
            let left = OptimOptions {
                max_iter: opts.max_iter.saturating_sub(q.iterations).max(1),
                ..opts
            };
            let nm = nelder_mead(objective, &q.x, 1e-4, &left);
            let mut c = convergence_of(
                &nm,
                false,
                q.iterations + nm.iterations,
                q.evaluations + nm.evaluations,
            );
            c.gradient_norm = Some(q.measure);
            c.converged = q.status == OptimStatus::Converged || nm.status == OptimStatus::Converged;
            if !c.converged {
                c.status = nm.status;
            } else if nm.status != OptimStatus::Converged {
                c.status = OptimStatus::Converged;
            }
            let best = if nm.fx <= q.fx { nm } else { q };
            (best, c)
        }
    };
    if !res.fx.is_finite() {
        return Err(Error::Evaluation(
            "log-likelihood is not finite at the starting values".into(),
        ));
    }
    let theta = unpack(&res.x, spec)?;
    let eval = lik.total(&theta)?;
    let mut warnings = Vec::new();
    if !convergence.converged {
        warnings.push(format!(
            "optimizer stopped without converging ({:?})",
            convergence.status
        ));
    }
    let d = dim(spec);
    let vcov = if options.compute_vcov {
        match numeric_hessian(objective, &res.x, None) {
            Ok(h) => match h.clone().cholesky() {
                Some(ch) => {
                    let v = ch.inverse();
                    Some((&v + v.transpose()) * 0.5)
                }
                None => {
                    warnings.push("Hessian is not positive definite; no covariance matrix".into());
                    None
                }
            },
            Err(e) => {
                warnings.push(format!("Hessian evaluation failed: {e}"));
                None
            }
        }
    } else {
        None
    };
    for w in &warnings {
        warn!("{w}");
    }
    let natural_se = match &vcov {
        Some(v) => {
            let j = natural_jacobian(&res.x, spec)?;
            let cov = &j * v * j.transpose();
            cov.diagonal()
                .iter()
                .map(|&x| Some(x.max(0.0).sqrt()))
                .collect()
        }
        None => vec![None; d],
    };
    let se = theta
        .named_values(spec)
        .into_iter()
        .zip(natural_se)
        .map(|((name, estimate), se)| Estimate { name, estimate, se })
        .collect();
    let n = dataset.len();
    Ok(FittedModel {
        spec: spec.clone(),
        theta_hat: theta,
        theta_packed: res.x,
        vcov,
        se,
        loglik: eval.loglik,
        aic: -2.0 * eval.loglik + 2.0 * d as f64,
        bic: -2.0 * eval.loglik + (n as f64).ln() * d as f64,
        dim: d,
        n_subjects: n,
        convergence,
        quad_nodes: options.quad,
        clamps: eval.clamps,
        warnings,
    })
}

fn convergence_of(
    r: &OptimResult,
    gradient: bool,
    iterations: usize,
    evaluations: usize,
) -> Convergence {
    Convergence {
        status: r.status,
        converged: r.status == OptimStatus::Converged,
        iterations,
        evaluations,
        gradient_norm: gradient.then_some(r.measure),
        simplex_size: (!gradient).then_some(r.measure),
    }
}
