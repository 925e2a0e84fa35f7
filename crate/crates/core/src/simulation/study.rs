use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{simulate_dataset, Scenario};
use crate::error::{Error, Result};
use crate::estimation::{correlation_band, fit, fit_from, FitOptions, FittedModel};
use crate::model::{Copula, Dataset};

/// One candidate model of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTarget {
    pub label: String,
    pub copula: Copula,
}

impl FitTarget {
    pub fn new(label: &str, copula: Copula) -> Self {
        Self {
            label: label.to_string(),
            copula,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyOptions {
    pub replicates: usize,
    pub models: Vec<FitTarget>,
    /// Baseline pieces of the fitted models.
    pub pieces: usize,
    pub fit: FitOptions,
    /// Number of equally spaced points on the correlation domain at which
    /// band coverage is recorded.
    pub band_points: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            replicates: 30,
            models: vec![
                FitTarget::new("RJM", Copula::Independence),
                FitTarget::new("GJM", Copula::Gaussian),
            ],
            pieces: 7,
            fit: FitOptions::default(),
            band_points: 50,
        }
    }
}

/// Estimates of one model on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub model: String,
    pub estimates: Vec<f64>,
    pub se: Vec<Option<f64>>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    /// Whether each band-grid point covered the true ρ(t).
    pub band_hits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    /// Replicate mean.
    pub est: f64,
    pub bias: f64,
    /// Mean model-based standard error.
    pub se: Option<f64>,
    /// Empirical standard deviation (divisor N − 1).
    pub sd: Option<f64>,
    pub rmse: f64,
    /// Coverage of est ± 1.96·SE.
    pub cp: Option<f64>,
    /// Coverage of est ± 1.96·SD.
    pub ecp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCoverage {
    pub t: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub model: String,
    pub fitted: usize,
    pub failed: usize,
    pub not_converged: usize,
    pub parameters: Vec<ParameterSummary>,
    pub band_coverage: Vec<BandCoverage>,
    pub mean_band_coverage: Option<f64>,
}

impl ReplicateSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    /// The scenario with λ₀ resolved.
    pub scenario: Scenario,
    pub summaries: Vec<ReplicateSummary>,
    pub records: Vec<ReplicateRecord>,
    /// (replicate, model, message) for fits that failed.
    pub failures: Vec<(usize, String, String)>,
}

fn band_grid(scenario: &Scenario, points: usize) -> Vec<f64> {
    let (lo, hi) = scenario.correlation_domain;
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Aggregates per-replicate estimates. `truth` lists (name, value) in
/// estimate order.
pub fn summarize(
    model: &str,
    truth: &[(String, f64)],
    records: &[&ReplicateRecord],
    grid: &[f64],
) -> ReplicateSummary {
    let n = records.len();
    let nf = n as f64;
    let parameters = truth
        .iter()
        .enumerate()
        .map(|(k, (name, tv))| {
            let vals: Vec<f64> = records.iter().map(|r| r.estimates[k]).collect();
            let est = vals.iter().sum::<f64>() / nf;
            let sd = (n > 1)
                .then(|| (vals.iter().map(|v| (v - est).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt());
            let rmse = (vals.iter().map(|v| (v - tv).powi(2)).sum::<f64>() / nf).sqrt();
            let ses: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| r.se[k].map(|s| (r.estimates[k], s)))
                .collect();
            let (se, cp) = if ses.is_empty() {
                (None, None)
            } else {
                let m = ses.len() as f64;
                let se = ses.iter().map(|x| x.1).sum::<f64>() / m;
                let cp = ses
                    .iter()
                    .filter(|(v, s)| (v - tv).abs() <= 1.96 * s)
                    .count() as f64
                    / m;
                (Some(se), Some(cp))
            };
            let ecp = sd
                .map(|sd| vals.iter().filter(|v| (*v - tv).abs() <= 1.96 * sd).count() as f64 / nf);
            ParameterSummary {
                name: name.clone(),
                truth: *tv,
                est,
                bias: est - tv,
                se,
                sd,
                rmse,
                cp,
                ecp,
            }
        })
        .collect();
    let with_band: Vec<&&ReplicateRecord> = records
        .iter()
        .filter(|r| r.band_hits.len() == grid.len())
        .collect();
    let band_coverage: Vec<BandCoverage> = if with_band.is_empty() {
        Vec::new()
    } else {
        grid.iter()
            .enumerate()
            .map(|(i, &t)| BandCoverage {
                t,
                coverage: with_band.iter().filter(|r| r.band_hits[i]).count() as f64
                    / with_band.len() as f64,
            })
            .collect()
    };
    let mean_band_coverage = (!band_coverage.is_empty()).then(|| {
        band_coverage.iter().map(|b| b.coverage).sum::<f64>() / band_coverage.len() as f64
    });
    ReplicateSummary {
        model: model.to_string(),
        fitted: n,
        failed: 0,
        not_converged: records.iter().filter(|r| !r.converged).count(),
        parameters,
        band_coverage,
        mean_band_coverage,
    }
}

fn record(
    scenario: &Scenario,
    replicate: usize,
    label: &str,
    f: &FittedModel,
    grid: &[f64],
) -> Result<ReplicateRecord> {
    let band_hits = if f.spec.ell() > 0 && f.vcov.is_some() && !grid.is_empty() {
        let truth = scenario.truth_for(&f.spec)?;
        correlation_band(f, grid)?
            .iter()
            .map(|p| {
                let rho = truth.rho_at(&f.spec, p.t)?;
                Ok(p.lower <= rho && rho <= p.upper)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(ReplicateRecord {
        replicate,
        model: label.to_string(),
        estimates: f.se.iter().map(|e| e.estimate).collect(),
        se: f.se.iter().map(|e| e.se).collect(),
        loglik: f.loglik,
        aic: f.aic,
        bic: f.bic,
        converged: f.convergence.converged,
        band_hits,
    })
}

/// Fits every target to one dataset. Copula models start from the
/// regular joint model estimate when that model is among the targets.
fn fit_replicate(
    scenario: &Scenario,
    data: &Dataset,
    replicate: usize,
    options: &StudyOptions,
    grid: &[f64],
) -> Vec<std::result::Result<ReplicateRecord, String>> {
    let mut rjm: Option<FittedModel> = None;
    let mut order: Vec<usize> = (0..options.models.len()).collect();
    order.sort_by_key(|&i| options.models[i].copula.has_correlation());
    let mut out: Vec<Option<std::result::Result<ReplicateRecord, String>>> =
        vec![None; options.models.len()];
    for i in order {
        let target = &options.models[i];
        let res = (|| -> Result<ReplicateRecord> {
            let spec = scenario.spec(options.pieces)?.with_copula(target.copula);
            let f = match (&rjm, target.copula.has_correlation()) {
                (Some(base), true) => {
                    let mut start = base.theta_hat.clone();
                    start.eta = vec![0.0; spec.ell()];
                    start.nu = match target.copula {
                        Copula::StudentT { nu } => Some(nu),
                        _ => None,
                    };
                    fit_from(data, &spec, start, &options.fit)?
                }
                _ => fit(data, &spec, &options.fit)?,
            };
            let rec = record(scenario, replicate, &target.label, &f, grid)?;
            if target.copula == Copula::Independence && rjm.is_none() {
                rjm = Some(f);
            }
            Ok(rec)
        })();
        out[i] = Some(res.map_err(|e| e.to_string()));
    }
    out.into_iter()
        .map(|r| r.expect("every target fitted"))
        .collect()
}

/// Simulates `options.replicates` datasets and fits every target model to
/// each. Replicates run in parallel; results are assembled in replicate
/// order so the output depends only on the scenario and options.
pub fn run_study(scenario: &Scenario, options: &StudyOptions) -> Result<StudyResult> {
    if options.replicates == 0 {
        return Err(Error::InvalidArgument(
            "a study needs at least one replicate".into(),
        ));
    }
    if options.models.is_empty() {
        return Err(Error::InvalidArgument(
            "a study needs at least one model".into(),
        ));
    }
    for (i, m) in options.models.iter().enumerate() {
        if options.models[..i].iter().any(|o| o.label == m.label) {
            return Err(Error::InvalidArgument(format!(
                "duplicate model label {}",
                m.label
            )));
        }
    }
    let scenario = scenario.resolved()?;
    scenario.validate()?;
    let grid = band_grid(&scenario, options.band_points);
    let per_replicate: Vec<Vec<std::result::Result<ReplicateRecord, String>>> = (0..options
        .replicates)
        .into_par_iter()
        .map(|rep| {
            let fits = match simulate_dataset(&scenario, rep as u64) {
                Ok(data) => fit_replicate(&scenario, &data, rep, options, &grid),
                Err(e) => vec![Err(e.to_string()); options.models.len()],
            };
            info!("replicate {} done", rep + 1);
            fits
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rep, fits) in per_replicate.into_iter().enumerate() {
        for (target, r) in options.models.iter().zip(fits) {
            match r {
                Ok(rec) => records.push(rec),
                Err(msg) => failures.push((rep, target.label.clone(), msg)),
            }
        }
    }
    let mut summaries = Vec::with_capacity(options.models.len());
    for target in &options.models {
        let spec = scenario.spec(options.pieces)?.with_copula(target.copula);
        let truth = scenario.truth_for(&spec)?.named_values(&spec);
        let mine: Vec<&ReplicateRecord> =
            records.iter().filter(|r| r.model == target.label).collect();
        let failed = failures.iter().filter(|f| f.1 == target.label).count();
        let mut s = if mine.is_empty() {
            ReplicateSummary {
                model: target.label.clone(),
                fitted: 0,
                failed: 0,
                not_converged: 0,
                parameters: Vec::new(),
                band_coverage: Vec::new(),
                mean_band_coverage: None,
            }
        } else {
            summarize(&target.label, &truth, &mine, &grid)
        };
        s.failed = failed;
        summaries.push(s);
    }
    Ok(StudyResult {
        scenario,
        summaries,
        records,
        failures,
    })
}
