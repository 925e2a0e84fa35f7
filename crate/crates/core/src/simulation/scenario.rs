use nalgebra::DMatrix;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampler::sample_conditional_event_time;
use crate::error::{Error, Result};
use crate::model::{
    AlphaStructure, BaselineHazard, Copula, Dataset, ModelSpec, ParameterSet, RandomEffects,
    SubjectData, SubjectHazard, TimeTrend,
};
use crate::numerics::dist::normal_quantile_unchecked;
use crate::numerics::BSplineBasis;

/// η giving an increasing correlation curve on the simulation basis.
pub const ETA_INCREASING: [f64; 4] = [0.0, 0.75, 0.65, 1.8];
/// η giving a decreasing correlation curve.
pub const ETA_DECREASING: [f64; 4] = [1.8, 0.65, 0.75, 0.0];

/// Data-generating design of a simulation study.
///
/// Every planned visit after the origin is jittered by Uniform(−jitter,
/// jitter) and recorded with probability `observation_prob`; the origin is
/// always recorded. Covariates are x1, x2 ~ Bernoulli and a categorical
/// factor dummy-coded as x3, x4 against its first level. The baseline
/// hazard is constant at `lambda0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub schedule: Vec<f64>,
    pub jitter: f64,
    pub observation_prob: f64,
    pub bernoulli_p: [f64; 2],
    pub category_probs: [f64; 3],
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub alpha: f64,
    pub d: [[f64; 2]; 2],
    pub sigma: f64,
    /// Constant baseline hazard; calibrated to `target_censoring` when absent.
    pub lambda0: Option<f64>,
    pub target_censoring: f64,
    pub eta: Vec<f64>,
    pub copula: Copula,
    /// Interval of the order-4 correlation basis with no interior knots.
    pub correlation_domain: (f64, f64),
    pub censoring_rate: f64,
    pub admin_end: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n: 200,
            schedule: (0..=20).map(|k| 0.5 * k as f64).collect(),
            jitter: 0.2,
            observation_prob: 0.9,
            bernoulli_p: [0.5, 0.5],
            category_probs: [0.3, 0.5, 0.2],
            beta1: vec![10.0, -0.5, 1.0, 0.5, 0.5, 1.0],
            beta2: vec![-2.0, -1.0, -1.5, -2.0],
            alpha: -0.5,
            d: [[2.0, -0.1], [-0.1, 0.2]],
            sigma: 2.0,
            lambda0: None,
            target_censoring: 0.5,
            eta: ETA_INCREASING.to_vec(),
            copula: Copula::Gaussian,
            correlation_domain: (0.0, 10.2),
            censoring_rate: 0.011,
            admin_end: 11.0,
            seed: 1,
        }
    }
}

const COVARIATES: [&str; 4] = ["x1", "x2", "x3", "x4"];

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("scenario: {m}")));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.schedule.first() != Some(&0.0) {
            return bad("schedule must start at the origin 0");
        }
        if self
            .schedule
            .windows(2)
            .any(|w| w[1] - w[0] <= 2.0 * self.jitter)
        {
            return bad("schedule must be strictly increasing with gaps above twice the jitter");
        }
        if !(self.jitter >= 0.0) {
            return bad("jitter must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.observation_prob) {
            return bad("observation_prob must lie in [0, 1]");
        }
        if !(self.censoring_rate > 0.0) {
            return bad("censoring rate must be positive");
        }
        if self
            .schedule
            .last()
            .is_some_and(|&t| t + self.jitter >= self.admin_end)
        {
            return bad("planned visits must end before the administrative end");
        }
        if self.bernoulli_p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("Bernoulli probabilities must lie in [0, 1]");
        }
        if self.category_probs.iter().any(|p| !(*p >= 0.0))
            || (self.category_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("category probabilities must be nonnegative and sum to 1");
        }
        if self.lambda0.is_some_and(|l| !(l > 0.0)) {
            return bad("lambda0 must be positive");
        }
        if !(0.0..1.0).contains(&self.target_censoring) {
            return bad("target censoring must lie in [0, 1)");
        }
        if self.copula.has_correlation() && self.eta.len() != 4 {
            return bad("eta must have 4 entries");
        }
        self.spec(1)?;
        self.truth_with(1e-3)?.validate(&self.spec(1)?)
    }

    /// Model specification with the generating sub-models, copula family
    /// and `pieces` equal baseline pieces on [0, admin_end].
    pub fn spec(&self, pieces: usize) -> Result<ModelSpec> {
        Ok(ModelSpec {
            long_covariates: COVARIATES.iter().map(|s| s.to_string()).collect(),
            surv_covariates: COVARIATES.iter().map(|s| s.to_string()).collect(),
            time_trend: TimeTrend::Linear,
            random_effects: RandomEffects::InterceptSlope,
            alpha: AlphaStructure::Shared,
            baseline: BaselineHazard::equally_spaced(pieces, self.admin_end)?,
            copula: self.copula,
            correlation_basis: BSplineBasis::bernstein(
                4,
                self.correlation_domain.0,
                self.correlation_domain.1,
            )?,
        })
    }

    fn truth_with(&self, lambda0: f64) -> Result<ParameterSet> {
        Ok(ParameterSet {
            beta1: self.beta1.clone(),
            beta2: self.beta2.clone(),
            alpha: vec![self.alpha],
            d: DMatrix::from_row_slice(
                2,
                2,
                &[self.d[0][0], self.d[0][1], self.d[1][0], self.d[1][1]],
            ),
            sigma: self.sigma,
            lambda: vec![lambda0],
            eta: if self.copula.has_correlation() {
                self.eta.clone()
            } else {
                Vec::new()
            },
            nu: match self.copula {
                Copula::StudentT { nu } => Some(nu),
                _ => None,
            },
        })
    }

    /// Generating parameters (one baseline piece). Fails if λ₀ has not been
    /// set or calibrated.
    pub fn truth(&self) -> Result<ParameterSet> {
        let l = self.lambda0.ok_or_else(|| {
            Error::InvalidArgument("scenario baseline hazard is not calibrated".into())
        })?;
        self.truth_with(l)
    }

    /// True values in the parameterization of a fitted model: λ₀ repeated
    /// over the fitted pieces, η and ν only where the fitted model has them.
    pub fn truth_for(&self, fit_spec: &ModelSpec) -> Result<ParameterSet> {
        let mut p = self.truth()?;
        p.lambda = vec![p.lambda[0]; fit_spec.k()];
        p.eta = if fit_spec.ell() > 0 {
            if self.eta.len() != fit_spec.ell() {
                return Err(Error::InvalidArgument(
                    "fitted correlation basis differs from the generating one".into(),
                ));
            }
            self.eta.clone()
        } else {
            Vec::new()
        };
        p.nu = match fit_spec.copula {
            Copula::StudentT { nu } => Some(nu),
            _ => None,
        };
        Ok(p)
    }

    /// Fills in λ₀ by calibration when it is absent.
    pub fn resolved(&self) -> Result<Scenario> {
        let mut s = self.clone();
        if s.lambda0.is_none() {
            s.lambda0 = Some(super::calibrate_baseline(self, self.target_censoring, 10)?);
        }
        Ok(s)
    }
}

/// Independent random stream for one subject of one replicate.
pub fn subject_rng(seed: u64, replicate: u64, subject: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    key[16..24].copy_from_slice(&subject.to_le_bytes());
    key[24..].copy_from_slice(b"copjmsim");
    ChaCha8Rng::from_seed(key)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub(crate) fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn std_normal(rng: &mut impl RngCore) -> f64 {
    normal_quantile_unchecked(open_uniform(rng))
}

/// Generates one subject under `truth` (baseline on one piece over
/// [0, admin_end]). Each interval between recorded visits draws a
/// candidate event time conditional on the latest recorded response.
pub fn simulate_subject(
    scenario: &Scenario,
    spec: &ModelSpec,
    truth: &ParameterSet,
    id: String,
    rng: &mut impl RngCore,
) -> Result<SubjectData> {
    simulate_subject_with_effects(scenario, spec, truth, id, rng).map(|(s, _)| s)
}

/// As [`simulate_subject`], also returning the drawn random effects b.
pub fn simulate_subject_with_effects(
    scenario: &Scenario,
    spec: &ModelSpec,
    truth: &ParameterSet,
    id: String,
    rng: &mut impl RngCore,
) -> Result<(SubjectData, Vec<f64>)> {
    let x1 = (open_uniform(rng) < scenario.bernoulli_p[0]) as u8 as f64;
    let x2 = (open_uniform(rng) < scenario.bernoulli_p[1]) as u8 as f64;
    let c = open_uniform(rng);
    let cat = if c < scenario.category_probs[0] {
        0
    } else if c < scenario.category_probs[0] + scenario.category_probs[1] {
        1
    } else {
        2
    };
    let cov = vec![x1, x2, (cat == 1) as u8 as f64, (cat == 2) as u8 as f64];
    let chol = truth
        .d
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameters("D is not positive definite".into()))?;
    let e = [std_normal(rng), std_normal(rng)];
    let l = chol.l();
    let b = [l[(0, 0)] * e[0], l[(1, 0)] * e[0] + l[(1, 1)] * e[1]];

    let mut visits = vec![0.0];
    for &t in &scenario.schedule[1..] {
        let shift = scenario.jitter * (2.0 * open_uniform(rng) - 1.0);
        if open_uniform(rng) < scenario.observation_prob {
            visits.push(t + shift);
        }
    }

    let hz = SubjectHazard::new(spec, truth, &cov, &b);
    let mut row = Vec::with_capacity(spec.p());
    let mut times = Vec::with_capacity(visits.len());
    let mut y = Vec::with_capacity(visits.len());
    let mut event_time = f64::INFINITY;
    for (j, &s) in visits.iter().enumerate() {
        spec.design_row(s, &cov, &mut row)?;
        let mean: f64 = row
            .iter()
            .zip(&truth.beta1)
            .map(|(a, c)| a * c)
            .sum::<f64>()
            + b[0]
            + b[1] * s;
        let eps = std_normal(rng);
        times.push(s);
        y.push(mean + truth.sigma * eps);
        let rho = truth.rho_at(spec, s)?;
        let u = open_uniform(rng);
        let t = sample_conditional_event_time(&hz, s, eps, rho, spec.copula, u)
            .map_err(|e| e.in_subject(&id))?;
        let next = visits.get(j + 1).copied().unwrap_or(f64::INFINITY);
        if t <= next {
            event_time = t;
            break;
        }
    }
    let censor = -open_uniform(rng).ln() / scenario.censoring_rate;
    let end = censor.min(scenario.admin_end);
    let (obs_time, event) = if event_time <= end {
        (event_time, true)
    } else {
        (end, false)
    };
    let keep = times.partition_point(|&s| s < obs_time);
    times.truncate(keep);
    y.truncate(keep);
    let subject = SubjectData {
        id,
        times,
        y,
        long_covariates: cov.clone(),
        surv_covariates: cov,
        event_time: obs_time,
        event,
    };
    Ok((subject, b.to_vec()))
}

/// Dataset for one replicate; subjects use independent streams so the
/// result does not depend on generation order.
pub fn simulate_dataset(scenario: &Scenario, replicate: u64) -> Result<Dataset> {
    simulate_dataset_with_effects(scenario, replicate).map(|(d, _)| d)
}

/// Dataset for one replicate with the random effects of each subject.
pub fn simulate_dataset_with_effects(
    scenario: &Scenario,
    replicate: u64,
) -> Result<(Dataset, Vec<Vec<f64>>)> {
    let truth = scenario.truth()?;
    let spec = scenario.spec(1)?;
    simulate_with_effects(scenario, &spec, &truth, replicate)
}

pub(crate) fn simulate_with(
    scenario: &Scenario,
    spec: &ModelSpec,
    truth: &ParameterSet,
    replicate: u64,
) -> Result<Dataset> {
    simulate_with_effects(scenario, spec, truth, replicate).map(|(d, _)| d)
}

fn simulate_with_effects(
    scenario: &Scenario,
    spec: &ModelSpec,
    truth: &ParameterSet,
    replicate: u64,
) -> Result<(Dataset, Vec<Vec<f64>>)> {
    use rayon::prelude::*;
    let (subjects, effects) = (0..scenario.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = subject_rng(scenario.seed, replicate, i as u64);
            simulate_subject_with_effects(scenario, spec, truth, (i + 1).to_string(), &mut rng)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok((Dataset::new(subjects), effects))
}

/// Fraction of subjects whose follow-up ends before the last planned visit.
pub fn dropout_fraction(scenario: &Scenario, data: &Dataset) -> f64 {
    let last = *scenario.schedule.last().unwrap_or(&0.0);
    if data.is_empty() {
        return 0.0;
    }
    data.subjects.iter().filter(|s| s.event_time < last).count() as f64 / data.len() as f64
}
