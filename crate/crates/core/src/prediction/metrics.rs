use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamic::predict_survival_with;
use crate::error::Result;
use crate::estimation::FittedModel;
use crate::model::{Dataset, ModelSpec, ParameterSet};

/// Case/control status of an at-risk subject over (t, u], as probabilities.
/// Known outcomes are 0/1; a subject censored at c ∈ (t, u] is a case with
/// probability 1 − π̂(u|c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub case: f64,
    pub control: f64,
}

impl Outcome {
    pub const CASE: Outcome = Outcome {
        case: 1.0,
        control: 0.0,
    };
    pub const CONTROL: Outcome = Outcome {
        case: 0.0,
        control: 1.0,
    };

    pub fn censored(survival_from_censoring: f64) -> Self {
        Outcome {
            case: 1.0 - survival_from_censoring,
            control: survival_from_censoring,
        }
    }
}

/// Weighted concordance: probability that a case has a lower predicted
/// survival than a control, ties counting one half. `None` when no pair
/// carries weight.
pub fn auc_from_predictions(pred: &[f64], outcomes: &[Outcome]) -> Option<f64> {
    assert_eq!(pred.len(), outcomes.len(), "one outcome per prediction");
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (pi, oi)) in pred.iter().zip(outcomes).enumerate() {
        if oi.case == 0.0 {
            continue;
        }
        for (j, (pj, oj)) in pred.iter().zip(outcomes).enumerate() {
            if i == j || oj.control == 0.0 {
                continue;
            }
            let w = oi.case * oj.control;
            let c = if pi < pj {
                1.0
            } else if pi == pj {
                0.5
            } else {
                0.0
            };
            num += w * c;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Expected Brier score over the at-risk set.
pub fn prediction_error_from_predictions(pred: &[f64], outcomes: &[Outcome]) -> Option<f64> {
    assert_eq!(pred.len(), outcomes.len(), "one outcome per prediction");
    if pred.is_empty() {
        return None;
    }
    let s: f64 = pred
        .iter()
        .zip(outcomes)
        .map(|(p, o)| o.control * (1.0 - p).powi(2) + o.case * p * p)
        .sum();
    Some(s / pred.len() as f64)
}

/// AUC(t+Δt | t) and PE(t+Δt | t) on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub t: f64,
    pub dt: f64,
    pub auc: Option<f64>,
    pub pe: Option<f64>,
    pub n_at_risk: usize,
    /// Observed events in (t, t+Δt].
    pub n_events: usize,
}

/// Predictions and outcome weights for the subjects at risk at `t`.
pub fn landmark_predictions(
    dataset: &Dataset,
    params: &ParameterSet,
    spec: &ModelSpec,
    t: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<Outcome>)> {
    landmark_predictions_by(dataset, &|_| params, spec, t, dt)
}

/// As [`landmark_predictions`] with parameters chosen per subject index,
/// e.g. leave-one-out estimates.
pub fn landmark_predictions_by<'a>(
    dataset: &Dataset,
    params_of: &(dyn Fn(usize) -> &'a ParameterSet + Sync),
    spec: &ModelSpec,
    t: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<Outcome>)> {
    let u = t + dt;
    let at_risk: Vec<usize> = (0..dataset.len())
        .filter(|&i| dataset.subjects[i].event_time > t)
        .collect();
    let rows: Vec<(f64, Outcome)> = at_risk
        .par_iter()
        .map(|&i| {
            let s = &dataset.subjects[i];
            let params = params_of(i);
            let p =
                predict_survival_with(s, t, u, params, spec).map_err(|e| e.in_subject(&s.id))?;
            let o = if s.event_time > u {
                Outcome::CONTROL
            } else if s.event {
                Outcome::CASE
            } else {
                let c = s.event_time;
                Outcome::censored(
                    predict_survival_with(s, c, u, params, spec)
                        .map_err(|e| e.in_subject(&s.id))?,
                )
            };
            Ok((p, o))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().unzip())
}

pub fn evaluate_with(
    dataset: &Dataset,
    params: &ParameterSet,
    spec: &ModelSpec,
    t: f64,
    dt: f64,
) -> Result<Metrics> {
    evaluate_by(dataset, &|_| params, spec, t, dt)
}

/// Metrics with parameters chosen per subject index.
pub fn evaluate_by<'a>(
    dataset: &Dataset,
    params_of: &(dyn Fn(usize) -> &'a ParameterSet + Sync),
    spec: &ModelSpec,
    t: f64,
    dt: f64,
) -> Result<Metrics> {
    if !(dt > 0.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "prediction window must be positive, got {dt}"
        )));
    }
    let (pred, out) = landmark_predictions_by(dataset, params_of, spec, t, dt)?;
    let n_events = dataset
        .subjects
        .iter()
        .filter(|s| s.event && s.event_time > t && s.event_time <= t + dt)
        .count();
    Ok(Metrics {
        t,
        dt,
        auc: auc_from_predictions(&pred, &out),
        pe: prediction_error_from_predictions(&pred, &out),
        n_at_risk: pred.len(),
        n_events,
    })
}

/// Both metrics for a fitted model.
pub fn evaluate(dataset: &Dataset, fit: &FittedModel, t: f64, dt: f64) -> Result<Metrics> {
    evaluate_with(dataset, &fit.theta_hat, &fit.spec, t, dt)
}

pub fn auc(dataset: &Dataset, fit: &FittedModel, t: f64, dt: f64) -> Result<Option<f64>> {
    Ok(evaluate(dataset, fit, t, dt)?.auc)
}

pub fn prediction_error(
    dataset: &Dataset,
    fit: &FittedModel,
    t: f64,
    dt: f64,
) -> Result<Option<f64>> {
    Ok(evaluate(dataset, fit, t, dt)?.pe)
}
