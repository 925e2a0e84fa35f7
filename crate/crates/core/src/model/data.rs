use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use crate::error::{Error, Result};

/// One subject's longitudinal record and observed event time.
///
/// Covariates are baseline values; the fixed-effects design row at time s is
/// the time-trend columns followed by `long_covariates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectData {
    pub id: String,
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub long_covariates: Vec<f64>,
    pub surv_covariates: Vec<f64>,
    /// Observed time min(C, T*).
    pub event_time: f64,
    pub event: bool,
}

impl SubjectData {
    pub fn n_obs(&self) -> usize {
        self.times.len()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Checks the record invariants, and the covariate dimensions when a
    /// spec is given.
    pub fn validate(&self, spec: Option<&ModelSpec>) -> Result<()> {
        let err = |m: String| Err(Error::data(&self.id, m));
        if self.times.is_empty() {
            return err("no longitudinal measurements".into());
        }
        if self.times.len() != self.y.len() {
            return err(format!(
                "{} times but {} responses",
                self.times.len(),
                self.y.len()
            ));
        }
        if self.times[0] < 0.0 || self.times.iter().any(|s| !s.is_finite()) {
            return err("measurement times must be finite and non-negative".into());
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return err("measurement times are not strictly increasing".into());
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return err("non-finite response".into());
        }
        let last = self.times[self.times.len() - 1];
        if !(self.event_time > last) || !self.event_time.is_finite() {
            return err(format!(
                "event time {} must exceed the last measurement time {last} (jitter tied times)",
                self.event_time
            ));
        }
        if let Some(spec) = spec {
            if self.long_covariates.len() != spec.long_covariates.len() {
                return err(format!(
                    "expected {} longitudinal covariates, got {}",
                    spec.long_covariates.len(),
                    self.long_covariates.len()
                ));
            }
            if self.surv_covariates.len() != spec.surv_covariates.len() {
                return err(format!(
                    "expected {} survival covariates, got {}",
                    spec.surv_covariates.len(),
                    self.surv_covariates.len()
                ));
            }
            if self.event_time > spec.baseline.horizon() {
                return err(format!(
                    "event time {} beyond the baseline hazard horizon {}",
                    self.event_time,
                    spec.baseline.horizon()
                ));
            }
        }
        Ok(())
    }

    /// History available at landmark `t`: measurements with s ≤ t, known to
    /// be event-free up to t.
    pub fn history_at(&self, t: f64) -> SubjectData {
        let n = self.times.partition_point(|&s| s <= t);
        SubjectData {
            id: self.id.clone(),
            times: self.times[..n].to_vec(),
            y: self.y[..n].to_vec(),
            long_covariates: self.long_covariates.clone(),
            surv_covariates: self.surv_covariates.clone(),
            event_time: t,
            event: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub subjects: Vec<SubjectData>,
}

impl Dataset {
    pub fn new(subjects: Vec<SubjectData>) -> Self {
        Self { subjects }
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn validate(&self, spec: Option<&ModelSpec>) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.subjects {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::data(&s.id, "duplicate subject id"));
            }
            s.validate(spec)?;
        }
        Ok(())
    }

    /// Largest observed event/censoring time.
    pub fn max_time(&self) -> f64 {
        self.subjects
            .iter()
            .map(|s| s.event_time)
            .fold(0.0, f64::max)
    }

    pub fn event_fraction(&self) -> f64 {
        if self.subjects.is_empty() {
            return f64::NAN;
        }
        self.subjects.iter().filter(|s| s.event).count() as f64 / self.len() as f64
    }

    pub fn total_observations(&self) -> usize {
        self.subjects.iter().map(SubjectData::n_obs).sum()
    }
}
