//! Data generation under the copula joint model and replicate summaries.

pub mod sampler;
pub mod scenario;
pub mod study;

pub use sampler::{sample_conditional_event_time, target_cumulative_hazard};
pub use scenario::{
    dropout_fraction, simulate_dataset, simulate_dataset_with_effects, simulate_subject,
    simulate_subject_with_effects, subject_rng, Scenario, ETA_DECREASING, ETA_INCREASING,
};
pub use study::{
    run_study, summarize, BandCoverage, FitTarget, ParameterSummary, ReplicateRecord,
    ReplicateSummary, StudyOptions, StudyResult,
};

use crate::error::{Error, Result};

/// Replicate indices used by calibration pilots, far from study replicates.
const PILOT_OFFSET: u64 = 1 << 48;

/// Constant baseline hazard λ₀ at which the mean censoring fraction over
/// `pilots` pilot datasets equals `target`, by bisection on ln λ₀. Pilots
/// reuse the same random streams at every λ₀, so the censoring fraction is
/// monotone in λ₀.
pub fn calibrate_baseline(scenario: &Scenario, target: f64, pilots: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&target) || pilots == 0 {
        return Err(Error::InvalidArgument(
            "calibration needs a target in [0, 1) and at least one pilot".into(),
        ));
    }
    let spec = scenario.spec(1)?;
    let censored = |lambda0: f64| -> Result<f64> {
        let mut s = scenario.clone();
        s.lambda0 = Some(lambda0);
        let truth = s.truth()?;
        let mut total = 0.0;
        for k in 0..pilots as u64 {
            let d = scenario::simulate_with(&s, &spec, &truth, PILOT_OFFSET + k)?;
            total += 1.0 - d.event_fraction();
        }
        Ok(total / pilots as f64)
    };
    let (mut lo, mut hi) = (1e-5_f64.ln(), 10f64.ln());
    if censored(lo.exp())? < target || censored(hi.exp())? > target {
        return Err(Error::Sampler(format!(
            "censoring target {target} is not reachable for lambda0 in [1e-5, 10]"
        )));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if censored(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
