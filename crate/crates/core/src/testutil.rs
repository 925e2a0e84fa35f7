//! Fixtures shared by unit tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    AlphaStructure, BaselineHazard, Copula, ModelSpec, ParameterSet, RandomEffects, SubjectData,
    TimeTrend,
};
use crate::numerics::BSplineBasis;

pub fn spec(copula: Copula, pieces: usize) -> ModelSpec {
    ModelSpec {
        long_covariates: vec!["x1".into(), "x2".into(), "x3".into(), "x4".into()],
        surv_covariates: vec!["x1".into(), "x2".into(), "x3".into(), "x4".into()],
        time_trend: TimeTrend::Linear,
        random_effects: RandomEffects::InterceptSlope,
        alpha: AlphaStructure::Shared,
        baseline: BaselineHazard::equally_spaced(pieces, 11.0).unwrap(),
        copula,
        correlation_basis: BSplineBasis::bernstein(4, 0.0, 10.2).unwrap(),
    }
}

pub fn params(spec: &ModelSpec, eta: &[f64]) -> ParameterSet {
    ParameterSet {
        beta1: vec![10.0, -0.5, 1.0, 0.5, 0.5, 1.0],
        beta2: vec![-2.0, -1.0, -1.5, -2.0],
        alpha: vec![-0.5],
        d: DMatrix::from_row_slice(2, 2, &[2.0, -0.1, -0.1, 0.2]),
        sigma: 2.0,
        lambda: (0..spec.k()).map(|k| 0.4 + 0.05 * k as f64).collect(),
        eta: if spec.ell() > 0 { eta.to_vec() } else { vec![] },
        nu: match spec.copula {
            Copula::StudentT { nu } => Some(nu),
            _ => None,
        },
    }
}

/// Random parameter point near the simulation truth.
pub fn random_params(spec: &ModelSpec, rng: &mut impl Rng) -> ParameterSet {
    let mut p = params(spec, &[0.0; 4]);
    for v in p.beta1.iter_mut().chain(p.beta2.iter_mut()) {
        *v += rng.random_range(-0.5..0.5);
    }
    p.alpha[0] = rng.random_range(-1.0..0.5);
    let d11: f64 = rng.random_range(0.5..3.0);
    let d22: f64 = rng.random_range(0.05..0.4);
    let c = rng.random_range(-0.6..0.6) * (d11 * d22).sqrt();
    p.d = DMatrix::from_row_slice(2, 2, &[d11, c, c, d22]);
    p.sigma = rng.random_range(0.8..3.0);
    for l in &mut p.lambda {
        *l = rng.random_range(0.1..1.0);
    }
    for e in &mut p.eta {
        *e = rng.random_range(-1.5..1.5);
    }
    p
}

/// Plausible (not model-generated) subject record.
pub fn random_subject(id: usize, max_obs: usize, rng: &mut impl Rng) -> SubjectData {
    let n = rng.random_range(1..=max_obs);
    let mut times = vec![0.0];
    while times.len() < n {
        let last: f64 = *times.last().unwrap();
        times.push(last + rng.random_range(0.3..0.7_f64));
    }
    let last: f64 = *times.last().unwrap();
    let event_time = (last + rng.random_range(0.05..1.0_f64)).min(11.0);
    let cov: Vec<f64> = {
        let c = rng.random_range(0..3);
        vec![
            rng.random_range(0..2) as f64,
            rng.random_range(0..2) as f64,
            (c == 1) as u8 as f64,
            (c == 2) as u8 as f64,
        ]
    };
    let y = times
        .iter()
        .map(|s| 10.0 - 0.5 * s + rng.random_range(-3.0..3.0))
        .collect();
    SubjectData {
        id: id.to_string(),
        times,
        y,
        long_covariates: cov.clone(),
        surv_covariates: cov,
        event_time,
        event: rng.random_bool(0.5),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
