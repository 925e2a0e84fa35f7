use rand::Rng;

use super::*;
use crate::likelihood::posterior_re;
use crate::model::{Copula, RandomEffects, SubjectData, SubjectHazard};
use crate::testutil;

fn subject(rng: &mut impl Rng, id: usize) -> SubjectData {
    testutil::random_subject(id, 8, rng)
}

#[test]
fn landmark_identity_and_monotone() {
    let mut rng = testutil::rng(21);
    for copula in [
        Copula::Independence,
        Copula::Gaussian,
        Copula::StudentT { nu: 4.0 },
    ] {
        let spec = testutil::spec(copula, 5);
        for i in 0..30 {
            let p = testutil::random_params(&spec, &mut rng);
            let s = subject(&mut rng, i);
            let t = s.last_time().unwrap() + rng.random_range(0.0..0.5);
            let grid: Vec<f64> = (0..=20).map(|k| t + k as f64 * 0.25).collect();
            let pi = predict_survival_curve_with(&s, t, &grid, &p, &spec).unwrap();
            assert_eq!(pi[0], 1.0);
            assert!(pi.windows(2).all(|w| w[1] <= w[0]), "{copula:?}: {pi:?}");
            assert!(pi.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn zero_correlation_reduces_to_hazard_ratio() {
    let mut rng = testutil::rng(22);
    let spec = testutil::spec(Copula::Gaussian, 5);
    for i in 0..30 {
        let p = testutil::random_params(&spec, &mut rng);
        let p = crate::ParameterSet {
            eta: vec![0.0; 4],
            ..p
        };
        let s = subject(&mut rng, i);
        let t = s.last_time().unwrap() + 0.3;
        let u = t + rng.random_range(0.1..2.0);
        let pi = predict_survival_with(&s, t, u, &p, &spec).unwrap();
        let b = empirical_bayes_mode_with(&s, t, &p, &spec).unwrap().b;
        let hz = SubjectHazard::new(&spec, &p, &s.surv_covariates, &b);
        let want = (-hz.cumulative(t, u).unwrap()).exp();
        assert!((pi - want).abs() < 1e-10, "{pi} vs {want}");
    }
}

#[test]
fn eb_mode_special_cases() {
    let mut rng = testutil::rng(23);
    let spec = testutil::spec(Copula::Independence, 5);
    let mut p = testutil::params(&spec, &[]);
    p.alpha = vec![0.0];
    let s = subject(&mut rng, 0);
    let t = s.last_time().unwrap() + 0.1;
    let eb = empirical_bayes_mode_with(&s, t, &p, &spec).unwrap();
    assert!(eb.converged);
    let post = posterior_re(&s, &p, &spec).unwrap();
    for (a, b) in eb.b.iter().zip(post.mean.iter()) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
    // landmark before the first measurement: no data, prior mode
    let mut late = s.clone();
    for v in &mut late.times {
        *v += 1.0;
    }
    late.event_time += 1.0;
    let eb = empirical_bayes_mode_with(&late, 0.5, &p, &spec).unwrap();
    assert!(eb.b.iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn eb_mode_matches_grid_argmax() {
    let mut rng = testutil::rng(24);
    let mut spec = testutil::spec(Copula::Gaussian, 5);
    spec.random_effects = RandomEffects::Intercept;
    for i in 0..10 {
        let mut p = testutil::random_params(&spec, &mut rng);
        p.d = nalgebra::DMatrix::from_element(1, 1, rng.random_range(0.5..3.0));
        let s = subject(&mut rng, i);
        let t = s.last_time().unwrap() + 0.4;
        let eb = empirical_bayes_mode_with(&s, t, &p, &spec).unwrap();
        // ln f(b, history, T* > t) on a grid: prior, responses and the
        // survival factors, built from the public likelihood pieces
        let hist = SubjectData {
            event_time: t,
            event: false,
            ..s.clone()
        };
        let f = |b: f64| {
            let y: f64 = (0..hist.n_obs())
                .map(|j| {
                    let m = crate::model::linear_predictor_long(&hist, j, &[b], &p, &spec).unwrap();
                    let z = (hist.y[j] - m) / p.sigma;
                    -0.5 * z * z
                })
                .sum();
            -0.5 * b * b / p.d[(0, 0)]
                + y
                + crate::likelihood::ln_conditional_event_density_given_y(&hist, &[b], &p, &spec)
                    .unwrap()
        };
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        let mut b = -8.0;
        while b <= 8.0 {
            let v = f(b);
            if v > best {
                best = v;
                arg = b;
            }
            b += 1e-4;
        }
        assert!((eb.b[0] - arg).abs() < 1e-3, "{} vs {arg}", eb.b[0]);
    }
}

#[test]
fn independence_ignores_residual_at_fixed_mode() {
    let mut rng = testutil::rng(25);
    let spec = testutil::spec(Copula::Independence, 5);
    let mut p = testutil::params(&spec, &[]);
    p.alpha = vec![0.0];
    let s = subject(&mut rng, 0);
    let t = s.last_time().unwrap() + 0.2;
    let a = predict_survival_with(&s, t, t + 1.0, &p, &spec).unwrap();
    let mut s2 = s.clone();
    *s2.y.last_mut().unwrap() += 3.0;
    let b = predict_survival_with(&s2, t, t + 1.0, &p, &spec).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn request_errors() {
    let mut rng = testutil::rng(26);
    let spec = testutil::spec(Copula::Gaussian, 5);
    let p = testutil::params(&spec, &[0.1, 0.2, 0.3, 0.4]);
    let s = subject(&mut rng, 0);
    assert!(predict_survival_with(&s, 2.0, 1.0, &p, &spec).is_err());
    assert!(predict_survival_with(&s, 2.0, 12.0, &p, &spec).is_err());
    let mut bad = s.clone();
    bad.surv_covariates.pop();
    assert!(predict_survival_with(&bad, 1.0, 2.0, &p, &spec).is_err());
}

#[test]
fn auc_and_pe_sanity() {
    let out = [
        Outcome::CASE,
        Outcome::CASE,
        Outcome::CONTROL,
        Outcome::CONTROL,
    ];
    assert_eq!(auc_from_predictions(&[0.1, 0.2, 0.8, 0.9], &out), Some(1.0));
    assert_eq!(auc_from_predictions(&[0.9, 0.8, 0.2, 0.1], &out), Some(0.0));
    assert_eq!(auc_from_predictions(&[0.5; 4], &out), Some(0.5));
    assert_eq!(
        auc_from_predictions(&[0.5; 2], &[Outcome::CONTROL; 2]),
        None
    );
    let mut rng = testutil::rng(27);
    let pred: Vec<f64> = (0..500).map(|_| rng.random()).collect();
    let outs: Vec<Outcome> = (0..500)
        .map(|_| match rng.random_range(0..3) {
            0 => Outcome::CASE,
            1 => Outcome::CONTROL,
            _ => Outcome::censored(rng.random()),
        })
        .collect();
    let a = auc_from_predictions(&pred, &outs).unwrap();
    let cubed: Vec<f64> = pred.iter().map(|v| v.powi(3) - 2.0).collect();
    assert_eq!(auc_from_predictions(&cubed, &outs).unwrap(), a);

    let all = vec![Outcome::CONTROL; 10];
    assert_eq!(
        prediction_error_from_predictions(&[1.0; 10], &all),
        Some(0.0)
    );
    assert_eq!(
        prediction_error_from_predictions(&[0.5; 10], &all),
        Some(0.25)
    );
    assert_eq!(prediction_error_from_predictions(&[], &[]), None);
    // best constant predictor on censor-free data is the survival fraction
    let outs: Vec<Outcome> = (0..40)
        .map(|i| {
            if i % 4 == 0 {
                Outcome::CASE
            } else {
                Outcome::CONTROL
            }
        })
        .collect();
    let pe = |c: f64| prediction_error_from_predictions(&vec![c; 40], &outs).unwrap();
    for c in [0.5, 0.7, 0.74, 0.76, 0.8, 1.0] {
        assert!(pe(0.75) <= pe(c));
    }
}

#[test]
fn dataset_metrics_are_deterministic() {
    let mut rng = testutil::rng(28);
    let spec = testutil::spec(Copula::Gaussian, 5);
    let p = testutil::params(&spec, &[0.0, 0.75, 0.65, 1.8]);
    let data = crate::Dataset::new((0..60).map(|i| subject(&mut rng, i)).collect());
    let a = evaluate_with(&data, &p, &spec, 1.0, 1.0).unwrap();
    let b = evaluate_with(&data, &p, &spec, 1.0, 1.0).unwrap();
    assert_eq!(a, b);
    assert!(a.n_at_risk > 0);
    let auc = a.auc.unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let pe = a.pe.unwrap();
    assert!((0.0..=1.0).contains(&pe));
    let empty = evaluate_with(&data, &p, &spec, 10.9, 0.05).unwrap();
    assert_eq!(empty.n_at_risk, 0);
    assert_eq!(empty.pe, None);
}
