//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero when any fails. Pass a substring of a
//! criterion key (e.g. `criterion_5`) to run a subset.

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use copjm::estimation::{likelihood_ratio_test, FitOptions};
use copjm::likelihood::{
    censored_pair_gaussian, censored_pair_t, event_pair_gaussian, event_pair_t, subject_loglik,
    Likelihood,
};
use copjm::model::{
    AlphaStructure, BaselineHazard, Copula, ModelSpec, ParameterSet, RandomEffects, SubjectData,
    SubjectHazard, TimeTrend,
};
use copjm::prediction::{
    auc_from_predictions, empirical_bayes_mode_with, predict_survival_curve_with,
    prediction_error_from_predictions, Outcome,
};
use copjm::simulation::{
    run_study, sample_conditional_event_time, simulate_dataset, Scenario, StudyOptions,
};
use copjm::BSplineBasis;

type Check = fn() -> Result<String, String>;

const CRITERIA: [(&str, &str, Check); 9] = [
    ("criterion_1", "RJM equivalence at eta = 0", criterion_1),
    ("criterion_2", "copula contribution oracles", criterion_2),
    ("criterion_3", "quadrature oracle", criterion_3),
    ("criterion_4", "conditional sampler PIT", criterion_4),
    ("criterion_5", "scaled simulation study 1", criterion_5),
    ("criterion_6", "prediction properties", criterion_6),
    ("criterion_7", "metric sanity", criterion_7),
    ("criterion_8", "PBC reproduction (conditional)", criterion_8),
    (
        "criterion_9",
        "determinism of simulate and study",
        criterion_9,
    ),
];

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (key, title, check) in CRITERIA {
        if filter.as_deref().is_some_and(|f| !key.contains(f)) {
            continue;
        }
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("{key} {title}: PASS ({detail}) [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("{key} {title}: FAIL ({detail}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- independent distribution helpers -------------------------------------

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

fn student(nu: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, nu).unwrap()
}

fn bvn_density(x: f64, y: f64, rho: f64) -> f64 {
    let q = (x * x - 2.0 * rho * x * y + y * y) / (1.0 - rho * rho);
    (-0.5 * q).exp() / (2.0 * PI * (1.0 - rho * rho).sqrt())
}

fn bvt_density(x: f64, y: f64, rho: f64, nu: f64) -> f64 {
    let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * (1.0 - rho * rho));
    (1.0 + q).powf(-(nu + 2.0) / 2.0) / (2.0 * PI * (1.0 - rho * rho).sqrt())
}

/// Normal score of U = 1 − e^{−H}, taken from the tail that keeps precision.
fn normal_score(h: f64) -> f64 {
    let n = std_normal();
    if h <= std::f64::consts::LN_2 {
        n.inverse_cdf(-(-h).exp_m1())
    } else {
        -n.inverse_cdf((-h).exp())
    }
}

fn t_score(h: f64, nu: f64) -> f64 {
    let t = student(nu);
    if h <= std::f64::consts::LN_2 {
        t.inverse_cdf(-(-h).exp_m1())
    } else {
        -t.inverse_cdf((-h).exp())
    }
}

/// T_ν⁻¹(Φ(z)), evaluated through the lower tail.
fn t_of_normal(z: f64, nu: f64) -> f64 {
    let w = student(nu).inverse_cdf(std_normal().cdf(-z.abs()));
    if z > 0.0 {
        -w
    } else {
        w
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// ∫_lo^∞ g(x) dx on the substitution x = tan θ.
fn upper_integral(g: impl Fn(f64) -> f64, lo: f64, n: usize) -> f64 {
    let top = PI / 2.0;
    simpson(
        |th| {
            if th >= top {
                0.0
            } else {
                let c = th.cos();
                g(th.tan()) / (c * c)
            }
        },
        lo.atan(),
        top,
        n,
    )
}

#[derive(Clone, Copy)]
enum Family {
    Gaussian,
    T(f64),
}

/// P(T* > t | y) = ∫_{U_t}^1 c(u, U_y) du on a dense grid, in score space.
fn censored_factor_grid(family: Family, h: f64, z_y: f64, rho: f64) -> f64 {
    match family {
        Family::Gaussian => {
            let z_t = normal_score(h);
            upper_integral(|z| bvn_density(z, z_y, rho), z_t, 20_000) / std_normal().pdf(z_y)
        }
        Family::T(nu) => {
            let t = student(nu);
            let w_t = t_score(h, nu);
            let w_y = t_of_normal(z_y, nu);
            upper_integral(|w| bvt_density(w, w_y, rho, nu), w_t, 20_000) / t.pdf(w_y)
        }
    }
}

/// Copula density c(U_t, U_y).
fn copula_density(family: Family, h: f64, z_y: f64, rho: f64) -> f64 {
    match family {
        Family::Gaussian => {
            let n = std_normal();
            let z_t = normal_score(h);
            bvn_density(z_t, z_y, rho) / (n.pdf(z_t) * n.pdf(z_y))
        }
        Family::T(nu) => {
            let t = student(nu);
            let w_t = t_score(h, nu);
            let w_y = t_of_normal(z_y, nu);
            bvt_density(w_t, w_y, rho, nu) / (t.pdf(w_t) * t.pdf(w_y))
        }
    }
}

/// Textbook conditional survival of the copula given the response score.
fn censored_factor_closed(family: Family, h: f64, z_y: f64, rho: f64) -> f64 {
    match family {
        Family::Gaussian => {
            std_normal().cdf((rho * z_y - normal_score(h)) / (1.0 - rho * rho).sqrt())
        }
        Family::T(nu) => {
            let w_y = t_of_normal(z_y, nu);
            let sc = ((nu + w_y * w_y) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
            student(nu + 1.0).sf((t_score(h, nu) - rho * w_y) / sc)
        }
    }
}

/// Piecewise-constant baseline times exp(c + a·u), integrated in closed form.
fn cumulative_hazard(knots: &[f64], lambda: &[f64], c: f64, a: f64, s: f64, t: f64) -> f64 {
    let mut h = 0.0;
    for k in 0..lambda.len() {
        let lo = knots[k].max(s);
        let hi = knots[k + 1].min(t);
        if hi > lo {
            h += if a == 0.0 {
                lambda[k] * c.exp() * (hi - lo)
            } else {
                lambda[k] * (c + a * lo).exp() * (a * (hi - lo)).exp_m1() / a
            };
        }
    }
    h
}

fn hazard_rate(knots: &[f64], lambda: &[f64], c: f64, a: f64, t: f64) -> f64 {
    let k = knots.partition_point(|&v| v < t).max(1) - 1;
    lambda[k] * (c + a * t).exp()
}

/// Cubic Bernstein correlation on [0, upper].
fn bernstein_rho(eta: &[f64], upper: f64, s: f64) -> f64 {
    let x = (s / upper).clamp(0.0, 1.0);
    let n = eta.len() - 1;
    let mut r = 0.0;
    for (k, e) in eta.iter().enumerate() {
        let binom = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        r += e * binom * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32);
    }
    r.tanh()
}

fn bare_spec(copula: Copula, re: RandomEffects, knots: Vec<f64>, corr_upper: f64) -> ModelSpec {
    ModelSpec {
        long_covariates: vec![],
        surv_covariates: vec![],
        time_trend: TimeTrend::Linear,
        random_effects: re,
        alpha: AlphaStructure::Shared,
        baseline: BaselineHazard::new(knots).unwrap(),
        copula,
        correlation_basis: BSplineBasis::bernstein(4, 0.0, corr_upper).unwrap(),
    }
}

fn copula_of(family: Family) -> Copula {
    match family {
        Family::Gaussian => Copula::Gaussian,
        Family::T(nu) => Copula::StudentT { nu },
    }
}

fn random_truthlike(spec: &ModelSpec, rng: &mut impl Rng) -> ParameterSet {
    let d11: f64 = rng.random_range(0.5..3.0);
    let d22: f64 = rng.random_range(0.05..0.4);
    let c = rng.random_range(-0.6..0.6) * (d11 * d22).sqrt();
    let truth = Scenario::default();
    ParameterSet {
        beta1: truth
            .beta1
            .iter()
            .map(|b| b + rng.random_range(-0.5..0.5))
            .collect(),
        beta2: truth
            .beta2
            .iter()
            .map(|b| b + rng.random_range(-0.5..0.5))
            .collect(),
        alpha: vec![rng.random_range(-1.0..0.5)],
        d: DMatrix::from_row_slice(2, 2, &[d11, c, c, d22]),
        sigma: rng.random_range(0.8..3.0),
        lambda: (0..spec.k()).map(|_| rng.random_range(0.1..1.0)).collect(),
        eta: vec![0.0; spec.ell()],
        nu: None,
    }
}

// ---- criteria ---------------------------------------------------------------

fn criterion_1() -> Result<String, String> {
    let scenario = Scenario {
        n: 100,
        lambda0: Some(0.5),
        seed: 11,
        ..Default::default()
    };
    let data = simulate_dataset(&scenario, 0).map_err(|e| e.to_string())?;
    let gjm = scenario.spec(7).unwrap().with_copula(Copula::Gaussian);
    let rjm = gjm.with_copula(Copula::Independence);
    let lg = Likelihood::for_dataset(&data, &gjm, 9).unwrap();
    let lr = Likelihood::for_dataset(&data, &rjm, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let p = random_truthlike(&gjm, &mut rng);
        let mut q = p.clone();
        q.eta.clear();
        let a = lg.contributions(&p).map_err(|e| e.to_string())?;
        let b = lr.contributions(&q).map_err(|e| e.to_string())?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst < 1e-8, format!("max per-subject |difference| {worst:.3e} over 100 subjects x 20 points, tolerance 1e-8"))
}

struct PairState {
    subject: SubjectData,
    b: [f64; 2],
    params: ParameterSet,
    h: f64,
    rate: f64,
    z_y: f64,
    sigma: f64,
}

fn pair_state(spec: &ModelSpec, rho: f64, nu: Option<f64>, rng: &mut impl Rng) -> PairState {
    loop {
        let s: f64 = rng.random_range(0.0..6.0);
        let t = s + rng.random_range(0.05..5.0);
        let b = [rng.random_range(-1.5..1.5), rng.random_range(-0.4..0.4)];
        let sigma = rng.random_range(0.5..3.0);
        let (b10, b11) = (rng.random_range(5.0..12.0), rng.random_range(-1.0..0.5));
        let lambda = rng.random_range(0.05..0.6);
        let alpha = rng.random_range(-1.0..0.8);
        let mean = b10 + b11 * s + b[0] + b[1] * s;
        let y = mean + sigma * rng.random_range(-2.5..2.5);
        let (c, a) = (alpha * b[0], alpha * b[1]);
        let knots = spec.baseline.knots();
        let h = cumulative_hazard(knots, &[lambda], c, a, s, t);
        let u_t = -(-h).exp_m1();
        if !(1e-3..1.0 - 1e-3).contains(&u_t) {
            continue;
        }
        let params = ParameterSet {
            beta1: vec![b10, b11],
            beta2: vec![],
            alpha: vec![alpha],
            d: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.1]),
            sigma,
            lambda: vec![lambda],
            eta: vec![rho.atanh(); 4],
            nu,
        };
        let subject = SubjectData {
            id: "s".into(),
            times: vec![s],
            y: vec![y],
            long_covariates: vec![],
            surv_covariates: vec![],
            event_time: t,
            event: true,
        };
        return PairState {
            subject,
            b,
            params,
            h,
            rate: hazard_rate(knots, &[lambda], c, a, t),
            z_y: (y - mean) / sigma,
            sigma,
        };
    }
}

fn criterion_2() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut report = Vec::new();
    let mut ok = true;
    for (family, tol) in [(Family::Gaussian, 1e-6), (Family::T(4.0), 1e-5)] {
        let spec = bare_spec(
            copula_of(family),
            RandomEffects::InterceptSlope,
            vec![0.0, 20.0],
            20.0,
        );
        let nu = match family {
            Family::T(nu) => Some(nu),
            Family::Gaussian => None,
        };
        let mut worst = 0.0_f64;
        for rho in [-0.5, 0.0, 0.7] {
            for _ in 0..100 {
                let st = pair_state(&spec, rho, nu, &mut rng);
                let t = st.subject.event_time;
                let f_y = std_normal().pdf(st.z_y) / st.sigma;
                let want_cens = censored_factor_grid(family, st.h, st.z_y, rho) * f_y;
                let want_event =
                    copula_density(family, st.h, st.z_y, rho) * st.rate * (-st.h).exp() * f_y;
                let (got_cens, got_event) = match family {
                    Family::Gaussian => (
                        censored_pair_gaussian(&st.subject, 0, t, &st.b, &st.params, &spec),
                        event_pair_gaussian(&st.subject, t, &st.b, &st.params, &spec),
                    ),
                    Family::T(_) => (
                        censored_pair_t(&st.subject, 0, t, &st.b, &st.params, &spec),
                        event_pair_t(&st.subject, t, &st.b, &st.params, &spec),
                    ),
                };
                let got_cens = got_cens.map_err(|e| e.to_string())?;
                let got_event = got_event.map_err(|e| e.to_string())?;
                worst = worst.max(((got_cens - want_cens) / want_cens).abs());
                worst = worst.max(((got_event - want_event) / want_event).abs());
            }
        }
        ok &= worst < tol;
        let name = if nu.is_some() { "t(4)" } else { "Gaussian" };
        report.push(format!("{name} max rel err {worst:.2e} (tol {tol:.0e})"));
    }
    ensure(ok, report.join("; "))
}

/// ln ∫ f(y, T | b) N(b; 0, d) db for a random-intercept subject on a
/// dense grid, with closed-form copula factors.
fn dense_grid_loglik(
    family: Family,
    subject: &SubjectData,
    p: &ParameterSet,
    spec: &ModelSpec,
    corr_upper: f64,
) -> f64 {
    let d = p.d[(0, 0)];
    let knots = spec.baseline.knots();
    let n = std_normal();
    let integrand = |b: f64| {
        let c = p.alpha[0] * b;
        let times = &subject.times;
        let z: Vec<f64> = times
            .iter()
            .zip(&subject.y)
            .map(|(s, y)| (y - p.beta1[0] - p.beta1[1] * s - b) / p.sigma)
            .collect();
        // negligible mass (below e^-40) where the reference quantile functions lose accuracy
        if z.iter().any(|v| v.abs() > 9.0)
            || cumulative_hazard(knots, &p.lambda, c, 0.0, 0.0, subject.event_time) > 40.0
        {
            return 0.0;
        }
        let mut ln = -0.5 * b * b / d - 0.5 * (2.0 * PI * d).ln();
        for zj in &z {
            ln += n.pdf(*zj).ln() - p.sigma.ln();
        }
        ln -= cumulative_hazard(knots, &p.lambda, c, 0.0, 0.0, times[0]);
        let m = times.len();
        for j in 0..m - 1 {
            let h = cumulative_hazard(knots, &p.lambda, c, 0.0, times[j], times[j + 1]);
            let rho = bernstein_rho(&p.eta, corr_upper, times[j]);
            ln += censored_factor_closed(family, h, z[j], rho).ln();
        }
        let t = subject.event_time;
        let h = cumulative_hazard(knots, &p.lambda, c, 0.0, times[m - 1], t);
        let rho = bernstein_rho(&p.eta, corr_upper, times[m - 1]);
        ln += if subject.event {
            (copula_density(family, h, z[m - 1], rho)
                * hazard_rate(knots, &p.lambda, c, 0.0, t)
                * (-h).exp())
            .ln()
        } else {
            censored_factor_closed(family, h, z[m - 1], rho).ln()
        };
        ln.exp()
    };
    let half = 12.0 * d.sqrt();
    simpson(integrand, -half, half, 8000).ln()
}

fn criterion_3() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let corr_upper = 12.0;
    let knots = vec![0.0, 2.0, 5.0, 20.0];
    let (mut worst1, mut worst1_9) = (0.0_f64, 0.0_f64);
    for i in 0..50 {
        let family = if i % 2 == 0 {
            Family::Gaussian
        } else {
            Family::T(4.0)
        };
        let spec = bare_spec(
            copula_of(family),
            RandomEffects::Intercept,
            knots.clone(),
            corr_upper,
        );
        let nu = match family {
            Family::T(nu) => Some(nu),
            Family::Gaussian => None,
        };
        let p = ParameterSet {
            beta1: vec![rng.random_range(8.0..12.0), rng.random_range(-1.0..0.0)],
            beta2: vec![],
            alpha: vec![rng.random_range(-1.0..0.5)],
            d: DMatrix::from_row_slice(1, 1, &[rng.random_range(0.5..3.0)]),
            sigma: rng.random_range(1.0..3.0),
            lambda: (0..3).map(|_| rng.random_range(0.05..0.4)).collect(),
            eta: (0..4).map(|_| rng.random_range(-1.5..1.5)).collect(),
            nu,
        };
        let n_obs = rng.random_range(1..=2);
        let mut times = vec![rng.random_range(0.0..2.0)];
        if n_obs == 2 {
            times.push(times[0] + rng.random_range(0.3..2.0));
        }
        let last = *times.last().unwrap();
        let y = times
            .iter()
            .map(|s| p.beta1[0] + p.beta1[1] * s + rng.random_range(-4.0..4.0))
            .collect();
        let subject = SubjectData {
            id: i.to_string(),
            times,
            y,
            long_covariates: vec![],
            surv_covariates: vec![],
            event_time: last + rng.random_range(0.05..3.0),
            event: rng.random_bool(0.5),
        };
        let want = dense_grid_loglik(family, &subject, &p, &spec, corr_upper);
        let got = subject_loglik(&subject, &p, &spec, 25).map_err(|e| e.to_string())?;
        worst1 = worst1.max((got - want).exp_m1().abs());
        let got9 = subject_loglik(&subject, &p, &spec, 9).map_err(|e| e.to_string())?;
        worst1_9 = worst1_9.max((got9 - want).exp_m1().abs());
    }

    let scenario = Scenario {
        n: 50,
        lambda0: Some(0.5),
        seed: 33,
        ..Default::default()
    };
    let data = simulate_dataset(&scenario, 0).map_err(|e| e.to_string())?;
    let mut worst2 = 0.0_f64;
    let mut over = 0;
    for copula in [Copula::Gaussian, Copula::StudentT { nu: 4.0 }] {
        let mut sc = scenario.clone();
        sc.copula = copula;
        let spec = sc.spec(7).unwrap();
        let truth = sc.truth_for(&spec).unwrap();
        for s in &data.subjects {
            let a = subject_loglik(s, &truth, &spec, 9).map_err(|e| e.to_string())?;
            let b = subject_loglik(s, &truth, &spec, 25).map_err(|e| e.to_string())?;
            let rel = (a - b).exp_m1().abs();
            worst2 = worst2.max(rel);
            over += (rel >= 1e-5) as usize;
        }
    }
    ensure(
        worst1 < 1e-4 && worst2 < 1e-5,
        format!(
            "r=1 vs dense grid max rel err {worst1:.2e} at 25 nodes, {worst1_9:.2e} at 9 (tol 1e-4, 50 subjects); r=2 9 vs 25 nodes max rel diff {worst2:.2e}, {over}/100 above tol 1e-5"
        ),
    )
}

fn ks_uniform(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max)
}

fn criterion_4() -> Result<String, String> {
    let knots = [0.0, 1.0, 2.5, 4.0, 7.0, 1000.0];
    let lambda = [0.3, 0.1, 0.5, 0.2, 0.15];
    let (c, a) = (0.2, 0.05);
    let s = 1.7;
    let hz = SubjectHazard::from_parts(&knots, &lambda, c, a);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut report = Vec::new();
    let mut ok = true;
    for family in [Family::Gaussian, Family::T(4.0)] {
        for rho in [0.0, 0.5, 0.9] {
            let mut pit = Vec::with_capacity(100_000);
            for _ in 0..100_000 {
                let z_y = std_normal().inverse_cdf(rng.random_range(1e-12..1.0));
                let u: f64 = rng.random_range(1e-15..1.0);
                let t = sample_conditional_event_time(&hz, s, z_y, rho, copula_of(family), u)
                    .map_err(|e| e.to_string())?;
                let f = if t.is_finite() {
                    let h = cumulative_hazard(&knots, &lambda, c, a, s, t);
                    1.0 - censored_factor_closed(family, h, z_y, rho)
                } else {
                    1.0
                };
                pit.push(f);
            }
            let d = ks_uniform(pit);
            ok &= d < 0.01;
            let name = match family {
                Family::Gaussian => "G",
                Family::T(_) => "t4",
            };
            report.push(format!("{name} rho={rho}: D={d:.4}"));
        }
    }
    ensure(
        ok,
        format!("{} (tol 0.01, 1e5 draws each)", report.join(", ")),
    )
}

fn criterion_5() -> Result<String, String> {
    let scenario = Scenario {
        n: 200,
        seed: 2024,
        ..Default::default()
    };
    let options = StudyOptions {
        replicates: 30,
        pieces: 7,
        band_points: 50,
        fit: FitOptions {
            quad: 7,
            ..Default::default()
        },
        ..Default::default()
    };
    let result = run_study(&scenario, &options).map_err(|e| e.to_string())?;
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).ok();
    fs::write(
        dir.join("criterion_5_study.json"),
        serde_json::to_string_pretty(&result).unwrap(),
    )
    .ok();

    let summary = |m: &str| {
        result
            .summaries
            .iter()
            .find(|s| s.model == m)
            .cloned()
            .ok_or(format!("no {m} summary"))
    };
    let gjm = summary("GJM")?;
    let rjm = summary("RJM")?;
    let truth_row = [
        "beta1[intercept]",
        "beta1[time]",
        "beta1[x1]",
        "beta1[x2]",
        "beta1[x3]",
        "beta1[x4]",
        "beta2[x1]",
        "beta2[x2]",
        "beta2[x3]",
        "beta2[x4]",
        "D[1,1]",
        "D[2,2]",
        "D[1,2]",
        "sigma",
        "alpha",
    ];
    let mut misses = Vec::new();
    for name in truth_row {
        let p = gjm.parameter(name).ok_or(format!("GJM lacks {name}"))?;
        let mcse = p.sd.unwrap_or(f64::INFINITY) / (gjm.fitted as f64).sqrt();
        if !(p.bias.abs() <= 3.0 * mcse) {
            misses.push(format!("{name} bias {:.4} > 3x{mcse:.4}", p.bias));
        }
    }
    let ga = gjm.parameter("alpha").unwrap();
    let ra = rjm.parameter("alpha").unwrap();
    let b_ok = ra.est < -0.55 && ra.bias.abs() > ga.bias.abs();
    let cov = gjm.mean_band_coverage;
    let c_ok = cov.is_some_and(|c| (0.80..=1.0).contains(&c));
    let detail = format!(
        "(a) {}; (b) alpha RJM {:.4} vs GJM {:.4}; (c) mean band coverage {}; fits GJM {}/{} RJM {}/{}, not converged GJM {} RJM {}",
        if misses.is_empty() { "all 15 within 3 MCSE".to_string() } else { misses.join(", ") },
        ra.est,
        ga.est,
        cov.map(|c| format!("{c:.3}")).unwrap_or("none".into()),
        gjm.fitted,
        gjm.fitted + gjm.failed,
        rjm.fitted,
        rjm.fitted + rjm.failed,
        gjm.not_converged,
        rjm.not_converged,
    );
    ensure(misses.is_empty() && b_ok && c_ok, detail)
}

fn criterion_6() -> Result<String, String> {
    let scenario = Scenario {
        n: 100,
        lambda0: Some(0.5),
        seed: 66,
        ..Default::default()
    };
    let data = simulate_dataset(&scenario, 0).map_err(|e| e.to_string())?;
    let gjm = scenario.spec(7).unwrap();
    let truth = scenario.truth_for(&gjm).unwrap();
    let mut zero = truth.clone();
    zero.eta = vec![0.0; 4];
    let rjm = gjm.with_copula(Copula::Independence);
    let mut rjm_truth = truth.clone();
    rjm_truth.eta.clear();
    let knots = gjm.baseline.knots().to_vec();
    let mut checked = 0;
    let mut worst = 0.0_f64;
    for t in [1.0, 3.0, 5.5] {
        for s in data.subjects.iter().filter(|s| s.event_time > t) {
            let us: Vec<f64> = (0..=20).map(|k| t + (11.0 - t) * k as f64 / 20.0).collect();
            let pi =
                predict_survival_curve_with(s, t, &us, &truth, &gjm).map_err(|e| e.to_string())?;
            if pi[0] != 1.0 {
                return Err(format!("subject {}: pi(t|t) = {}", s.id, pi[0]));
            }
            if pi.windows(2).any(|w| w[1] > w[0]) {
                return Err(format!("subject {}: not monotone at t={t}", s.id));
            }
            for (p, spec) in [(&zero, &gjm), (&rjm_truth, &rjm)] {
                let pi =
                    predict_survival_curve_with(s, t, &us, p, spec).map_err(|e| e.to_string())?;
                let b = empirical_bayes_mode_with(s, t, p, spec)
                    .map_err(|e| e.to_string())?
                    .b;
                let lp: f64 = s
                    .surv_covariates
                    .iter()
                    .zip(&p.beta2)
                    .map(|(x, y)| x * y)
                    .sum();
                let (c, a) = (lp + p.alpha[0] * b[0], p.alpha[0] * b[1]);
                for (u, v) in us.iter().zip(&pi) {
                    let want = (-cumulative_hazard(&knots, &p.lambda, c, a, t, *u)).exp();
                    worst = worst.max((v - want).abs());
                }
            }
            checked += 1;
        }
    }
    ensure(
        worst <= 1e-10,
        format!("{checked} (subject, landmark) curves: pi(t|t)=1 and monotone; rho=0 max |pi - exp(-H)| {worst:.2e} (tol 1e-10)"),
    )
}

fn criterion_7() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let n = 1000;
    let pred: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let outcomes: Vec<Outcome> = (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                Outcome::CASE
            } else {
                Outcome::CONTROL
            }
        })
        .collect();
    let auc = auc_from_predictions(&pred, &outcomes).ok_or("no pairs")?;

    // permutation oracle: AUC averaged over random relabelings of the predictions
    let mut perm = pred.clone();
    let mut total = 0.0;
    let reps = 200;
    for _ in 0..reps {
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        total += auc_from_predictions(&perm, &outcomes).unwrap();
    }
    let perm_mean = total / reps as f64;

    let half = vec![0.5; n];
    let pe = prediction_error_from_predictions(&half, &vec![Outcome::CONTROL; n]).ok_or("no PE")?;
    ensure(
        (auc - 0.5).abs() <= 0.05 && (perm_mean - 0.5).abs() <= 0.05 && pe == 0.25,
        format!("AUC {auc:.4}, permutation mean {perm_mean:.4} (0.5 +/- 0.05); PE {pe}"),
    )
}

/// Runs when COPJM_PBC_CONFIG names a JSON data description of the PBC
/// extract (see docs/pbc.md).
fn criterion_8() -> Result<String, String> {
    let Ok(path) = std::env::var("COPJM_PBC_CONFIG") else {
        return Ok("skipped: COPJM_PBC_CONFIG not set".into());
    };
    let path = Path::new(&path);
    let cfg: copjm::cli::io::DataConfig =
        serde_json::from_str(&fs::read_to_string(path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let base = path.parent().unwrap_or(Path::new(""));
    let covariates: Vec<String> = ["drug", "sex", "age"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let data = copjm::cli::io::read_dataset(&cfg, base, &covariates, &covariates)
        .map_err(|e| e.to_string())?;
    let end = 14.306;
    let rjm = ModelSpec {
        long_covariates: covariates.clone(),
        surv_covariates: covariates.clone(),
        time_trend: TimeTrend::Spline {
            basis: BSplineBasis::new(4, 0.0, end, vec![]).unwrap(),
        },
        random_effects: RandomEffects::InterceptSlope,
        alpha: AlphaStructure::Shared,
        baseline: BaselineHazard::equally_spaced(7, end).unwrap(),
        copula: Copula::Independence,
        correlation_basis: BSplineBasis::new(5, 0.0, end, vec![]).unwrap(),
    };
    let gjm = rjm.with_copula(Copula::Gaussian);
    let opts = FitOptions::default();
    let a = copjm::estimation::fit(&data, &rjm, &opts).map_err(|e| e.to_string())?;
    let mut start = a.theta_hat.clone();
    start.eta = vec![0.0; gjm.ell()];
    let b = copjm::estimation::fit_from(&data, &gjm, start, &opts).map_err(|e| e.to_string())?;
    let lrt = likelihood_ratio_test(&a, &b).map_err(|e| e.to_string())?;
    let ok = (b.loglik + 1897.9).abs() <= 5.0 && a.aic - b.aic > 50.0 && lrt.p_value < 0.001;
    ensure(
        ok,
        format!(
            "PGJM loglik {:.3} (target -1897.9 +/- 5), AIC(PRJM) - AIC(PGJM) {:.2} (> 50), LRT p {:.2e}",
            b.loglik,
            a.aic - b.aic,
            lrt.p_value
        ),
    )
}

fn run_cli(cmd: &str, config: &Path, out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_copjm"))
        .args([cmd, "--config"])
        .arg(config)
        .args(["--seed", "5", "--workers", "2", "--out"])
        .arg(out)
        .env_remove("COPJM_OUT")
        .env_remove("COPJM_WORKERS")
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&o.stderr).into_owned())
    }
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for n in &names {
        if fs::read(a.join(n)).map_err(|e| e.to_string())?
            != fs::read(b.join(n)).map_err(|e| e.to_string())?
        {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn criterion_9() -> Result<String, String> {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let d = dir.path();
    let sim = d.join("sim.json");
    fs::write(&sim, r#"{"scenario": {"n": 200}}"#).unwrap();
    let study = d.join("study.json");
    fs::write(
        &study,
        r#"{"scenario": {"n": 60, "lambda0": 0.5},
            "options": {"replicates": 2, "pieces": 2, "band_points": 5,
                        "fit": {"quad": 3, "optimizer": "quasi_newton", "init_iterations": 5}}}"#,
    )
    .unwrap();
    let mut files = 0;
    for (cmd, cfg) in [("simulate", &sim), ("study", &study)] {
        let (a, b) = (d.join(format!("{cmd}_a")), d.join(format!("{cmd}_b")));
        run_cli(cmd, cfg, &a)?;
        run_cli(cmd, cfg, &b)?;
        files += same_tree(&a, &b)?;
    }
    Ok(format!(
        "{files} artifacts byte-identical across reruns (seed 5, 2 workers)"
    ))
}
