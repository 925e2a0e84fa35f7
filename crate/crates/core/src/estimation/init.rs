//! Starting values: linear mixed model, piecewise-exponential survival fit,
//! then a short maximization of the independence (regular) joint model.

use nalgebra::{DMatrix, DVector};

use super::optim::{bfgs, OptimOptions};
use super::transform::{pack, unpack};
use crate::error::{Error, Result};
use crate::likelihood::posterior::{gaussian_parts, PriorRE};
use crate::likelihood::Likelihood;
use crate::model::{Copula, Dataset, ModelSpec, ParameterSet};

/// BFGS iterations spent on the regular joint model during initialization.
pub const DEFAULT_INIT_ITERATIONS: usize = 30;

/// Names of columns that are linear combinations of earlier columns.
fn dependent_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut res = col.clone();
        for q in &basis {
            let c = q.dot(&res);
            res -= q * c;
        }
        // second Gram–Schmidt pass for stability
        for q in &basis {
            let c = q.dot(&res);
            res -= q * c;
        }
        let rn = res.norm();
        if norm == 0.0 || rn <= 1e-9 * norm {
            out.push(name.clone());
        } else {
            basis.push(res / rn);
        }
    }
    out
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    let dep = dependent_columns(x, names);
    if !dep.is_empty() {
        return Err(Error::Rank { columns: dep });
    }
    let xtx = x.transpose() * x;
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::Conditioning("normal equations are singular".into()))?;
    Ok(chol.solve(&(x.transpose() * y)))
}

struct LmmStart {
    beta1: Vec<f64>,
    d: DMatrix<f64>,
    sigma: f64,
}

/// Maximum-likelihood linear mixed model from an OLS start.
fn fit_lmm(dataset: &Dataset, spec: &ModelSpec) -> Result<LmmStart> {
    let p = spec.p();
    let r = spec.r();
    let total = dataset.total_observations();
    let mut x = DMatrix::zeros(total, p);
    let mut y = DVector::zeros(total);
    let mut designs = Vec::with_capacity(dataset.len());
    let mut row = Vec::with_capacity(p);
    let mut at = 0;
    for s in &dataset.subjects {
        let mut xs = Vec::with_capacity(s.n_obs() * p);
        let mut zs = Vec::with_capacity(s.n_obs() * r);
        for (&t, &v) in s.times.iter().zip(&s.y) {
            spec.design_row(t, &s.long_covariates, &mut row)
                .map_err(|e| e.in_subject(&s.id))?;
            for (c, val) in row.iter().enumerate() {
                x[(at, c)] = *val;
            }
            y[at] = v;
            at += 1;
            xs.extend_from_slice(&row);
            let (zr, used) = spec.random_effects.design(t);
            zs.extend_from_slice(&zr[..used]);
        }
        designs.push((xs, zs, s.y.clone()));
    }
    let names: Vec<String> = spec
        .fixed_effect_names()
        .into_iter()
        .map(|n| format!("beta1[{n}]"))
        .collect();
    let beta = least_squares(&x, &y, &names)?;
    let resid = &y - &x * &beta;
    let var = resid.norm_squared() / total as f64;
    let scale = 1.0 + y.iter().map(|v| v * v).sum::<f64>() / total as f64;
    let t_max = dataset.max_time().max(1.0);
    let start_d = |v: f64| {
        let mut d = DMatrix::zeros(r, r);
        d[(0, 0)] = 0.5 * v;
        if r == 2 {
            d[(1, 1)] = 0.5 * v / (t_max * t_max);
        }
        d
    };
    if var <= 1e-20 * scale {
        // noiseless responses: the likelihood is unbounded, keep OLS
        let v = 1e-8 * scale;
        return Ok(LmmStart {
            beta1: beta.iter().copied().collect(),
            d: start_d(v),
            sigma: v.sqrt(),
        });
    }
    let tri = r * (r + 1) / 2;
    let unpack_lmm = |v: &[f64]| -> (Vec<f64>, DMatrix<f64>, f64) {
        let mut l = DMatrix::zeros(r, r);
        let mut idx = p;
        for i in 0..r {
            for j in 0..=i {
                l[(i, j)] = if i == j { v[idx].exp() } else { v[idx] };
                idx += 1;
            }
        }
        (v[..p].to_vec(), &l * l.transpose(), v[p + tri].exp())
    };
    let mut v0: Vec<f64> = beta.iter().copied().collect();
    let d0 = start_d(var);
    for i in 0..r {
        for j in 0..=i {
            v0.push(if i == j { d0[(i, i)].sqrt().ln() } else { 0.0 });
        }
    }
    v0.push((0.5 * var).sqrt().ln());
    let objective = |v: &[f64]| -> f64 {
        let (b, d, sigma) = unpack_lmm(v);
        let Ok(prior) = PriorRE::new(&d) else {
            return f64::INFINITY;
        };
        let mut ll = 0.0;
        for (xs, zs, ys) in &designs {
            let e: Vec<f64> = ys
                .iter()
                .enumerate()
                .map(|(j, yv)| {
                    yv - xs[j * p..(j + 1) * p]
                        .iter()
                        .zip(&b)
                        .map(|(a, c)| a * c)
                        .sum::<f64>()
                })
                .collect();
            match gaussian_parts(zs, &e, r, sigma, &prior) {
                Ok((l, _)) => ll += l,
                Err(_) => return f64::INFINITY,
            }
        }
        -ll
    };
    let opts = OptimOptions {
        ftol: 1e-8,
        xtol: 1e-6,
        max_iter: 500,
        ..Default::default()
    };
    let res = bfgs(objective, &v0, &opts);
    let (beta1, d, sigma) = unpack_lmm(&res.x);
    Ok(LmmStart { beta1, d, sigma })
}

/// Piecewise-exponential proportional-hazards fit with the baseline
/// profiled out. Pieces without events get a small positive rate.
fn fit_survival(dataset: &Dataset, spec: &ModelSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = spec.q();
    let k = spec.k();
    let knots = spec.baseline.knots();
    let n = dataset.len();
    // exposure per subject and piece, event piece
    let mut expo = vec![vec![0.0; k]; n];
    let mut piece_of_event = vec![None; n];
    let mut w = DMatrix::zeros(n, q);
    for (i, s) in dataset.subjects.iter().enumerate() {
        for c in 0..k {
            expo[i][c] = (s.event_time.min(knots[c + 1]) - knots[c]).max(0.0);
        }
        if s.event {
            piece_of_event[i] = Some(
                spec.baseline
                    .piece(s.event_time)
                    .map_err(|e| Error::from(e).in_subject(&s.id))?,
            );
        }
        for (c, v) in s.surv_covariates.iter().enumerate() {
            w[(i, c)] = *v;
        }
    }
    if q > 0 {
        let names: Vec<String> = spec
            .surv_covariates
            .iter()
            .map(|n| format!("beta2[{n}]"))
            .collect();
        // an intercept column guards against covariates collinear with the baseline
        let mut aug = DMatrix::from_element(n, q + 1, 1.0);
        aug.view_mut((0, 1), (n, q)).copy_from(&w);
        let mut all = vec!["baseline".to_string()];
        all.extend(names);
        let dep = dependent_columns(&aug, &all);
        if !dep.is_empty() {
            return Err(Error::Rank { columns: dep });
        }
    }
    let mut d = vec![0.0; k];
    for pe in piece_of_event.iter().flatten() {
        d[*pe] += 1.0;
    }
    let exposures = |beta: &[f64]| -> Vec<f64> {
        let mut e = vec![0.0; k];
        for i in 0..n {
            let lp: f64 = (0..q).map(|c| w[(i, c)] * beta[c]).sum();
            let m = lp.exp();
            for c in 0..k {
                e[c] += m * expo[i][c];
            }
        }
        e
    };
    let event_lp: Vec<usize> = (0..n).filter(|&i| piece_of_event[i].is_some()).collect();
    let objective = |beta: &[f64]| -> f64 {
        let e = exposures(beta);
        let mut ll: f64 = event_lp
            .iter()
            .map(|&i| (0..q).map(|c| w[(i, c)] * beta[c]).sum::<f64>())
            .sum();
        for c in 0..k {
            if d[c] > 0.0 {
                ll += d[c] * (d[c] / e[c]).ln() - d[c];
            }
        }
        -ll
    };
    let beta2 = if q > 0 {
        let opts = OptimOptions {
            ftol: 1e-10,
            xtol: 1e-7,
            max_iter: 500,
            max_step: 1.0,
            ..Default::default()
        };
        bfgs(objective, &vec![0.0; q], &opts).x
    } else {
        Vec::new()
    };
    let e = exposures(&beta2);
    let total_rate = d.iter().sum::<f64>().max(0.5) / e.iter().sum::<f64>().max(1e-300);
    let lambda = (0..k)
        .map(|c| {
            if d[c] > 0.0 && e[c] > 0.0 {
                d[c] / e[c]
            } else {
                0.1 * total_rate
            }
        })
        .collect();
    Ok((beta2, lambda))
}

/// Starting values with the default RJM iteration budget.
pub fn initialize(dataset: &Dataset, spec: &ModelSpec, quad: usize) -> Result<ParameterSet> {
    initialize_with(dataset, spec, quad, DEFAULT_INIT_ITERATIONS)
}

/// Two-stage separate fits followed by `rjm_iterations` BFGS iterations on
/// the regular joint model. η starts at zero.
pub fn initialize_with(
    dataset: &Dataset,
    spec: &ModelSpec,
    quad: usize,
    rjm_iterations: usize,
) -> Result<ParameterSet> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot initialize from an empty dataset".into(),
        ));
    }
    spec.validate()?;
    dataset.validate(Some(spec))?;
    let lmm = fit_lmm(dataset, spec)?;
    let (beta2, lambda) = fit_survival(dataset, spec)?;
    let rjm_spec = spec.with_copula(Copula::Independence);
    let mut start = ParameterSet {
        beta1: lmm.beta1,
        beta2,
        alpha: vec![0.0; spec.alpha_len()],
        d: lmm.d,
        sigma: lmm.sigma,
        lambda,
        eta: Vec::new(),
        nu: None,
    };
    if rjm_iterations > 0 {
        let lik = Likelihood::for_dataset(dataset, &rjm_spec, quad)?;
        let v0 = pack(&start, &rjm_spec)?;
        let objective = |v: &[f64]| match unpack(v, &rjm_spec).and_then(|p| lik.total(&p)) {
            Ok(e) => -e.loglik,
            Err(_) => f64::INFINITY,
        };
        let opts = OptimOptions {
            max_iter: rjm_iterations,
            ..Default::default()
        };
        let res = bfgs(objective, &v0, &opts);
        if res.fx.is_finite() {
            start = unpack(&res.x, &rjm_spec)?;
        }
    }
    start.eta = vec![0.0; spec.ell()];
    start.nu = match spec.copula {
        Copula::StudentT { nu } => Some(nu),
        _ => None,
    };
    Ok(start)
}
