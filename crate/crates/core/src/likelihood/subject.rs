use rayon::prelude::*;

use super::conditional::CopulaKernel;
use super::posterior::{gaussian_parts, PriorRE};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, ParameterSet, SubjectData, SubjectHazard};
use crate::numerics::gauss_hermite;

/// Gauss–Hermite nodes per random-effect dimension.
pub const DEFAULT_QUAD_NODES: usize = 9;

/// Design quantities that do not depend on θ.
#[derive(Debug, Clone)]
struct Prepared {
    /// n×p fixed-effects design, row-major.
    x: Vec<f64>,
    /// n×r random-effects design, row-major.
    z: Vec<f64>,
    /// n×ℓ correlation basis at the (domain-clamped) measurement times.
    corr: Vec<f64>,
}

impl Prepared {
    fn new(subject: &SubjectData, spec: &ModelSpec) -> Result<Self> {
        let n = subject.n_obs();
        let ell = spec.ell();
        let mut x = Vec::with_capacity(n * spec.p());
        let mut z = Vec::with_capacity(n * spec.r());
        let mut corr = vec![0.0; n * ell];
        let mut row = Vec::with_capacity(spec.p());
        for (j, &s) in subject.times.iter().enumerate() {
            spec.design_row(s, &subject.long_covariates, &mut row)?;
            x.extend_from_slice(&row);
            let (zr, used) = spec.random_effects.design(s);
            z.extend_from_slice(&zr[..used]);
            if ell > 0 {
                let basis = &spec.correlation_basis;
                basis.eval_into(basis.clamp_to_domain(s), &mut corr[j * ell..(j + 1) * ell])?;
            }
        }
        Ok(Self { x, z, corr })
    }
}

/// Result of a likelihood evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loglik: f64,
    /// Number of conditional-CDF values clamped away from {0, 1}.
    pub clamps: u64,
}

/// Observed-data log-likelihood of a fixed set of subjects under one spec,
/// with θ-independent design work done once.
pub struct Likelihood<'a> {
    spec: &'a ModelSpec,
    subjects: &'a [SubjectData],
    prepared: Vec<Prepared>,
    /// Standard GH nodes and ln(weight · π^{−r/2}).
    nodes: Vec<([f64; 2], f64)>,
    kernel: CopulaKernel,
}

/// Per-evaluation quantities shared by all subjects.
struct Context<'p> {
    params: &'p ParameterSet,
    prior: PriorRE,
}

impl<'a> Likelihood<'a> {
    pub fn new(
        subjects: &'a [SubjectData],
        spec: &'a ModelSpec,
        quad_nodes: usize,
    ) -> Result<Self> {
        spec.validate()?;
        let rule = gauss_hermite::<f64>(quad_nodes)?;
        let r = spec.r();
        let half_ln_pi = 0.5 * std::f64::consts::PI.ln();
        let nodes = rule
            .tensor(r)
            .into_iter()
            .map(|(x, w)| {
                let mut p = [0.0; 2];
                p[..r].copy_from_slice(&x);
                (p, w.ln() - r as f64 * half_ln_pi)
            })
            .collect();
        let prepared = subjects
            .iter()
            .map(|s| {
                s.validate(Some(spec))?;
                Prepared::new(s, spec).map_err(|e| e.in_subject(&s.id))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            subjects,
            prepared,
            nodes,
            kernel: CopulaKernel::new(spec.copula)?,
        })
    }

    pub fn for_dataset(
        dataset: &'a Dataset,
        spec: &'a ModelSpec,
        quad_nodes: usize,
    ) -> Result<Self> {
        Self::new(&dataset.subjects, spec, quad_nodes)
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    fn context<'p>(&self, params: &'p ParameterSet) -> Result<Context<'p>> {
        params.validate(self.spec)?;
        Ok(Context {
            params,
            prior: PriorRE::new(&params.d)?,
        })
    }

    /// Log-likelihood contribution of subject `i`.
    pub fn subject(&self, i: usize, params: &ParameterSet) -> Result<Evaluation> {
        let ctx = self.context(params)?;
        self.subject_with(i, &ctx)
            .map_err(|e| e.in_subject(&self.subjects[i].id))
    }

    /// Sum over subjects. Contributions are evaluated in parallel and added
    /// in sorted order, so the result depends neither on the worker count
    /// nor on the order of the subjects.
    pub fn total(&self, params: &ParameterSet) -> Result<Evaluation> {
        let ctx = self.context(params)?;
        let parts: Vec<Result<Evaluation>> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                self.subject_with(i, &ctx)
                    .map_err(|e| e.in_subject(&self.subjects[i].id))
            })
            .collect();
        let mut values = Vec::with_capacity(parts.len());
        let mut clamps = 0;
        for p in parts {
            let p = p?;
            values.push(p.loglik);
            clamps += p.clamps;
        }
        values.sort_by(f64::total_cmp);
        Ok(Evaluation {
            loglik: values.iter().sum(),
            clamps,
        })
    }

    /// Per-subject contributions in dataset order.
    pub fn contributions(&self, params: &ParameterSet) -> Result<Vec<f64>> {
        let ctx = self.context(params)?;
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                self.subject_with(i, &ctx)
                    .map(|e| e.loglik)
                    .map_err(|e| e.in_subject(&self.subjects[i].id))
            })
            .collect()
    }

    fn residuals(&self, i: usize, params: &ParameterSet) -> Vec<f64> {
        let subj = &self.subjects[i];
        let p = self.spec.p();
        let x = &self.prepared[i].x;
        subj.y
            .iter()
            .enumerate()
            .map(|(j, &y)| {
                let m: f64 = x[j * p..(j + 1) * p]
                    .iter()
                    .zip(&params.beta1)
                    .map(|(a, b)| a * b)
                    .sum();
                y - m
            })
            .collect()
    }

    fn rhos(&self, i: usize, params: &ParameterSet) -> Vec<f64> {
        let ell = self.spec.ell();
        let n = self.subjects[i].n_obs();
        if ell == 0 {
            return vec![0.0; n];
        }
        let c = &self.prepared[i].corr;
        (0..n)
            .map(|j| {
                c[j * ell..(j + 1) * ell]
                    .iter()
                    .zip(&params.eta)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .tanh()
            })
            .collect()
    }

    fn subject_with(&self, i: usize, ctx: &Context<'_>) -> Result<Evaluation> {
        let r = self.spec.r();
        let params = ctx.params;
        let e = self.residuals(i, params);
        let rho = self.rhos(i, params);
        let (ll_y, post) = gaussian_parts(&self.prepared[i].z, &e, r, params.sigma, &ctx.prior)?;
        let chol = post.covariance.clone().cholesky().ok_or_else(|| {
            Error::Conditioning("posterior covariance of b is not positive definite".into())
        })?;
        let l = chol.l();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut clamps = 0u32;
        let mut terms = Vec::with_capacity(self.nodes.len());
        let mut b = [0.0; 2];
        for (x, lw) in &self.nodes {
            for a in 0..r {
                let mut v = post.mean[a];
                for c in 0..=a {
                    v += sqrt2 * l[(a, c)] * x[c];
                }
                b[a] = v;
            }
            let lf = self.ln_event_density(i, &e, &rho, &b[..r], params, &mut clamps)?;
            terms.push(lw + lf);
        }
        let ln_int = log_sum_exp(&terms);
        if ln_int.is_nan() {
            return Err(Error::Evaluation(
                "NaN in the random-effects integral".into(),
            ));
        }
        if ln_int == f64::NEG_INFINITY {
            return Err(Error::Evaluation(
                "random-effects integral underflowed at every node".into(),
            ));
        }
        Ok(Evaluation {
            loglik: ll_y + ln_int,
            clamps: clamps as u64,
        })
    }

    /// ln f_T(t_i | y_i, b).
    fn ln_event_density(
        &self,
        i: usize,
        e: &[f64],
        rho: &[f64],
        b: &[f64],
        params: &ParameterSet,
        clamps: &mut u32,
    ) -> Result<f64> {
        let subj = &self.subjects[i];
        let r = self.spec.r();
        let z = &self.prepared[i].z;
        let hz = SubjectHazard::new(self.spec, params, &subj.surv_covariates, b);
        let zy = |j: usize| {
            let zb: f64 = z[j * r..(j + 1) * r]
                .iter()
                .zip(b)
                .map(|(a, c)| a * c)
                .sum();
            (e[j] - zb) / params.sigma
        };
        let times = &subj.times;
        let n = times.len();
        let mut ll = -hz.cumulative(0.0, times[0])?;
        for j in 0..n - 1 {
            let h = hz.cumulative(times[j], times[j + 1])?;
            ll += self.kernel.ln_survival_factor(h, zy(j), rho[j], clamps);
        }
        let h = hz.cumulative(times[n - 1], subj.event_time)?;
        ll += if subj.event {
            self.kernel.ln_event_factor(
                h,
                hz.ln_rate(subj.event_time)?,
                zy(n - 1),
                rho[n - 1],
                clamps,
            )
        } else {
            self.kernel
                .ln_survival_factor(h, zy(n - 1), rho[n - 1], clamps)
        };
        if ll.is_nan() {
            return Err(Error::Evaluation(format!(
                "NaN conditional event density at b = {b:?}"
            )));
        }
        Ok(ll)
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln f_T(t_i | y_i, b): the conditional density (or survival) of the
/// observed event time given the responses and random effects.
pub fn ln_conditional_event_density_given_y(
    subject: &SubjectData,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    if b.len() != spec.r() {
        return Err(Error::InvalidArgument(format!(
            "b has {} entries, expected {}",
            b.len(),
            spec.r()
        )));
    }
    let lik = Likelihood::new(std::slice::from_ref(subject), spec, 1)?;
    params.validate(spec)?;
    let e = lik.residuals(0, params);
    let rho = lik.rhos(0, params);
    let mut clamps = 0;
    lik.ln_event_density(0, &e, &rho, b, params, &mut clamps)
}

/// f_T(t_i | y_i, b).
pub fn conditional_event_density_given_y(
    subject: &SubjectData,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    Ok(ln_conditional_event_density_given_y(subject, b, params, spec)?.exp())
}

/// Log-likelihood contribution of one subject with `quad` adaptive
/// Gauss–Hermite nodes per random-effect dimension.
pub fn subject_loglik(
    subject: &SubjectData,
    params: &ParameterSet,
    spec: &ModelSpec,
    quad: usize,
) -> Result<f64> {
    let lik = Likelihood::new(std::slice::from_ref(subject), spec, quad)?;
    Ok(lik.subject(0, params)?.loglik)
}

/// Sum of subject contributions.
pub fn total_loglik(
    dataset: &Dataset,
    params: &ParameterSet,
    spec: &ModelSpec,
    quad: usize,
) -> Result<f64> {
    Ok(Likelihood::for_dataset(dataset, spec, quad)?
        .total(params)?
        .loglik)
}
