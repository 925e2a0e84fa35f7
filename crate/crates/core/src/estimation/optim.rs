//! Derivative-free minimizers: BFGS on central-difference gradients with an
//! Armijo backtracking line search, and adaptive Nelder–Mead.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    /// Absolute objective change for convergence.
    pub ftol: f64,
    /// Largest parameter change for convergence.
    pub xtol: f64,
    /// Gradient infinity norm accepted as stationary.
    pub gtol: f64,
    pub max_iter: usize,
    /// Cap on the infinity norm of a quasi-Newton step.
    pub max_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-6,
            xtol: 1e-5,
            gtol: 1e-4,
            max_iter: 2000,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
    NonFiniteStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: OptimStatus,
    /// Final gradient infinity norm (quasi-Newton) or simplex diameter
    /// (Nelder–Mead).
    pub measure: f64,
}

struct Counted<F> {
    f: F,
    n: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.n += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut Counted<F>, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f.eval(&xp);
        xp[i] = x[i] - h;
        let fm = f.eval(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` from `x0` by BFGS with finite-difference gradients.
/// Non-finite objective values are treated as +∞.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let mut f = Counted { f, n: 0 };
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f.eval(&x);
    if !fx.is_finite() {
        return OptimResult {
            x,
            fx,
            iterations: 0,
            evaluations: f.n,
            status: OptimStatus::NonFiniteStart,
            measure: f64::NAN,
        };
    }
    let mut g = fd_gradient(&mut f, &x);
    let mut hinv = vec![vec![0.0; n]; n];
    let reset = |h: &mut Vec<Vec<f64>>, scale: f64| {
        for (i, row) in h.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[i] = scale;
        }
    };
    reset(&mut hinv, 1.0);
    let mut status = OptimStatus::MaxIterations;
    let mut iter = 0;
    let mut first = true;
    while iter < opts.max_iter {
        iter += 1;
        if inf_norm(&g) < opts.gtol {
            status = OptimStatus::Converged;
            break;
        }
        let mut d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| hinv[i][j] * g[j]).sum::<f64>())
            .collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            reset(&mut hinv, 1.0);
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let dn = inf_norm(&d);
        if dn > opts.max_step {
            let s = opts.max_step / dn;
            d.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fxn = f.eval(&xn);
            if fxn <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fxn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn)) = accepted else {
            // a steepest-descent retry before giving up
            if hinv[0][0] != 1.0 || (0..n).any(|i| (0..n).any(|j| i != j && hinv[i][j] != 0.0)) {
                reset(&mut hinv, 1.0);
                continue;
            }
            status = OptimStatus::LineSearchFailed;
            break;
        };
        let gn = fd_gradient(&mut f, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let df = fx - fxn;
        let dx = inf_norm(&s);
        x = xn;
        fx = fxn;
        g = gn;
        if df.abs() < opts.ftol && dx < opts.xtol {
            status = OptimStatus::Converged;
            break;
        }
        if sy > 1e-12 * inf_norm(&s) * inf_norm(&y).max(1e-300) && sy > 0.0 {
            if first {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                reset(&mut hinv, sy / yy);
                first = false;
            }
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| hinv[i][j] * y[j]).sum())
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
    }
    OptimResult {
        x,
        fx,
        iterations: iter,
        evaluations: f.n,
        status,
        measure: inf_norm(&g),
    }
}

/// Adaptive Nelder–Mead (dimension-dependent coefficients) from an axis
/// simplex with edge lengths `scale`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: f64,
    opts: &OptimOptions,
) -> OptimResult {
    let mut f = Counted { f, n: 0 };
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f.eval(x0);
    if !f0.is_finite() {
        return OptimResult {
            x: x0.to_vec(),
            fx: f0,
            iterations: 0,
            evaluations: f.n,
            status: OptimStatus::NonFiniteStart,
            measure: f64::NAN,
        };
    }
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale * x0[i].abs().max(1.0);
        let fv = f.eval(&v);
        simplex.push((v, fv));
    }
    let diameter = |s: &[(Vec<f64>, f64)]| {
        s[1..].iter().fold(0.0_f64, |m, (v, _)| {
            m.max(
                v.iter()
                    .zip(&s[0].0)
                    .fold(0.0_f64, |a, (p, q)| a.max((p - q).abs())),
            )
        })
    };
    let mut status = OptimStatus::MaxIterations;
    let mut iter = 0;
    while iter < opts.max_iter {
        iter += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < opts.ftol && diameter(&simplex) < opts.xtol {
            status = OptimStatus::Converged;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = f.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = f.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(alpha * rho);
            let fc = f.eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f.eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for item in simplex.iter_mut().skip(1) {
            let v: Vec<f64> = best
                .iter()
                .zip(&item.0)
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            let fv = f.eval(&v);
            *item = (v, fv);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let measure = diameter(&simplex);
    let (x, fx) = simplex.swap_remove(0);
    OptimResult {
        x,
        fx,
        iterations: iter,
        evaluations: f.n,
        status,
        measure,
    }
}
