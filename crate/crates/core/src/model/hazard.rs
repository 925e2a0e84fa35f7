use super::data::SubjectData;
use super::params::ParameterSet;
use super::spec::{ModelSpec, RandomEffects};
use crate::error::{Error, Result};
use crate::numerics::NumericsError;

/// Subject hazard h(t) = λ_k exp(c + a·t) on piece k, where c collects
/// wᵀβ₂ plus the intercept association and a the slope association.
#[derive(Debug, Clone, Copy)]
pub struct SubjectHazard<'a> {
    knots: &'a [f64],
    lambda: &'a [f64],
    c: f64,
    a: f64,
}

impl<'a> SubjectHazard<'a> {
    pub fn new(spec: &'a ModelSpec, params: &'a ParameterSet, w: &[f64], b: &[f64]) -> Self {
        let lp: f64 = w.iter().zip(&params.beta2).map(|(x, y)| x * y).sum();
        let (c, a) = match spec.random_effects {
            RandomEffects::Intercept => (lp + params.alpha_at(0) * b[0], 0.0),
            RandomEffects::InterceptSlope => {
                (lp + params.alpha_at(0) * b[0], params.alpha_at(1) * b[1])
            }
        };
        Self::from_parts(spec.baseline.knots(), &params.lambda, c, a)
    }

    pub fn from_parts(knots: &'a [f64], lambda: &'a [f64], c: f64, a: f64) -> Self {
        Self {
            knots,
            lambda,
            c,
            a,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    fn piece(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t > self.horizon() {
            return Err(NumericsError::Domain {
                value: t,
                lower: 0.0,
                upper: self.horizon(),
            }
            .into());
        }
        Ok(self.knots.partition_point(|&v| v < t).max(1) - 1)
    }

    pub fn ln_rate(&self, t: f64) -> Result<f64> {
        let k = self.piece(t)?;
        Ok(self.lambda[k].ln() + self.c + self.a * t)
    }

    pub fn rate(&self, t: f64) -> Result<f64> {
        Ok(self.ln_rate(t)?.exp())
    }

    /// ∫_{u0}^{u1} of the hazard within piece k.
    #[inline]
    fn piece_integral(&self, k: usize, u0: f64, u1: f64) -> f64 {
        let dt = u1 - u0;
        if dt <= 0.0 {
            return 0.0;
        }
        let x = self.a * dt;
        let ratio = if x == 0.0 { 1.0 } else { x.exp_m1() / x };
        self.lambda[k] * (self.c + self.a * u0).exp() * dt * ratio
    }

    /// Cumulative hazard H(s, t) = ∫_s^t h(u) du.
    pub fn cumulative(&self, s: f64, t: f64) -> Result<f64> {
        if t < s {
            return Err(Error::InvalidArgument(format!(
                "cumulative hazard needs t >= s, got s={s}, t={t}"
            )));
        }
        let k0 = self.piece(s)?;
        let k1 = self.piece(t)?;
        let mut h = 0.0;
        for k in k0..=k1 {
            let lo = if k == k0 { s } else { self.knots[k] };
            let hi = if k == k1 { t } else { self.knots[k + 1] };
            h += self.piece_integral(k, lo, hi);
        }
        Ok(h)
    }

    /// Smallest t ≥ s with H(s, t) = target, or `None` when the hazard
    /// accumulated up to the horizon falls short.
    pub fn invert(&self, s: f64, target: f64) -> Result<Option<f64>> {
        if !(target >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cumulative hazard target {target}"
            )));
        }
        let mut k = self.piece(s)?;
        let mut u0 = s;
        let mut rem = target;
        loop {
            let u1 = self.knots[k + 1];
            let full = self.piece_integral(k, u0, u1);
            if rem <= full {
                let scale = self.lambda[k] * (self.c + self.a * u0).exp();
                let dt = if self.a == 0.0 {
                    rem / scale
                } else {
                    (rem * self.a / scale).ln_1p() / self.a
                };
                return Ok(Some((u0 + dt).clamp(u0, u1)));
            }
            rem -= full;
            k += 1;
            if k + 1 >= self.knots.len() {
                return Ok(None);
            }
            u0 = u1;
        }
    }
}

/// Mean of y_ij given b: x(s_ij)ᵀβ₁ + z(s_ij)ᵀb.
pub fn linear_predictor_long(
    subject: &SubjectData,
    j: usize,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    if j >= subject.n_obs() {
        return Err(Error::InvalidArgument(format!(
            "observation {j} out of range"
        )));
    }
    if b.len() != spec.r() || params.beta1.len() != spec.p() {
        return Err(Error::InvalidArgument(
            "dimension mismatch in linear predictor".into(),
        ));
    }
    let s = subject.times[j];
    let mut x = Vec::with_capacity(spec.p());
    spec.design_row(s, &subject.long_covariates, &mut x)?;
    if x.len() != params.beta1.len() {
        return Err(Error::InvalidArgument(
            "covariate dimension mismatch".into(),
        ));
    }
    let (z, r) = spec.random_effects.design(s);
    let fixed: f64 = x.iter().zip(&params.beta1).map(|(a, b)| a * b).sum();
    let random: f64 = z[..r].iter().zip(b).map(|(a, b)| a * b).sum();
    Ok(fixed + random)
}

/// h_i(t | b).
pub fn hazard(
    subject: &SubjectData,
    t: f64,
    b: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<f64> {
    if b.len() != spec.r() || subject.surv_covariates.len() != params.beta2.len() {
        return Err(Error::InvalidArgument(
            "dimension mismatch in hazard".into(),
        ));
    }
    SubjectHazard::new(spec, params, &subject.surv_covariates, b).rate(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{AlphaStructure, BaselineHazard, Copula, TimeTrend};
    use crate::numerics::BSplineBasis;
    use nalgebra::DMatrix;

    fn spec(pieces: usize, re: RandomEffects, q: usize) -> ModelSpec {
        ModelSpec {
            long_covariates: vec![],
            surv_covariates: (0..q).map(|k| format!("w{k}")).collect(),
            time_trend: TimeTrend::Linear,
            random_effects: re,
            alpha: AlphaStructure::Shared,
            baseline: BaselineHazard::equally_spaced(pieces, 10.0).unwrap(),
            copula: Copula::Independence,
            correlation_basis: BSplineBasis::bernstein(4, 0.0, 10.0).unwrap(),
        }
    }

    fn params(lambda: Vec<f64>, beta2: Vec<f64>, alpha: f64, r: usize) -> ParameterSet {
        ParameterSet {
            beta1: vec![10.0, 0.0],
            beta2,
            alpha: vec![alpha],
            d: DMatrix::identity(r, r),
            sigma: 1.0,
            lambda,
            eta: vec![],
            nu: None,
        }
    }

    fn subject(w: Vec<f64>) -> SubjectData {
        SubjectData {
            id: "1".into(),
            times: vec![0.0, 2.0],
            y: vec![0.0, 0.0],
            long_covariates: vec![],
            surv_covariates: w,
            event_time: 3.0,
            event: false,
        }
    }

    #[test]
    fn linear_predictor_arithmetic() {
        let sp = spec(1, RandomEffects::InterceptSlope, 0);
        let p = params(vec![0.1], vec![], 0.0, 2);
        let m = linear_predictor_long(&subject(vec![]), 1, &[1.0, -0.1], &p, &sp).unwrap();
        assert!((m - 10.8).abs() < 1e-14);
        let mut p0 = p.clone();
        p0.beta1 = vec![0.0, 0.0];
        assert_eq!(
            linear_predictor_long(&subject(vec![]), 0, &[0.0, 0.0], &p0, &sp).unwrap(),
            0.0
        );
        assert!(linear_predictor_long(&subject(vec![]), 0, &[0.0], &p0, &sp).is_err());
    }

    #[test]
    fn hazard_values() {
        let sp = spec(1, RandomEffects::InterceptSlope, 1);
        let p = params(vec![0.1], vec![0.0], 0.0, 2);
        for t in [0.0, 1.0, 9.9] {
            assert!(
                (hazard(&subject(vec![1.0]), t, &[0.3, 0.2], &p, &sp).unwrap() - 0.1).abs() < 1e-15
            );
        }
        let p = params(vec![0.1], vec![2f64.ln()], 0.0, 2);
        assert!(
            (hazard(&subject(vec![1.0]), 4.0, &[0.0, 0.0], &p, &sp).unwrap() - 0.2).abs() < 1e-15
        );
        assert!(hazard(&subject(vec![1.0]), 10.5, &[0.0, 0.0], &p, &sp).is_err());
    }

    #[test]
    fn pieces_are_left_open() {
        let sp = spec(2, RandomEffects::Intercept, 0);
        let p = params(vec![0.1, 0.3], vec![], 0.0, 1);
        let h = SubjectHazard::new(&sp, &p, &[], &[0.0]);
        assert!((h.rate(5.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((h.rate(5.0 + 1e-12).unwrap() - 0.3).abs() < 1e-15);
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn cumulative_matches_quadrature_with_slope_tilt() {
        let sp = spec(4, RandomEffects::InterceptSlope, 1);
        let p = params(vec![0.05, 0.2, 0.1, 0.4], vec![0.7], -0.5, 2);
        let w = [1.0];
        let b = [0.4, -0.3];
        let h = SubjectHazard::new(&sp, &p, &w, &b);
        let (s, t) = (1.3, 8.7);
        // integrate piece by piece so the integrand is smooth on each
        let knots = [s, 2.5, 5.0, 7.5, t];
        let want: f64 = knots
            .windows(2)
            .map(|ab| {
                let mid = 0.5 * (ab[0] + ab[1]);
                let k = sp.baseline.piece(mid).unwrap();
                let scale = p.lambda[k];
                simpson(
                    |u| scale * (0.7 + 0.5 * -0.4 + 0.5 * 0.3 * u).exp(),
                    ab[0],
                    ab[1],
                    2000,
                )
            })
            .sum();
        let got = h.cumulative(s, t).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} {want}");
        assert_eq!(h.cumulative(s, s).unwrap(), 0.0);
        assert!(h.cumulative(t, s).is_err());
    }

    #[test]
    fn inversion_round_trip() {
        let sp = spec(4, RandomEffects::InterceptSlope, 1);
        for (alpha, b1) in [(0.0, 0.0), (-0.5, 0.6), (-0.5, -0.6)] {
            let p = params(vec![0.05, 0.2, 0.1, 0.4], vec![0.7], alpha, 2);
            let b = [0.4, b1];
            let h = SubjectHazard::new(&sp, &p, &[1.0], &b);
            let s = 0.7;
            let total = h.cumulative(s, 10.0).unwrap();
            for frac in [0.0, 0.1, 0.5, 0.99, 1.0] {
                let target = frac * total;
                let t = h.invert(s, target).unwrap().unwrap();
                let back = h.cumulative(s, t).unwrap();
                assert!(
                    (back - target).abs() < 1e-12 * total.max(1.0),
                    "{back} {target}"
                );
            }
            assert_eq!(h.invert(s, total * 1.01).unwrap(), None);
        }
    }

    #[test]
    fn exponential_median() {
        let sp = spec(1, RandomEffects::Intercept, 0);
        let p = params(vec![0.1], vec![], 0.0, 1);
        let h = SubjectHazard::new(&sp, &p, &[], &[0.0]);
        let t = h.invert(0.0, 2f64.ln()).unwrap().unwrap();
        assert!((t - 6.931_471_805_599_453).abs() < 1e-12);
    }
}
