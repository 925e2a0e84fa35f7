use nalgebra::DMatrix;

use crate::numerics::{BSplineBasis, NumericsError, Real};

/// Time-varying copula correlation ρ(t) = tanh(B(t)ᵀη).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve<T: Real> {
    pub basis: BSplineBasis<T>,
    pub eta: Vec<T>,
    /// Covariance of η̂, used for pointwise bands.
    pub eta_covariance: Option<DMatrix<T>>,
}

/// Pointwise band for ρ(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint<T> {
    pub t: T,
    pub rho: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> CorrelationCurve<T> {
    pub fn new(basis: BSplineBasis<T>, eta: Vec<T>) -> Result<Self, NumericsError> {
        if eta.len() != basis.len() {
            return Err(NumericsError::InvalidArgument(format!(
                "eta has {} entries, basis has {}",
                eta.len(),
                basis.len()
            )));
        }
        Ok(Self {
            basis,
            eta,
            eta_covariance: None,
        })
    }

    pub fn with_covariance(mut self, cov: DMatrix<T>) -> Result<Self, NumericsError> {
        if cov.nrows() != self.eta.len() || cov.ncols() != self.eta.len() {
            return Err(NumericsError::InvalidArgument(
                "eta covariance has the wrong shape".into(),
            ));
        }
        self.eta_covariance = Some(cov);
        Ok(self)
    }

    /// Fisher-z scale r(t).
    pub fn eval_r(&self, t: T) -> Result<T, NumericsError> {
        self.basis.combine(t, &self.eta)
    }

    pub fn eval_rho(&self, t: T) -> Result<T, NumericsError> {
        Ok(self.eval_r(t)?.tanh())
    }

    /// Kendall's τ(t) = (2/π) asin ρ(t).
    pub fn eval_tau(&self, t: T) -> Result<T, NumericsError> {
        Ok(rho_to_tau(self.eval_rho(t)?))
    }

    /// Delta-method band r̂ ± z·sd(r̂) mapped through tanh.
    pub fn band(&self, t: T, z: T) -> Result<BandPoint<T>, NumericsError> {
        let cov = self.eta_covariance.as_ref().ok_or_else(|| {
            NumericsError::InvalidArgument("no covariance for the correlation coefficients".into())
        })?;
        let b = self.basis.eval(t)?;
        let r = b
            .iter()
            .zip(&self.eta)
            .fold(T::zero(), |a, (&bi, &e)| a + bi * e);
        let mut var = T::zero();
        for i in 0..b.len() {
            for j in 0..b.len() {
                var = var + b[i] * cov[(i, j)] * b[j];
            }
        }
        let sd = var.max(T::zero()).sqrt();
        Ok(BandPoint {
            t,
            rho: r.tanh(),
            lower: (r - z * sd).tanh(),
            upper: (r + z * sd).tanh(),
        })
    }
}

pub fn rho_to_tau<T: Real>(rho: T) -> T {
    T::c(2.0) / T::PI() * rho.asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn increasing() -> CorrelationCurve<f64> {
        let basis = BSplineBasis::bernstein(4, 0.0, 10.2).unwrap();
        CorrelationCurve::new(basis, vec![0.0, 0.75, 0.65, 1.8]).unwrap()
    }

    #[test]
    fn endpoints_pick_outer_coefficients() {
        let c = increasing();
        assert_eq!(c.eval_r(0.0).unwrap(), 0.0);
        assert!((c.eval_r(10.2).unwrap() - 1.8).abs() < 1e-14);
        assert!(c.eval_r(10.3).is_err());
    }

    #[test]
    fn rho_and_tau_at_right_end() {
        let c = increasing();
        let rho = c.eval_rho(10.2).unwrap();
        assert!((rho - 0.946_806_012_846_268).abs() < 1e-12);
        let tau = c.eval_tau(10.2).unwrap();
        // (2/π)·asin(tanh 1.8)
        assert!((tau - 0.791_420_989_845_361_7).abs() < 1e-12, "{tau}");
    }

    #[test]
    fn zero_eta_is_independence() {
        let basis = BSplineBasis::bernstein(5, 0.0, 10.0).unwrap();
        let c = CorrelationCurve::new(basis, vec![0.0; 5]).unwrap();
        for t in [0.0, 3.3, 10.0] {
            assert_eq!(c.eval_rho(t).unwrap(), 0.0);
            assert_eq!(c.eval_tau(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn band_collapses_without_uncertainty_and_stays_inside() {
        let c = increasing().with_covariance(DMatrix::zeros(4, 4)).unwrap();
        let p = c.band(4.0, 1.96).unwrap();
        assert_eq!(p.lower, p.rho);
        assert_eq!(p.upper, p.rho);
        let c = increasing()
            .with_covariance(DMatrix::identity(4, 4) * 25.0)
            .unwrap();
        let p = c.band(9.0, 1.96).unwrap();
        assert!(p.lower > -1.0 && p.upper < 1.0 && p.lower < p.rho && p.rho < p.upper);
    }

    #[test]
    fn f32_curve() {
        let basis = BSplineBasis::<f32>::bernstein(4, 0.0, 10.2).unwrap();
        let c = CorrelationCurve::new(basis, vec![0.0, 0.75, 0.65, 1.8]).unwrap();
        assert!((c.eval_rho(10.2).unwrap() - 0.946_806).abs() < 1e-5);
    }
}
