use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::BSplineBasis;

/// How time enters the fixed-effects design of the longitudinal sub-model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeTrend {
    /// Intercept and linear time columns.
    Linear,
    /// Clamped B-spline population mean μ(t); no separate intercept since
    /// the basis sums to one.
    Spline { basis: BSplineBasis<f64> },
}

/// Random-effects design z(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomEffects {
    /// z(t) = (1)
    Intercept,
    /// z(t) = (1, t)
    InterceptSlope,
}

impl RandomEffects {
    pub fn dim(self) -> usize {
        match self {
            RandomEffects::Intercept => 1,
            RandomEffects::InterceptSlope => 2,
        }
    }

    /// z(t) written into a fixed-size buffer; returns the used prefix length.
    #[inline]
    pub fn design(self, t: f64) -> ([f64; 2], usize) {
        match self {
            RandomEffects::Intercept => ([1.0, 0.0], 1),
            RandomEffects::InterceptSlope => ([1.0, t], 2),
        }
    }
}

/// Association structure α in the hazard exponent z(t)ᵀ(α ∘ b).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlphaStructure {
    /// One α shared by every random-effect component.
    #[default]
    Shared,
    /// A separate α per random-effect component.
    PerComponent,
}

/// Copula linking the conditional event-time and longitudinal CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Copula {
    /// Conditional independence given the random effects (regular joint model).
    Independence,
    Gaussian,
    StudentT {
        nu: f64,
    },
}

impl Copula {
    pub fn has_correlation(self) -> bool {
        !matches!(self, Copula::Independence)
    }

    pub fn label(self) -> String {
        match self {
            Copula::Independence => "independence".into(),
            Copula::Gaussian => "gaussian".into(),
            Copula::StudentT { nu } => format!("student_t({nu})"),
        }
    }
}

/// Piecewise-constant baseline hazard grid 0 = v₀ < v₁ < … < v_K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BaselineHazard {
    knots: Vec<f64>,
}

impl TryFrom<Vec<f64>> for BaselineHazard {
    type Error = Error;

    fn try_from(knots: Vec<f64>) -> Result<Self> {
        Self::new(knots)
    }
}

impl From<BaselineHazard> for Vec<f64> {
    fn from(b: BaselineHazard) -> Self {
        b.knots
    }
}

impl BaselineHazard {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidArgument(
                "baseline hazard needs at least one piece".into(),
            ));
        }
        if knots[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "first baseline knot must be 0".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "baseline knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots })
    }

    /// `pieces` equally spaced intervals on [0, t_max].
    pub fn equally_spaced(pieces: usize, t_max: f64) -> Result<Self> {
        if pieces == 0 {
            return Err(Error::InvalidArgument(
                "baseline hazard needs at least one piece".into(),
            ));
        }
        let mut knots: Vec<f64> = (0..pieces)
            .map(|k| t_max * k as f64 / pieces as f64)
            .collect();
        knots.push(t_max);
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of pieces K.
    pub fn pieces(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Zero-based piece index k with v_k < t ≤ v_{k+1} (t = 0 maps to the
    /// first piece).
    pub fn piece(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t > self.horizon() {
            return Err(Error::Numerics(crate::numerics::NumericsError::Domain {
                value: t,
                lower: 0.0,
                upper: self.horizon(),
            }));
        }
        let idx = self.knots.partition_point(|&v| v < t);
        Ok(idx.max(1) - 1)
    }
}

/// Declarative description of both sub-models and the copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Names of baseline covariates entering the longitudinal fixed effects
    /// after the time-trend columns.
    pub long_covariates: Vec<String>,
    /// Names of baseline covariates in the hazard.
    pub surv_covariates: Vec<String>,
    pub time_trend: TimeTrend,
    pub random_effects: RandomEffects,
    #[serde(default)]
    pub alpha: AlphaStructure,
    pub baseline: BaselineHazard,
    pub copula: Copula,
    /// Basis for the Fisher-z correlation r(t); unused under independence.
    pub correlation_basis: BSplineBasis<f64>,
}

impl ModelSpec {
    /// Number of fixed-effect columns p.
    pub fn p(&self) -> usize {
        self.trend_columns() + self.long_covariates.len()
    }

    pub fn q(&self) -> usize {
        self.surv_covariates.len()
    }

    pub fn r(&self) -> usize {
        self.random_effects.dim()
    }

    pub fn k(&self) -> usize {
        self.baseline.pieces()
    }

    /// Number of correlation-spline coefficients actually estimated.
    pub fn ell(&self) -> usize {
        if self.copula.has_correlation() {
            self.correlation_basis.len()
        } else {
            0
        }
    }

    pub fn alpha_len(&self) -> usize {
        match self.alpha {
            AlphaStructure::Shared => 1,
            AlphaStructure::PerComponent => self.r(),
        }
    }

    fn trend_columns(&self) -> usize {
        match &self.time_trend {
            TimeTrend::Linear => 2,
            TimeTrend::Spline { basis } => basis.len(),
        }
    }

    /// Column names of the fixed-effects design.
    pub fn fixed_effect_names(&self) -> Vec<String> {
        let mut names: Vec<String> = match &self.time_trend {
            TimeTrend::Linear => vec!["intercept".into(), "time".into()],
            TimeTrend::Spline { basis } => (1..=basis.len()).map(|k| format!("mu{k}")).collect(),
        };
        names.extend(self.long_covariates.iter().cloned());
        names
    }

    /// Fixed-effects design row x(s) for baseline covariates `cov`.
    pub fn design_row(&self, s: f64, cov: &[f64], out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        match &self.time_trend {
            TimeTrend::Linear => {
                out.push(1.0);
                out.push(s);
            }
            TimeTrend::Spline { basis } => out.extend(basis.eval(s)?),
        }
        out.extend_from_slice(cov);
        Ok(())
    }

    /// Same spec with a different copula.
    pub fn with_copula(&self, copula: Copula) -> Self {
        Self {
            copula,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Copula::StudentT { nu } = self.copula {
            if !(nu > 2.0) {
                return Err(Error::InvalidArgument(format!(
                    "t copula requires nu > 2, got {nu}"
                )));
            }
        }
        Ok(())
    }
}
