use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::curve::CorrelationCurve;
use super::spec::{Copula, ModelSpec};
use crate::error::{Error, Result};

/// Full parameter vector θ on the natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    /// Length 1 (shared) or r (per component).
    pub alpha: Vec<f64>,
    #[serde(rename = "D", with = "matrix_rows")]
    pub d: DMatrix<f64>,
    pub sigma: f64,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

impl ParameterSet {
    #[inline]
    pub fn alpha_at(&self, k: usize) -> f64 {
        if self.alpha.len() == 1 {
            self.alpha[0]
        } else {
            self.alpha[k]
        }
    }

    /// Checks dimensions against `spec` and the positivity constraints.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameters(m));
        let r = spec.r();
        if self.beta1.len() != spec.p() {
            return bad(format!(
                "beta1 has {} entries, expected {}",
                self.beta1.len(),
                spec.p()
            ));
        }
        if self.beta2.len() != spec.q() {
            return bad(format!(
                "beta2 has {} entries, expected {}",
                self.beta2.len(),
                spec.q()
            ));
        }
        if self.alpha.len() != spec.alpha_len() {
            return bad(format!(
                "alpha has {} entries, expected {}",
                self.alpha.len(),
                spec.alpha_len()
            ));
        }
        if self.d.nrows() != r || self.d.ncols() != r {
            return bad(format!("D must be {r}x{r}"));
        }
        if (0..r).any(|i| (0..i).any(|j| self.d[(i, j)] != self.d[(j, i)])) {
            return bad("D is not symmetric".into());
        }
        if self.d.clone().cholesky().is_none() {
            return bad("D is not positive definite".into());
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.lambda.len() != spec.k() {
            return bad(format!(
                "lambda has {} entries, expected {}",
                self.lambda.len(),
                spec.k()
            ));
        }
        if self.lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return bad("baseline hazards must be positive".into());
        }
        if self.eta.len() != spec.ell() {
            return bad(format!(
                "eta has {} entries, expected {}",
                self.eta.len(),
                spec.ell()
            ));
        }
        if let Some(nu) = self.nu {
            if !(nu > 2.0) {
                return bad(format!("nu must exceed 2, got {nu}"));
            }
        }
        if let (Copula::StudentT { nu }, Some(own)) = (spec.copula, self.nu) {
            if nu != own {
                return bad(format!("nu {own} differs from the spec's {nu}"));
            }
        }
        let all = self
            .beta1
            .iter()
            .chain(&self.beta2)
            .chain(&self.alpha)
            .chain(&self.eta);
        if all.into_iter().any(|v| !v.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        Ok(())
    }

    /// Correlation curve for copula models.
    pub fn curve(&self, spec: &ModelSpec) -> Option<CorrelationCurve<f64>> {
        if spec.ell() == 0 {
            return None;
        }
        CorrelationCurve::new(spec.correlation_basis.clone(), self.eta.clone()).ok()
    }

    /// Copula correlation at time s (0 under independence). The correlation
    /// domain is clamped.
    #[inline]
    pub fn rho_at(&self, spec: &ModelSpec, s: f64) -> Result<f64> {
        if spec.ell() == 0 {
            return Ok(0.0);
        }
        let b = &spec.correlation_basis;
        Ok(b.combine(b.clamp_to_domain(s), &self.eta)?.tanh())
    }

    /// Named natural-scale entries in a fixed order.
    pub fn named_values(&self, spec: &ModelSpec) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (n, v) in spec.fixed_effect_names().iter().zip(&self.beta1) {
            out.push((format!("beta1[{n}]"), *v));
        }
        for (n, v) in spec.surv_covariates.iter().zip(&self.beta2) {
            out.push((format!("beta2[{n}]"), *v));
        }
        if self.alpha.len() == 1 {
            out.push(("alpha".into(), self.alpha[0]));
        } else {
            for (k, v) in self.alpha.iter().enumerate() {
                out.push((format!("alpha[{}]", k + 1), *v));
            }
        }
        let r = self.d.nrows();
        for i in 0..r {
            for j in i..r {
                out.push((format!("D[{},{}]", i + 1, j + 1), self.d[(i, j)]));
            }
        }
        out.push(("sigma".into(), self.sigma));
        for (k, v) in self.lambda.iter().enumerate() {
            out.push((format!("lambda[{}]", k + 1), *v));
        }
        for (k, v) in self.eta.iter().enumerate() {
            out.push((format!("eta[{}]", k + 1), *v));
        }
        out
    }
}

pub(crate) mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
    }
}

pub(crate) mod opt_matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::matrix_rows::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::matrix_rows")] DMatrix<f64>);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
