use serde::{Deserialize, Serialize};

use super::error::{invalid, NumericsError, Result};
use super::real::Real;

/// Clamped B-spline basis of a given order on a closed interval.
///
/// Boundary knots are repeated `order` times, so the basis has
/// `order + interior_knots.len()` functions, forms a partition of unity on
/// the domain and interpolates its first/last coefficient at the endpoints.
/// With no interior knots the basis is the Bernstein polynomial basis of
/// degree `order − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisConfig<T>", into = "BasisConfig<T>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct BSplineBasis<T: Real> {
    order: usize,
    lower: T,
    upper: T,
    interior: Vec<T>,
    knots: Vec<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BasisConfig<T> {
    order: usize,
    domain: [T; 2],
    #[serde(default)]
    interior_knots: Vec<T>,
}

impl<T: Real> TryFrom<BasisConfig<T>> for BSplineBasis<T> {
    type Error = NumericsError;

    fn try_from(c: BasisConfig<T>) -> Result<Self> {
        BSplineBasis::new(c.order, c.domain[0], c.domain[1], c.interior_knots)
    }
}

impl<T: Real> From<BSplineBasis<T>> for BasisConfig<T> {
    fn from(b: BSplineBasis<T>) -> Self {
        BasisConfig {
            order: b.order,
            domain: [b.lower, b.upper],
            interior_knots: b.interior,
        }
    }
}

impl<T: Real> BSplineBasis<T> {
    pub fn new(order: usize, lower: T, upper: T, interior: Vec<T>) -> Result<Self> {
        if order == 0 {
            return Err(invalid("B-spline order must be at least 1"));
        }
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(invalid(format!(
                "invalid B-spline domain [{lower}, {upper}]"
            )));
        }
        let mut prev = lower;
        for &k in &interior {
            if !(k > prev) || !(k < upper) {
                return Err(invalid(
                    "interior knots must be strictly increasing inside the domain",
                ));
            }
            prev = k;
        }
        let mut knots = Vec::with_capacity(2 * order + interior.len());
        knots.extend(std::iter::repeat_n(lower, order));
        knots.extend(interior.iter().copied());
        knots.extend(std::iter::repeat_n(upper, order));
        Ok(Self {
            order,
            lower,
            upper,
            interior,
            knots,
        })
    }

    /// `count` basis functions of order `count` (no interior knots).
    pub fn bernstein(count: usize, lower: T, upper: T) -> Result<Self> {
        Self::new(count, lower, upper, Vec::new())
    }

    /// Clamped basis with `interior` equally spaced interior knots.
    pub fn uniform(order: usize, lower: T, upper: T, interior: usize) -> Result<Self> {
        let step = (upper - lower) / T::n(interior + 1);
        let knots = (1..=interior).map(|k| lower + step * T::n(k)).collect();
        Self::new(order, lower, upper, knots)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions.
    #[inline]
    pub fn len(&self) -> usize {
        self.order + self.interior.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn domain(&self) -> (T, T) {
        (self.lower, self.upper)
    }

    pub fn interior_knots(&self) -> &[T] {
        &self.interior
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.lower && t <= self.upper
    }

    /// Clamps `t` into the basis domain.
    pub fn clamp_to_domain(&self, t: T) -> T {
        t.max(self.lower).min(self.upper)
    }

    /// Evaluates all basis functions at `t` (Cox–de Boor recursion).
    pub fn eval(&self, t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.len()];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Writes the basis values at `t` into `out` (length `len()`).
    pub fn eval_into(&self, t: T, out: &mut [T]) -> Result<()> {
        if !self.contains(t) {
            return Err(NumericsError::Domain {
                value: t.to_f64().unwrap_or(f64::NAN),
                lower: self.lower.to_f64().unwrap_or(f64::NAN),
                upper: self.upper.to_f64().unwrap_or(f64::NAN),
            });
        }
        assert_eq!(out.len(), self.len(), "output slice has wrong length");
        out.iter_mut().for_each(|v| *v = T::zero());
        let k = self.order;
        let n = self.len();
        // span index mu with knots[mu] <= t < knots[mu+1]; the right endpoint
        // belongs to the last non-degenerate span
        let mu = if t >= self.upper {
            n - 1
        } else {
            let mut lo = k - 1;
            let mut hi = n;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.knots[mid] <= t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        // triangular de Boor scheme for the k nonzero functions N_{mu-k+1..mu}
        let mut values = vec![T::zero(); k];
        values[0] = T::one();
        let mut left = vec![T::zero(); k];
        let mut right = vec![T::zero(); k];
        for j in 1..k {
            left[j] = t - self.knots[mu + 1 - j];
            right[j] = self.knots[mu + j] - t;
            let mut saved = T::zero();
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom > T::zero() {
                    values[r] / denom
                } else {
                    T::zero()
                };
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        let first = mu + 1 - k;
        out[first..first + k].copy_from_slice(&values);
        Ok(())
    }

    /// Σ_k B_k(t)·coef_k.
    pub fn combine(&self, t: T, coef: &[T]) -> Result<T> {
        if coef.len() != self.len() {
            return Err(invalid(format!(
                "expected {} spline coefficients, got {}",
                self.len(),
                coef.len()
            )));
        }
        let b = self.eval(t)?;
        Ok(b.iter()
            .zip(coef)
            .fold(T::zero(), |acc, (&x, &c)| acc + x * c))
    }
}
