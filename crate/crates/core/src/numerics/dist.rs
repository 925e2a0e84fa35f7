//! Univariate and bivariate normal / Student-t densities, distribution
//! functions and quantiles.

use super::error::{invalid, Result};
use super::real::Real;
use super::roots::newton_bisect;
use super::special::{erfc, inc_beta_with_ln_beta, ln_beta, ln_erfc, ln_gamma};

/// Standard normal density φ(z).
#[inline]
pub fn normal_pdf<T: Real>(z: T) -> T {
    normal_ln_pdf(z).exp()
}

/// ln φ(z).
#[inline]
pub fn normal_ln_pdf<T: Real>(z: T) -> T {
    -T::c(0.5) * z * z - T::c(0.918_938_533_204_672_7)
}

/// Standard normal distribution function Φ(z).
#[inline]
pub fn normal_cdf<T: Real>(z: T) -> T {
    T::c(0.5) * erfc(-z * T::FRAC_1_SQRT_2())
}

/// ln Φ(z), accurate deep in the lower tail.
pub fn normal_ln_cdf<T: Real>(z: T) -> T {
    if z < T::c(-1.0) {
        T::c(0.5).ln() + ln_erfc(-z * T::FRAC_1_SQRT_2())
    } else {
        (-T::c(0.5) * erfc(z * T::FRAC_1_SQRT_2())).ln_1p()
    }
}

// Wichura's AS 241 (PPND16) coefficients.
const Q_A: [f64; 8] = [
    3.387_132_872_796_366_5,
    133.141_667_891_784_38,
    1_971.590_950_306_551_4,
    13_731.693_765_509_461,
    45_921.953_931_549_87,
    67_265.770_927_008_7,
    33_430.575_583_588_13,
    2_509.080_928_730_122_7,
];
const Q_B: [f64; 8] = [
    1.0,
    42.313_330_701_600_91,
    687.187_007_492_057_9,
    5_394.196_021_424_751,
    21_213.794_301_586_597,
    39_307.895_800_092_71,
    28_729.085_735_721_943,
    5_226.495_278_852_854_5,
];
const Q_C: [f64; 8] = [
    1.423_437_110_749_683_6,
    4.630_337_846_156_545,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    0.241_780_725_177_450_6,
    0.022_723_844_989_269_184,
    7.745_450_142_783_414e-4,
];
const Q_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_8,
    1.676_384_830_183_803_8,
    0.689_767_334_985_1,
    0.148_103_976_427_480_08,
    0.015_198_666_563_616_457,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_8e-9,
];
const Q_E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    0.296_560_571_828_504_9,
    0.026_532_189_526_576_124,
    0.001_242_660_947_388_078_4,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const Q_F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_9,
    0.136_929_880_922_735_8,
    0.014_875_361_290_850_615,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_8e-15,
];

#[inline]
fn poly<T: Real>(c: &[f64; 8], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &k| acc * x + T::c(k))
}

/// Lower-tail quantile: z ≤ 0 with Φ(z) = q, for q ∈ (0, 0.5].
fn normal_lower_quantile<T: Real>(q: T) -> T {
    let d = q - T::c(0.5);
    if d.abs() <= T::c(0.425) {
        let r = T::c(0.180_625) - d * d;
        return d * poly(&Q_A, r) / poly(&Q_B, r);
    }
    let r = (-q.ln()).sqrt();
    let v = if r <= T::c(5.0) {
        let r = r - T::c(1.6);
        poly(&Q_C, r) / poly(&Q_D, r)
    } else {
        let r = r - T::c(5.0);
        poly(&Q_E, r) / poly(&Q_F, r)
    };
    -v
}

/// Normal quantile without argument checks; `p` must lie in (0, 1).
#[inline]
pub fn normal_quantile_unchecked<T: Real>(p: T) -> T {
    if p <= T::c(0.5) {
        normal_lower_quantile(p)
    } else {
        -normal_lower_quantile(T::one() - p)
    }
}

/// Normal quantile parameterized by the upper-tail probability: returns z
/// with 1 − Φ(z) = q. Keeps full precision when q is tiny.
#[inline]
pub fn normal_upper_quantile_unchecked<T: Real>(q: T) -> T {
    -normal_quantile_unchecked(q)
}

/// Standard normal quantile Φ⁻¹(p) for p ∈ (0, 1).
pub fn normal_quantile<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(invalid(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    Ok(normal_quantile_unchecked(p))
}

/// Student-t distribution with `nu` degrees of freedom, unit scale.
///
/// Normalizing constants are computed once at construction.
#[derive(Debug, Clone, Copy)]
pub struct StudentT<T: Real> {
    nu: T,
    ln_norm: T,
    ln_beta_half: T,
}

impl<T: Real> StudentT<T> {
    pub fn new(nu: T) -> Result<Self> {
        if !(nu > T::zero()) || !nu.is_finite() {
            return Err(invalid(format!(
                "degrees of freedom must be positive, got {nu}"
            )));
        }
        let half = T::c(0.5);
        let ln_norm =
            ln_gamma((nu + T::one()) * half) - ln_gamma(nu * half) - half * (nu * T::PI()).ln();
        Ok(Self {
            nu,
            ln_norm,
            ln_beta_half: ln_beta(nu * half, half),
        })
    }

    #[inline]
    pub fn nu(&self) -> T {
        self.nu
    }

    #[inline]
    pub fn ln_pdf(&self, x: T) -> T {
        self.ln_norm - (self.nu + T::one()) * T::c(0.5) * (x * x / self.nu).ln_1p()
    }

    #[inline]
    pub fn pdf(&self, x: T) -> T {
        self.ln_pdf(x).exp()
    }

    /// P(X ≤ −|x|).
    #[inline]
    fn tail(&self, x: T) -> T {
        let x2 = x * x;
        let arg = self.nu / (self.nu + x2);
        T::c(0.5) * inc_beta_with_ln_beta(arg, self.nu * T::c(0.5), T::c(0.5), self.ln_beta_half)
    }

    pub fn cdf(&self, x: T) -> T {
        if x < T::zero() {
            self.tail(x)
        } else {
            T::one() - self.tail(x)
        }
    }

    pub fn ln_cdf(&self, x: T) -> T {
        if x < T::zero() {
            self.tail(x).ln()
        } else {
            (-self.tail(x)).ln_1p()
        }
    }

    /// w ≤ 0 with P(X ≤ w) = q, for q ∈ (0, 0.5].
    fn lower_quantile(&self, q: T) -> T {
        if q >= T::c(0.5) {
            return T::zero();
        }
        let nu = self.nu;
        let ln_q = q.ln();
        // Cornish-Fisher expansion around the normal quantile
        let z = normal_lower_quantile(q);
        let z2 = z * z;
        let g1 = (z2 + T::one()) * z / T::c(4.0);
        let g2 = ((T::c(5.0) * z2 + T::c(16.0)) * z2 + T::c(3.0)) * z / T::c(96.0);
        let g3 =
            (((T::c(3.0) * z2 + T::c(19.0)) * z2 + T::c(17.0)) * z2 - T::c(15.0)) * z / T::c(384.0);
        let cf = z + g1 / nu + g2 / (nu * nu) + g3 / (nu * nu * nu);
        // power-law tail: P(X ≤ w) ≈ k ν^{(ν−1)/2} |w|^{−ν}
        let ln_abs = (self.ln_norm + (nu - T::one()) * T::c(0.5) * nu.ln() - ln_q) / nu;
        let tail_guess = -ln_abs.exp();
        let g = |w: T| self.ln_cdf(w) - ln_q;
        let x0 = if cf.is_finite() && cf < T::zero() {
            if g(cf).abs() <= g(tail_guess).abs() {
                cf
            } else {
                tail_guess
            }
        } else {
            tail_guess
        };
        let mut lo = x0.min(-T::one()) * T::c(2.0);
        let mut guard = 0;
        while g(lo) > T::zero() && guard < 200 {
            lo = lo * T::c(4.0);
            guard += 1;
        }
        let fdf = |w: T| {
            let ln_cdf = self.ln_cdf(w);
            (ln_cdf - ln_q, (self.ln_pdf(w) - ln_cdf).exp())
        };
        newton_bisect(fdf, lo, T::zero(), x0, T::epsilon() * T::c(2.0))
    }

    /// Quantile function; `p` must lie in (0, 1).
    pub fn quantile_unchecked(&self, p: T) -> T {
        if p <= T::c(0.5) {
            self.lower_quantile(p)
        } else {
            -self.lower_quantile(T::one() - p)
        }
    }

    /// w with P(X > w) = q, precise for tiny q.
    #[inline]
    pub fn upper_quantile_unchecked(&self, q: T) -> T {
        -self.quantile_unchecked(q)
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(invalid(format!("t quantile requires p in (0,1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }
}

/// Student-t distribution function Ψ(w; ν).
pub fn t_cdf<T: Real>(w: T, nu: T) -> Result<T> {
    Ok(StudentT::new(nu)?.cdf(w))
}

/// Student-t quantile Ψ⁻¹(p; ν).
pub fn t_quantile<T: Real>(p: T, nu: T) -> Result<T> {
    StudentT::new(nu)?.quantile(p)
}

/// Student-t density ψ(w; ν).
pub fn t_pdf<T: Real>(w: T, nu: T) -> Result<T> {
    Ok(StudentT::new(nu)?.pdf(w))
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if rho.abs() < T::one() {
        Ok(())
    } else {
        Err(invalid(format!(
            "correlation must satisfy |rho| < 1, got {rho}"
        )))
    }
}

/// ln φ₂(z1, z2; ρ) without argument checks.
#[inline]
pub fn bvn_ln_pdf_unchecked<T: Real>(z1: T, z2: T, rho: T) -> T {
    let one_m = T::one() - rho * rho;
    let q = (z1 * z1 - T::c(2.0) * rho * z1 * z2 + z2 * z2) / one_m;
    -T::c(0.5) * q - (T::c(2.0) * T::PI()).ln() - T::c(0.5) * one_m.ln()
}

/// Standard bivariate normal density with correlation ρ.
pub fn bvn_pdf<T: Real>(z1: T, z2: T, rho: T) -> Result<T> {
    check_rho(rho)?;
    Ok(bvn_ln_pdf_unchecked(z1, z2, rho).exp())
}

/// ln ψ₂(w1, w2; R, ν) with correlation-form scale matrix R.
pub fn bvt_ln_pdf_unchecked<T: Real>(w1: T, w2: T, rho: T, nu: T) -> T {
    let half = T::c(0.5);
    let one_m = T::one() - rho * rho;
    let q = (w1 * w1 - T::c(2.0) * rho * w1 * w2 + w2 * w2) / one_m;
    ln_gamma((nu + T::c(2.0)) * half)
        - ln_gamma(nu * half)
        - (nu * T::PI()).ln()
        - half * one_m.ln()
        - (nu + T::c(2.0)) * half * (q / nu).ln_1p()
}

/// Bivariate Student-t density with correlation-form scale matrix.
pub fn bvt_pdf<T: Real>(w1: T, w2: T, rho: T, nu: T) -> Result<T> {
    check_rho(rho)?;
    if !(nu > T::zero()) {
        return Err(invalid(format!(
            "degrees of freedom must be positive, got {nu}"
        )));
    }
    Ok(bvt_ln_pdf_unchecked(w1, w2, rho, nu).exp())
}
