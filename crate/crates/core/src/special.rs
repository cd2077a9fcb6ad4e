//! Special functions used by the densities and the variational updates.
//!
//! The digamma function is implemented here directly; the error function
//! and log-gamma come from `libm`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Digamma function Ψ(a) for a > 0.
///
/// Shifts the argument upward with Ψ(a) = Ψ(a+1) − 1/a until a ≥ 10, then
/// evaluates the asymptotic expansion.
pub fn digamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("digamma requires a finite a > 0, got {a}")));
    }
    Ok(digamma_unchecked(a))
}

pub(crate) fn digamma_unchecked(mut a: f64) -> f64 {
    let mut shift = 0.0;
    while a < 10.0 {
        shift += 1.0 / a;
        a += 1.0;
    }
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_2n / 2n
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    a.ln() - 0.5 * inv - series - shift
}

/// Natural log of the gamma function.
pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF Φ(z).
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// ln Q(z) where Q(z) = 1 − Φ(z) is the standard normal upper tail.
///
/// Finite for every finite z: beyond z = 30 the tail is evaluated from its
/// asymptotic series so that it never underflows to −∞.
pub fn ln_std_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erfc(z * FRAC_1_SQRT_2)).ln()
    } else {
        let inv2 = 1.0 / (z * z);
        // 1 − 1/z² + 3/z⁴ − 15/z⁶ + …
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=7 {
            term *= -((2 * k - 1) as f64) * inv2;
            sum += term;
        }
        -0.5 * z * z - z.ln() - LN_SQRT_2PI + sum.ln()
    }
}

/// ln(1 − e^x) for x ≤ 0.
fn ln_1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// ln(Φ(hi) − Φ(lo)) for standardized bounds lo < hi, robust in both tails.
pub fn ln_std_normal_interval(lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        let a = ln_std_normal_sf(lo);
        a + ln_1m_exp(ln_std_normal_sf(hi) - a)
    } else if hi <= 0.0 {
        let a = ln_std_normal_sf(-hi);
        a + ln_1m_exp(ln_std_normal_sf(-lo) - a)
    } else {
        let outside = 0.5 * erfc(hi * FRAC_1_SQRT_2) + 0.5 * erfc(-lo * FRAC_1_SQRT_2);
        (-outside).ln_1p()
    }
}

pub(crate) fn ln_2pi() -> f64 {
    (2.0 * PI).ln()
}
