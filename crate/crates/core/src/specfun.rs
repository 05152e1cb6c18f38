//! Regularized lower incomplete gamma function and the chi-square quantile
//! used to turn sampled `‖Bω‖²` values into a Frobenius-norm upper bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-17;
const MAX_ITER: usize = 100_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Stirling remainder `ln Γ(a+1) − [(a+½)ln a − a + ½ln 2π]`.
fn stirling_err(a: f64) -> f64 {
    if a >= 10.0 {
        let r = 1.0 / a;
        let r2 = r * r;
        r * (1.0 / 12.0
            - r2 * (1.0 / 360.0
                - r2 * (1.0 / 1260.0
                    - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0))))))
    } else {
        ln_gamma(a + 1.0) - (a + 0.5) * a.ln() + a - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// `x^a e^{-x} / Γ(a+1)`, evaluated without forming the large factors.
fn prefactor(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let u = x / a - 1.0;
    // a(ln(x/a) + 1 − x/a) written via ln_1p so it stays accurate near x = a.
    let expo = a * (u.ln_1p() - u) - stirling_err(a);
    expo.exp() / (2.0 * std::f64::consts::PI * a).sqrt()
}

/// `P(a, x) = γ(a, x) / Γ(a)`.
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma argument must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < a + 1.0 {
        prefactor(a, x) * lower_series(a, x)
    } else {
        1.0 - a * prefactor(a, x) * upper_fraction(a, x)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `Q(a, x) = 1 − P(a, x)`.
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(1.0 - reg_lower_gamma(a, x)?)
}

/// `Σ_{n≥0} xⁿ / ((a+1)…(a+n))`.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..MAX_ITER {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * EPS {
            break;
        }
    }
    sum
}

/// Continued fraction for `Γ(a,x)·eˣ x^{-a}`, modified Lentz.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Result of the `α_s` solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSup {
    pub alpha: f64,
    /// Set when `P(s/2, s/2) ≤ δ`, so the supremum reaches the bracket end.
    pub clamped: bool,
}

pub const ALPHA_LO: f64 = 1e-16;
pub const ALPHA_HI: f64 = 1.0 - 1e-12;

/// `sup{α ∈ (0,1) : P(s/2, αs/2) ≤ δ}` by bisection.
pub fn alpha_sup(s: usize, delta: f64) -> Result<AlphaSup> {
    if s == 0 {
        return Err(Error::InvalidArgument("sample count s must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
    }
    let a = s as f64 / 2.0;
    let f = |alpha: f64| reg_lower_gamma(a, alpha * a);
    if f(ALPHA_HI)? <= delta {
        return Ok(AlphaSup {
            alpha: ALPHA_HI,
            clamped: true,
        });
    }
    let (mut lo, mut hi) = (ALPHA_LO, ALPHA_HI);
    if f(lo)? > delta {
        return Ok(AlphaSup {
            alpha: lo,
            clamped: true,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AlphaSup {
        alpha: lo,
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_small_integers() {
        for (x, f) in [(1.0, 1.0), (2.0, 1.0), (5.0, 24.0), (10.0, 362_880.0_f64)] {
            assert!((ln_gamma(x) - f.ln()).abs() < 1e-13, "x = {x}");
        }
        let half = std::f64::consts::PI.sqrt().ln();
        assert!((ln_gamma(0.5) - half).abs() < 1e-14);
    }

    #[test]
    fn stirling_branches_agree_at_switch() {
        let direct = ln_gamma(11.0) - 10.5 * 10f64.ln() + 10.0 - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((stirling_err(10.0) - direct).abs() < 1e-13);
    }

    #[test]
    fn boundary_values() {
        assert_eq!(reg_lower_gamma(3.0, 0.0).unwrap(), 0.0);
        assert!((reg_lower_gamma(1.0, 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!(reg_lower_gamma(0.0, 1.0).is_err());
        assert!(reg_lower_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn alpha_for_two_samples_is_closed_form() {
        let r = alpha_sup(2, 0.01).unwrap();
        assert!(!r.clamped);
        assert!((r.alpha - (-(0.99f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn alpha_invalid_inputs() {
        assert!(alpha_sup(0, 0.1).is_err());
        assert!(alpha_sup(3, 1.0).is_err());
    }

    #[test]
    fn large_delta_clamps() {
        // P(1/2, 1/2) ≈ 0.683, so δ = 0.9 puts the supremum at the bracket end.
        let r = alpha_sup(1, 0.9).unwrap();
        assert!(r.clamped);
        assert_eq!(r.alpha, ALPHA_HI);
    }
}
