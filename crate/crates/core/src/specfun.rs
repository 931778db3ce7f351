//! Secondary real branch of the Lambert W function.
//!
//! `W₋₁` inverts `r ↦ r·eʳ` on `(-∞, -1]`, mapping `[-1/e, 0)` onto `(-∞, -1]`.
//! It is decreasing: arguments closer to zero give more negative values.

use std::f64::consts::E;

use thiserror::Error;

const INV_E: f64 = 1.0 / E;

/// Half-width of the neighbourhood of `-1/e` where the branch-point series is used.
const BRANCH_SERIES_RADIUS: f64 = 1e-12;

/// Arguments above this use the logarithmic form of the defining equation.
const LOG_FORM_THRESHOLD: f64 = -0.25;

const MAX_ITER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecfunError {
    #[error("lambert W₋₁ is defined on [-1/e, 0), got {0}")]
    Domain(f64),
}

/// An argument of `W₋₁`, i.e. a real number in `[-1/e, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LambertDomainPoint(f64);

impl LambertDomainPoint {
    pub fn new(y: f64) -> Result<Self, SpecfunError> {
        // Values a rounding error below -1/e are snapped onto the branch point.
        if y.is_nan() || y >= 0.0 || y < -INV_E * (1.0 + 4.0 * f64::EPSILON) {
            return Err(SpecfunError::Domain(y));
        }
        Ok(Self(y.max(-INV_E)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for LambertDomainPoint {
    type Error = SpecfunError;

    fn try_from(y: f64) -> Result<Self, Self::Error> {
        Self::new(y)
    }
}

/// Evaluates `W₋₁(y)`.
///
/// Near the branch point the Puiseux series is returned directly; elsewhere a
/// Halley iteration is run (on `r eʳ = y` close to the branch point, on
/// `r + ln(-r) = ln(-y)` towards zero) with a bisection fallback.
pub fn lambert_w_minus1(y: LambertDomainPoint) -> f64 {
    let y = y.0;
    if y == -INV_E {
        return -1.0;
    }
    let q = 1.0 + E * y;
    if q <= BRANCH_SERIES_RADIUS * E {
        return branch_series(q);
    }
    let r = if y > LOG_FORM_THRESHOLD {
        halley_log_form(y)
    } else {
        halley_product_form(y, branch_series(q))
    };
    match r {
        Some(r) => r,
        None => bisect(y),
    }
}

/// Convenience wrapper that validates the argument.
pub fn lambert_w_minus1_checked(y: f64) -> Result<f64, SpecfunError> {
    LambertDomainPoint::new(y).map(lambert_w_minus1)
}

/// Puiseux expansion of `W₋₁` around `-1/e`, with `q = 1 + e·y`.
fn branch_series(q: f64) -> f64 {
    let p = -(2.0 * q.max(0.0)).sqrt();
    let coeffs = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    coeffs.iter().rev().fold(0.0, |acc, c| acc * p + c)
}

fn halley_product_form(y: f64, mut r: f64) -> Option<f64> {
    for _ in 0..MAX_ITER {
        let er = r.exp();
        let f = r * er - y;
        let fp = er * (r + 1.0);
        if fp == 0.0 {
            return None;
        }
        let fpp = er * (r + 2.0);
        let step = f / (fp - 0.5 * f * fpp / fp);
        let next = (r - step).min(-1.0);
        if !next.is_finite() {
            return None;
        }
        let done = (next - r).abs() <= 4.0 * f64::EPSILON * r.abs();
        r = next;
        if done {
            return Some(r);
        }
    }
    None
}

fn halley_log_form(y: f64) -> Option<f64> {
    let target = (-y).ln();
    // Asymptotic start: L1 - L2 + L2/L1.
    let l1 = target;
    let l2 = (-l1).ln();
    let mut r = (l1 - l2 + l2 / l1).min(-1.0 - 1e-3);
    for _ in 0..MAX_ITER {
        let g = r + (-r).ln() - target;
        let gp = 1.0 + 1.0 / r;
        let gpp = -1.0 / (r * r);
        if gp == 0.0 {
            return None;
        }
        let step = g / (gp - 0.5 * g * gpp / gp);
        let next = (r - step).min(-1.0);
        if !next.is_finite() {
            return None;
        }
        let done = (next - r).abs() <= 4.0 * f64::EPSILON * r.abs();
        r = next;
        if done {
            return Some(r);
        }
    }
    None
}

fn bisect(y: f64) -> f64 {
    // r e^r is decreasing on (-inf, -1].
    let mut hi: f64 = -1.0;
    let mut lo: f64 = -2.0;
    while lo * lo.exp() < y {
        lo *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mid * mid.exp() < y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(y: f64) -> f64 {
        let r = lambert_w_minus1_checked(y).unwrap();
        (r * r.exp() - y).abs() / y.abs()
    }

    #[test]
    fn branch_point_is_minus_one() {
        assert_eq!(lambert_w_minus1_checked(-INV_E).unwrap(), -1.0);
    }

    #[test]
    fn rejects_outside_domain() {
        assert!(lambert_w_minus1_checked(0.0).is_err());
        assert!(lambert_w_minus1_checked(0.1).is_err());
        assert!(lambert_w_minus1_checked(-0.4).is_err());
        assert!(lambert_w_minus1_checked(f64::NAN).is_err());
    }

    #[test]
    fn close_to_branch_point_uses_series() {
        let y = -INV_E + 1e-14;
        let r = lambert_w_minus1_checked(y).unwrap();
        assert!(r < -1.0 && r > -1.0 - 1e-5);
        assert!(residual(y) <= 1e-13);
    }

    #[test]
    fn tiny_arguments() {
        for y in [-1e-12, -1e-50, -1e-200] {
            assert!(residual(y) <= 1e-13, "y = {y}");
        }
    }

    #[test]
    fn fallback_bisection_solves_equation() {
        for y in [-0.3, -0.1, -1e-6] {
            let r = bisect(y);
            assert!((r * r.exp() - y).abs() <= 1e-14 * y.abs().max(1e-300) * 10.0);
        }
    }
}
