//! The tail integral `F(x) = ∫_x^∞ ds/f(s)` and its inverse.
//!
//! With `L = log f` and `K(x) = ∫_0^∞ exp(-(L(x+σ) - L(x))) dσ` one has
//! `F = e^{-L} K`, `F f' = L' K` and `(log F)' = -1/K`. After the substitution
//! `σ = y (1+x)/((1+x)L')`, `F f' = ∫_0^∞ exp(-ΔL) dy`, which is compared against the
//! reference kernel of the family (`e^{-y}` or `(1+y/p)^{-p}`, whose integral is the
//! reference `q`). The difference `F f' - q` is therefore integrated directly and is
//! exactly zero for `e^u` and for pure powers.

use super::{Base, Reference};
use crate::math::{abs, exp_m1, ln, sqrt};
use crate::quadrature::{integrate_to_infinity, Tolerance};
use crate::{Error, Result};

/// Tail data at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    /// `log f`.
    pub log_f: f64,
    /// `f'/f`.
    pub dlog_f: f64,
    /// `log F`.
    pub log_big_f: f64,
    /// `K = F f`, the inverse slope of `log F`.
    pub k_integral: f64,
    /// `F f' - q` with `q` the reference value.
    pub j_minus_q: f64,
    /// Reference `q` (1 for exponential type, `p/(p-1)` for power type).
    pub q_ref: f64,
}

impl TailPoint {
    /// `F f'`.
    pub fn j(&self) -> f64 {
        self.q_ref + self.j_minus_q
    }
}

const TOL: Tolerance = Tolerance { abs: 1e-16, rel: 1e-13, max_intervals: 1000 };

pub(crate) fn tail_point(base: &Base, x: f64) -> Result<TailPoint> {
    let reference = base.reference().ok_or(Error::DivergentTail)?;
    let q_ref = reference.q();
    let z = 1.0 + x;
    let log_f = base.log_f(x);
    let (s1, _) = base.scaled_derivatives(x);
    let dlog_f = s1 / z;
    if !log_f.is_finite() {
        return Err(Error::Overflow { value: x });
    }
    if s1 > 0.0 && s1.is_finite() {
        let h = z / s1;
        let est = integrate_to_infinity(
            |y| {
                let lk = reference.log_kernel(y);
                let (sigma, r) = (y * h, y / s1);
                let excess = match reference {
                    Reference::Exponential => base.increment_excess(x, sigma, r),
                    Reference::Power(_) => None,
                };
                let gap = match excess {
                    Some(e) => -e,
                    None => -base.increment(x, sigma, r) - lk,
                };
                if abs(gap) < 0.5 {
                    return libm::exp(lk) * exp_m1(gap);
                }
                libm::exp(-base.increment(x, sigma, r)) - libm::exp(lk)
            },
            0.0,
            TOL,
        )?;
        let d = est.value;
        let k_integral = h * (q_ref + d);
        Ok(TailPoint { log_f, dlog_f, log_big_f: -log_f + ln(k_integral), k_integral, j_minus_q: d, q_ref })
    } else {
        let h = z;
        let est = integrate_to_infinity(|y| libm::exp(-base.increment(x, y * h, y)), 0.0, TOL)?;
        let k_integral = h * est.value;
        Ok(TailPoint {
            log_f,
            dlog_f,
            log_big_f: -log_f + ln(k_integral),
            k_integral,
            j_minus_q: dlog_f * k_integral - q_ref,
            q_ref,
        })
    }
}

/// Leading-order asymptotic value of `log F` from `L`, `L'`, `L''` alone.
///
/// Exponential type: `F ≈ e^{-L}/L' (1 - L''/L'^2)`. Power type with
/// `f = (1+x)^p b(x)`: `F ≈ (1+x)^{1-p} / ((p-1) b) (1 - (1+x) b'/(b (p-1)))`.
/// Used as an independent cross-check of the quadrature.
pub fn asymptotic_tail_log_f(base: &Base, x: f64) -> f64 {
    let z = 1.0 + x;
    let l = base.log_f(x);
    let (s1, s2) = base.scaled_derivatives(x);
    match base.reference() {
        Some(Reference::Power(p)) => {
            let log_b = l - p * ln(z);
            let zb = s1 - p;
            ln(z) - p * ln(z) - ln(p - 1.0) - log_b + libm::log1p(-zb / (p - 1.0))
        }
        _ => -l - ln(s1 / z) + libm::log1p(-s2 / (s1 * s1)),
    }
}

fn mid(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 && hi > 4.0 * (lo + 1.0) {
        sqrt((lo + 1.0) * (hi + 1.0)) - 1.0
    } else {
        0.5 * (lo + hi)
    }
}

/// Base argument `x ≥ shift` with `log F(x) = target`.
pub(crate) fn invert(base: &Base, lower: f64, target: f64, hint: Option<f64>) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::OutOfRange { value: target, lower: f64::NEG_INFINITY, upper: f64::INFINITY });
    }
    let scale = abs(target).max(1.0);
    let tol = 4.0 * f64::EPSILON * scale;
    let check_lower = || -> Result<Option<TailPoint>> {
        let at_lower = tail_point(base, lower)?;
        if target > at_lower.log_big_f + tol {
            return Err(Error::OutOfRange { value: target, lower: f64::NEG_INFINITY, upper: at_lower.log_big_f });
        }
        Ok(if target >= at_lower.log_big_f { None } else { Some(at_lower) })
    };
    let mut lower_checked = false;
    let mut x = match hint {
        Some(h) if h.is_finite() && h > lower => h,
        _ => {
            lower_checked = true;
            let Some(at_lower) = check_lower()? else {
                return Ok(lower);
            };
            lower + at_lower.k_integral * (at_lower.log_big_f - target)
        }
    };
    let mut lo = lower;
    let mut hi = f64::INFINITY;
    let mut best = (f64::INFINITY, x);
    let mut widths = [f64::INFINITY; 3];
    for _ in 0..200 {
        if !(x > lo && x < hi) {
            if lo == lower && !lower_checked {
                lower_checked = true;
                if check_lower()?.is_none() {
                    return Ok(lower);
                }
            }
            x = if hi.is_finite() { mid(lo, hi) } else { 2.0 * lo.max(0.0) + 1.0 };
        }
        let tp = match tail_point(base, x) {
            Err(Error::Overflow { .. }) => {
                hi = x;
                x = mid(lo, hi);
                continue;
            }
            other => other?,
        };
        let g = tp.log_big_f - target;
        if abs(g) < best.0 {
            best = (abs(g), x);
        }
        if g == 0.0 {
            return Ok(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = g * tp.k_integral;
        let next = x + step;
        if abs(g) <= tol {
            return Ok(x);
        }
        if abs(step) <= 2.0 * f64::EPSILON * abs(x).max(1e-300) && next > lo && next < hi {
            return Ok(next);
        }
        if hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * abs(hi).max(1e-300) {
            return Ok(best.1);
        }
        let width = hi - lo;
        let stalled = width.is_finite() && width > 0.5 * widths[0];
        widths = [widths[1], widths[2], width];
        x = if stalled { mid(lo, hi) } else { next };
    }
    if best.0 <= 1e3 * tol {
        return Ok(best.1);
    }
    Err(Error::Convergence { what: "inversion of F" })
}
