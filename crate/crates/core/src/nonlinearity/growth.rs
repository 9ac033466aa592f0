//! Estimators for the structural constants `q`, `k`, `γ` and the growth conditions
//! `(p0+1)∫_0^u f < u f(u)`, `u^{p0-1} ≤ C0 f'(u)`, `u^{p0-2} < C1 f''(u)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Family;
use crate::extrapolate::{richardson, Limit};
use crate::math::{abs, exp, ln, logspace, powf};
use crate::quadrature::{integrate, Tolerance};
use crate::{Error, Result};

/// Estimate of `q = lim f'^2/(f f'')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub value: f64,
    pub error: f64,
    pub samples: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Samples of `(F f' - q_JL)(-log F)^k` and their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GammaEstimate {
    pub k: f64,
    pub samples: Vec<(f64, f64)>,
    pub limit: f64,
    pub error: f64,
    pub warnings: Vec<String>,
}

/// Outcome of each growth condition on the test grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthChecks {
    pub tail_finite: bool,
    pub integral_bound: bool,
    pub first_derivative_bound: bool,
    pub second_derivative_bound: bool,
}

impl GrowthChecks {
    pub fn all(&self) -> bool {
        self.tail_finite && self.integral_bound && self.first_derivative_bound && self.second_derivative_bound
    }
}

/// Growth conditions, `q`, and (for critical families) the `γ` sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthReport {
    pub q_estimate: f64,
    pub q_error: f64,
    pub p0: Option<f64>,
    pub u0: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub checks: GrowthChecks,
    pub failure: Option<String>,
    pub k: Option<f64>,
    pub gamma_estimate_at_k: Vec<(f64, f64)>,
    pub extrapolated_gamma: Option<f64>,
    pub gamma_error: Option<f64>,
    pub warnings: Vec<String>,
}

/// `q` from `f'^2/(f f'')` on a geometric grid, extrapolated in `1/log u`.
pub fn estimate_q(family: &Family) -> Result<QEstimate> {
    let (lo, hi) = family.asymptotic_window();
    let grid = logspace(lo.max(1.0), hi, 24);
    let mut samples = Vec::with_capacity(grid.len());
    for &u in &grid {
        let q = family.q_ratio(u)?;
        if !q.is_finite() {
            return Err(Error::Convergence { what: "q ratio (f'' vanishes)" });
        }
        samples.push((u, q));
    }
    let h: Vec<f64> = grid.iter().map(|&u| 1.0 / ln(1.0 + u + family.shift())).collect();
    let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let lim = richardson(&h, &v, 2).ok_or(Error::Convergence { what: "q extrapolation" })?;
    Ok(QEstimate {
        value: lim.value,
        error: lim.error,
        converged: lim.error <= 1e-3 * abs(lim.value).max(1.0),
        samples,
    })
}

/// Samples `(F f' - q_JL)(-log F)^k` up to the family's safe limit and extrapolates
/// them in `(-log F)^{-min(k,1)}`.
pub fn estimate_gamma(family: &Family, k: f64) -> Result<GammaEstimate> {
    if !(k > 0.0 && k <= 2.0) {
        return Err(Error::InvalidParameter(format!("k must lie in (0, 2], got {k}")));
    }
    let reference = family.reference().ok_or(Error::DivergentTail)?;
    let q_jl = family.constants().q_jl;
    let offset = reference.q() - q_jl;
    if abs(offset) > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "family has q = {} but q_JL(N = {}) = {q_jl}; (F1) needs a critical family",
            reference.q(),
            family.n()
        )));
    }
    let (lo, hi) = family.asymptotic_window();
    let grid = logspace(lo.max(1.0), hi, 32);
    let mut samples = Vec::with_capacity(grid.len());
    let mut h = Vec::with_capacity(grid.len());
    let mut top = 0.0_f64;
    for &u in &grid {
        let tp = family.tail(u)?;
        let t = -tp.log_big_f;
        if !(t > 1.0) {
            continue;
        }
        top = top.max(t);
        samples.push((u, (tp.j_minus_q + offset) * powf(t, k)));
        h.push(powf(t, -k.min(1.0)));
    }
    let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let Limit { value, error } = fit_limit(&h, &v).ok_or(Error::Convergence { what: "γ extrapolation" })?;
    let mut warnings = Vec::new();
    if k > 1.0 && powf(top, k) * 1e-15 > 1e-3 {
        warnings
            .push(format!("(-log F)^k reaches {:.3e}; rounding in F f' - q is amplified beyond 1e-3", powf(top, k)));
    }
    if k > 1.0 && top < 1e4 {
        warnings.push(format!("-log F only reaches {top:.3e}; corrections of order (-log F)^(1-k) may be unresolved"));
    }
    Ok(GammaEstimate { k, samples, limit: value, error, warnings })
}

/// Linear extrapolation on the last samples; the error bar is the spread of the
/// extrapolants from the last three windows.
fn fit_limit(h: &[f64], v: &[f64]) -> Option<Limit> {
    let n = h.len();
    if n < 4 {
        return None;
    }
    let from = n.saturating_sub(12);
    richardson(&h[from..], &v[from..], 1)
}

struct GridRow {
    u: f64,
    log_u: f64,
    /// `log ∫_0^u f - log f(u) - log u`.
    integral_excess: f64,
    /// `log f'` or NaN if `f' ≤ 0`.
    log_fp: f64,
    /// `log f''` or NaN if `f'' ≤ 0`.
    log_fpp: f64,
}

fn grid_row(family: &Family, u: f64) -> Result<GridRow> {
    let lf = family.eval_log_f(u)?;
    let d1 = family.dlog_f(u)?;
    let d2 = family.d2log_f(u)?;
    let tol = Tolerance { abs: 1e-14 * u, rel: 1e-8, max_intervals: 800 };
    let inner = integrate(
        |s| {
            let t = (u - s).max(0.0);
            family.eval_log_f(t).map(|l| exp(l - lf)).unwrap_or(f64::NAN)
        },
        0.0,
        u,
        tol,
    )?;
    let log = |v: f64| if v > 0.0 { ln(v) } else { f64::NAN };
    Ok(GridRow {
        u,
        log_u: ln(u),
        integral_excess: ln(inner.value) - ln(u),
        log_fp: lf + log(d1),
        log_fpp: lf + log(d2 + d1 * d1),
    })
}

/// Witness `(p0, u0, C0, C1)` for the growth conditions on a test grid.
pub fn check_growth_conditions(family: &Family) -> Result<GrowthReport> {
    let n = family.n() as f64;
    let mut report = GrowthReport {
        q_estimate: f64::NAN,
        q_error: f64::NAN,
        p0: None,
        u0: None,
        c0: None,
        c1: None,
        checks: GrowthChecks {
            tail_finite: false,
            integral_bound: false,
            first_derivative_bound: false,
            second_derivative_bound: false,
        },
        failure: None,
        k: None,
        gamma_estimate_at_k: Vec::new(),
        extrapolated_gamma: None,
        gamma_error: None,
        warnings: Vec::new(),
    };
    if let Ok(q) = estimate_q(family) {
        report.q_estimate = q.value;
        report.q_error = q.error;
        if !q.converged {
            report.warnings.push(String::from("q estimate did not settle on the grid"));
        }
    }
    if family.reference().is_none() {
        report.failure = Some(String::from("F < ∞ fails: ∫ ds/f(s) diverges"));
        return Ok(report);
    }
    report.checks.tail_finite = true;

    let lo_p = (n + 2.0) / (n - 2.0);
    let hi_p = if lo_p < 2.0 { 2.0 } else { lo_p + 1.0 };
    let (_, window_hi) = family.asymptotic_window();
    let u_max = window_hi.clamp(10.0, 1e12);
    let rows: Vec<GridRow> =
        logspace(0.5, u_max, 48).into_iter().map(|u| grid_row(family, u)).collect::<Result<_>>()?;

    let mut last_failure = String::new();
    for frac in [0.2, 0.4, 0.6, 0.8] {
        let p0 = lo_p + frac * (hi_p - lo_p);
        for u0 in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0] {
            let sub: Vec<&GridRow> = rows.iter().filter(|r| r.u >= u0).collect();
            match witness(&sub, p0) {
                Ok((c0, c1)) => {
                    report.p0 = Some(p0);
                    report.u0 = Some(u0);
                    report.c0 = Some(c0);
                    report.c1 = Some(c1);
                    report.checks.integral_bound = true;
                    report.checks.first_derivative_bound = true;
                    report.checks.second_derivative_bound = true;
                    break;
                }
                Err((which, u)) => {
                    last_failure = format!("{which} fails at u = {u:.6e} (p0 = {p0:.4}, u0 = {u0})");
                    if frac == 0.2 && u0 == 100.0 {
                        let first = witness_flags(&sub, p0);
                        report.checks.integral_bound = first.0;
                        report.checks.first_derivative_bound = first.1;
                        report.checks.second_derivative_bound = first.2;
                    }
                }
            }
        }
        if report.p0.is_some() {
            break;
        }
    }
    if report.p0.is_none() {
        report.failure = Some(last_failure);
    }

    if let Some(dec) = family.declared() {
        report.k = Some(dec.k);
        match estimate_gamma(family, dec.k) {
            Ok(g) => {
                report.gamma_estimate_at_k = g.samples;
                report.extrapolated_gamma = Some(g.limit);
                report.gamma_error = Some(g.error);
                report.warnings.extend(g.warnings);
            }
            Err(e) => report.warnings.push(format!("γ estimate unavailable: {e}")),
        }
    }
    Ok(report)
}

fn witness_flags(rows: &[&GridRow], p0: f64) -> (bool, bool, bool) {
    let i = rows.iter().all(|r| ln(p0 + 1.0) + r.integral_excess < 0.0);
    let ii = bounded(rows.iter().map(|r| (p0 - 1.0) * r.log_u - r.log_fp)).is_some();
    let iii = bounded(rows.iter().map(|r| (p0 - 2.0) * r.log_u - r.log_fpp)).is_some();
    (i, ii, iii)
}

fn witness(rows: &[&GridRow], p0: f64) -> core::result::Result<(f64, f64), (&'static str, f64)> {
    if rows.len() < 3 {
        return Err(("grid", f64::NAN));
    }
    if let Some(r) = rows.iter().find(|r| !(ln(p0 + 1.0) + r.integral_excess < 0.0)) {
        return Err(("(p0+1)∫f < u f(u)", r.u));
    }
    let c0 = bounded(rows.iter().map(|r| (p0 - 1.0) * r.log_u - r.log_fp))
        .ok_or(("u^(p0-1) ≤ C0 f'(u)", rows[rows.len() - 1].u))?;
    let c1 = bounded(rows.iter().map(|r| (p0 - 2.0) * r.log_u - r.log_fpp))
        .ok_or(("u^(p0-2) < C1 f''(u)", rows[rows.len() - 1].u))?;
    Ok((c0, c1))
}

/// `exp(max)` of a log-ratio sequence if it is finite and not still rising at the end.
fn bounded<I: Iterator<Item = f64>>(it: I) -> Option<f64> {
    let v: Vec<f64> = it.collect();
    if v.iter().any(|x| x.is_nan()) {
        return None;
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = v.len();
    let rising = n >= 2 && v[n - 1] > v[n - 2] + 1e-12 * abs(v[n - 1]).max(1.0);
    if rising || !max.is_finite() {
        None
    } else {
        Some(exp(max) * (1.0 + 1e-9))
    }
}
