//! Radial shooting for `v'' + (N-1)/r v' + f(v) = 0`, `v(0) = α`, `v'(0) = 0`.
//!
//! The equation is integrated in `s = ln r`, where it reads
//! `w'' + (N-2) w' + exp(2s + log f(w)) = 0` with `w(s) = v(e^s)`. The forcing never
//! overflows because the integration starts where `r² f(α)` is small, and the center
//! value can sit far beyond the range where `f(α)` itself is representable.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{exp, ln, sqrt};
use crate::nonlinearity::Family;
use crate::ode::{Dop853, Node, Trajectory};
use crate::{Error, Result};

/// Integrator settings for radial solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in `ln r`; keeps the stored grid dense enough for plotting.
    pub max_log_step: f64,
    /// Bound on the neglected `r⁴` series term, relative to `α`.
    pub series_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-13, max_log_step: 0.25, series_tol: 1e-14 }
    }
}

impl ShootingOptions {
    /// Same settings with both tolerances scaled by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        Self { rtol: self.rtol * factor, atol: self.atol * factor, ..self }
    }

    fn ode(&self) -> Dop853 {
        Dop853 { h_max: self.max_log_step, ..Dop853::with_tolerances(self.rtol, self.atol) }
    }
}

/// Right-hand side of the radial equation in `s = ln r` for the state `(w, dw/ds)`.
pub(crate) fn log_radial_rhs(family: &Family) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let drift = family.n() as f64 - 2.0;
    move |s: f64, y: &[f64; 2]| [y[1], -drift * y[1] - exp(2.0 * s + family.log_f_extended(y[0]))]
}

/// A radial solution stored as its trajectory in `s = ln r`.
///
/// Besides the accepted nodes, the path can be evaluated anywhere inside its range to
/// the integrator's own order by taking one exact step from the nearest node.
#[derive(Debug, Clone)]
pub struct RadialPath {
    family: Family,
    trajectory: Trajectory<2>,
}

impl RadialPath {
    /// Integrates outward from `(v, r v')` given at `r = e^{s0}` up to `r_max`, stopping
    /// at the first zero of `v`.
    pub fn outward(family: &Family, s0: f64, state: [f64; 2], r_max: f64, opts: &ShootingOptions) -> Result<Self> {
        let s_end = ln(r_max);
        if !(s_end > s0) {
            return Err(Error::InvalidParameter(format!("r_max = {r_max:e} is inside the start radius")));
        }
        let rhs = log_radial_rhs(family);
        let zero = |_: f64, y: &[f64; 2]| y[0];
        let trajectory = opts.ode().solve(&rhs, s0, state, s_end, Some(&zero))?;
        Ok(Self { family: family.clone(), trajectory })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn trajectory(&self) -> &Trajectory<2> {
        &self.trajectory
    }

    pub fn r_min(&self) -> f64 {
        exp(self.trajectory.first().t)
    }

    pub fn r_max(&self) -> f64 {
        exp(self.trajectory.last().t)
    }

    /// First zero of `v` if the integration ended on one.
    pub fn first_zero(&self) -> Option<f64> {
        self.trajectory.event.map(|node| exp(node.t))
    }

    /// `(v(r), v'(r))`, or `None` outside the computed range.
    pub fn state(&self, r: f64) -> Option<(f64, f64)> {
        let node = self.node_at(ln(r))?;
        Some((node.y[0], node.y[1] / r))
    }

    /// Full node `(s, [w, w_s], [w_s, w_ss])` at `s = ln r`.
    pub fn node_at(&self, s: f64) -> Option<Node<2>> {
        let i = self.trajectory.segment(s)?;
        let a = &self.trajectory.nodes[i];
        let b = &self.trajectory.nodes[i + 1];
        if s == a.t {
            return Some(*a);
        }
        if s == b.t {
            return Some(*b);
        }
        let rhs = log_radial_rhs(&self.family);
        Some(Dop853::step_exact(&rhs, a, s - a.t))
    }

    /// Node radii with `v` and `v'`.
    pub fn samples(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let nodes = &self.trajectory.nodes;
        let mut r = Vec::with_capacity(nodes.len());
        let mut v = Vec::with_capacity(nodes.len());
        let mut dv = Vec::with_capacity(nodes.len());
        for node in nodes {
            let radius = exp(node.t);
            r.push(radius);
            v.push(node.y[0]);
            dv.push(node.y[1] / radius);
        }
        (r, v, dv)
    }
}

/// Regular radial solution with center value `α`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub alpha: f64,
    pub r_grid: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    /// First zero `R(α)`, absent when `v > 0` up to the requested radius.
    pub first_zero: Option<f64>,
    /// `λ(α) = R(α)²`.
    pub lambda: Option<f64>,
    path: RadialPath,
}

impl RadialProfile {
    pub fn path(&self) -> &RadialPath {
        &self.path
    }

    /// `(v(r), v'(r))` anywhere in the computed range; the series start covers `r` below it.
    pub fn state(&self, r: f64) -> Option<(f64, f64)> {
        if r >= 0.0 && r < self.path.r_min() {
            let (c2, c4) = series_coefficients(&self.path.family, self.alpha);
            let r2 = r * r;
            return Some((self.alpha - c2 * r2 + c4 * r2 * r2, -2.0 * c2 * r + 4.0 * c4 * r2 * r));
        }
        self.path.state(r)
    }
}

/// Coefficients of `v = α - c2 r² + c4 r⁴ + O(r⁶)`.
fn series_coefficients(family: &Family, alpha: f64) -> (f64, f64) {
    let n = family.n() as f64;
    let f = exp(family.log_f_extended(alpha));
    let c2 = f / (2.0 * n);
    (c2, c2 * f * family.dlog_f_extended(alpha) / (4.0 * (n + 2.0)))
}

/// Starting point `(s0, [w, w_s])` of the series start at center value `alpha`.
pub fn series_start(family: &Family, alpha: f64, opts: &ShootingOptions) -> (f64, [f64; 2]) {
    let n = family.n() as f64;
    let log_f = family.log_f_extended(alpha);
    let growth = family.dlog_f_extended(alpha).max(0.0);
    // rho2 = r0² f(α); the neglected term is growth · rho2² / (8N(N+2)).
    let mut rho2 = (1e-3 * 2.0 * n * alpha).min(1.0);
    if growth > 0.0 {
        rho2 = rho2.min(sqrt(opts.series_tol * alpha * 8.0 * n * (n + 2.0) / growth));
    }
    let s0 = 0.5 * (ln(rho2) - log_f);
    (s0, [alpha - rho2 / (2.0 * n), -rho2 / n])
}

/// A radius beyond which the solution must have crossed zero.
///
/// Since `f` is increasing along every catalogue family, `(r^{N-1} v')' ≤ -r^{N-1} f(0)`
/// and `v` vanishes before `sqrt(2Nα / f(0))`.
pub fn default_r_max(family: &Family, alpha: f64) -> f64 {
    let n = family.n() as f64;
    let log_f_min = family.log_f_extended(0.0).min(family.log_f_extended(alpha));
    2.0 * sqrt(2.0 * n * alpha * exp(-log_f_min)) + 1.0
}

/// Solves the radial initial value problem from `v(0) = alpha` out to `r_max` or the first zero.
pub fn integrate_radial(family: &Family, alpha: f64, r_max: f64) -> Result<RadialProfile> {
    integrate_radial_with(family, alpha, r_max, &ShootingOptions::default())
}

/// [`integrate_radial`] with explicit integrator settings.
pub fn integrate_radial_with(family: &Family, alpha: f64, r_max: f64, opts: &ShootingOptions) -> Result<RadialProfile> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain { value: alpha, lower: 0.0 });
    }
    let (s0, y0) = series_start(family, alpha, opts);
    let path = RadialPath::outward(family, s0, y0, r_max, opts)?;
    let (r_grid, v, v_prime) = path.samples();
    let first_zero = path.first_zero();
    Ok(RadialProfile { alpha, r_grid, v, v_prime, first_zero, lambda: first_zero.map(|r| r * r), path })
}

/// Shoots with [`default_r_max`] and returns the profile, which then always has a first zero.
pub fn shoot(family: &Family, alpha: f64, opts: &ShootingOptions) -> Result<RadialProfile> {
    let r_max = default_r_max(family, alpha);
    let profile = integrate_radial_with(family, alpha, r_max, opts)?;
    first_zero(&profile)?;
    Ok(profile)
}

/// `λ(α)` for one center value.
pub fn lambda_of_alpha(family: &Family, alpha: f64, opts: &ShootingOptions) -> Result<f64> {
    let profile = shoot(family, alpha, opts)?;
    let radius = first_zero(&profile)?;
    Ok(radius * radius)
}

/// `R(α)`, the first zero of the profile.
pub fn first_zero(profile: &RadialProfile) -> Result<f64> {
    profile.first_zero.ok_or(Error::NoCrossing { r_max: profile.path.r_max() })
}

/// The ball solution `u(ρ) = v(Rρ)` of `-Δu = λ f(u)` in the unit ball.
#[derive(Debug, Clone)]
pub struct BallSolution {
    pub lambda: f64,
    pub radius: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
}

/// Rescales a profile to the unit ball; the grid starts with the center `ρ = 0`.
pub fn scale_to_ball(profile: &RadialProfile) -> Result<BallSolution> {
    let radius = first_zero(profile)?;
    let mut rho = Vec::with_capacity(profile.r_grid.len() + 1);
    let mut u = Vec::with_capacity(profile.r_grid.len() + 1);
    let mut u_prime = Vec::with_capacity(profile.r_grid.len() + 1);
    rho.push(0.0);
    u.push(profile.alpha);
    u_prime.push(0.0);
    for ((&r, &v), &dv) in profile.r_grid.iter().zip(&profile.v).zip(&profile.v_prime) {
        rho.push((r / radius).min(1.0));
        u.push(v);
        u_prime.push(dv * radius);
    }
    if let Some(last) = rho.last_mut() {
        *last = 1.0;
    }
    Ok(BallSolution { lambda: radius * radius, radius, rho, u, u_prime })
}

impl BallSolution {
    /// `(u(ρ), u'(ρ))` from the underlying profile.
    pub fn state(&self, profile: &RadialProfile, rho: f64) -> Option<(f64, f64)> {
        let (v, dv) = profile.state(rho * self.radius)?;
        Some((v, dv * self.radius))
    }
}
