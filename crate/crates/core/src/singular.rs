//! The radial singular solution `V` of `-ΔV = f(V)` with `V(r) → ∞` as `r → 0`.
//!
//! Near the origin `V` is represented through `t = -log r` and a correction that tends
//! to zero as `t → ∞`:
//!
//! * for `N = 10` (`q_JL = 1`) the `x` variable, `F(V)/r² = e^{-x}/(2N-4)`;
//! * for `N ≥ 11` the `z` variable, `F(V)/r² = (1+z)^{-1/(q_JL-1)}/(2N-4q_JL)`;
//! * for non-critical families the log variable `y`, `F(V)/r² = e^{-y}/(2N-4q)`, with
//!   `q` the family's own growth constant.
//!
//! The correction solves an autonomous second-order equation forced by
//! `φ(V) = f'(V)F(V) - q`, where `V` is recovered from the branch relation through `F⁻¹`
//! at every evaluation. The bounded solution is selected by integrating backward in `t`
//! from asymptotic initial data, after which the linearization contracts errors like
//! `e^{-a Δt}`.

use alloc::format;
use alloc::vec::Vec;
use core::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::extrapolate::linear_fit;
use crate::math::{abs, exp, exp_m1, ln, ln_1p, pow1p_m1, powf, sqrt};
use crate::nonlinearity::{Family, Reference};
use crate::ode::{Dop853, Node, Trajectory};
use crate::shooting::{RadialPath, ShootingOptions};
use crate::{Error, Result};

/// Which transformed variable carries the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    X,
    Z,
    Log,
}

/// Settings for [`solve_transformed`] and [`reconstruct_v`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularOptions {
    /// Nominal start of the asymptotic regime; the trajectory is valid from here down.
    pub t0: f64,
    pub t_min: f64,
    /// Extra backward distance so that the initial-data error has decayed by `t0`.
    /// `None` chooses it from the contraction rate of the linearization.
    pub margin: Option<f64>,
    /// Envelope is enforced for `t` at or above this value.
    pub envelope_from: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SingularOptions {
    fn default() -> Self {
        Self { t0: 40.0, t_min: 3.0, margin: None, envelope_from: 10.0, rtol: 1e-10, atol: 1e-12 }
    }
}

/// Growth data `(k, γ)` used for initial data and envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub k: f64,
    pub gamma: f64,
}

/// The transformed equation for one family.
#[derive(Debug, Clone)]
struct Transform {
    family: Family,
    branch: Branch,
    n: f64,
    q: f64,
    /// `2N - 4q`, which equals `a²` on the critical branches.
    c: f64,
    /// Drift rate `(N + 2 - 4q)/2`.
    a: f64,
}

impl Transform {
    fn new(family: &Family) -> Result<Self> {
        let reference = family.reference().ok_or(Error::DivergentTail)?;
        let consts = family.constants();
        let q = reference.q();
        let critical = abs(q - consts.q_jl) <= 1e-9 * q;
        let branch = match (consts.n, reference, critical) {
            (10, Reference::Exponential, true) => Branch::X,
            (n, Reference::Power(_), true) if n >= 11 => Branch::Z,
            _ => Branch::Log,
        };
        let n = consts.n as f64;
        Ok(Self { family: family.clone(), branch, n, q, c: 2.0 * n - 4.0 * q, a: 0.5 * (n + 2.0 - 4.0 * q) })
    }

    /// `(y, y')` for the log variable from the branch variable.
    fn log_variable(&self, value: f64, derivative: f64) -> (f64, f64) {
        match self.branch {
            Branch::X | Branch::Log => (value, derivative),
            Branch::Z => {
                let m = 1.0 / (self.q - 1.0);
                (m * ln_1p(value), m * derivative / (1.0 + value))
            }
        }
    }

    /// `log F(V)` prescribed by the branch relation at `t`.
    fn target(&self, t: f64, y: f64) -> f64 {
        -2.0 * t - y - ln(self.c)
    }

    /// Second derivative of the branch variable.
    fn acceleration(&self, value: f64, derivative: f64, phi: f64) -> f64 {
        match self.branch {
            Branch::X => {
                let lift = derivative + 2.0;
                (self.n - 2.0) * derivative - self.c * exp_m1(value) - phi * lift * lift
            }
            Branch::Z => {
                let qm = self.q - 1.0;
                let p = self.q / qm;
                let lift = derivative / (qm * (1.0 + value)) + 2.0;
                2.0 * self.a * derivative
                    - self.c * qm * (pow1p_m1(value, p) - value)
                    - qm * phi * lift * lift * (1.0 + value)
            }
            Branch::Log => {
                let lift = derivative + 2.0;
                2.0 * self.a * derivative
                    - (self.q - 1.0) * derivative * derivative
                    - self.c * exp_m1(value)
                    - phi * lift * lift
            }
        }
    }

    /// Initial data from the leading correction (zero on the non-critical branch).
    fn initial_data(&self, t: f64, asym: Option<Asymptotics>) -> [f64; 2] {
        let Some(Asymptotics { k, gamma }) = asym else {
            return [0.0, 0.0];
        };
        let coefficient = match self.branch {
            Branch::X => -gamma / powf(2.0, k + 2.0),
            Branch::Z => -gamma * (self.q - 1.0) / (self.c * powf(2.0, k - 2.0)),
            Branch::Log => return [0.0, 0.0],
        };
        let tk = powf(t, k);
        [coefficient / tk, -k * coefficient / (tk * t)]
    }

    /// Envelope bound on `sup t^k |value|`.
    fn envelope(&self, asym: Asymptotics) -> f64 {
        match self.branch {
            Branch::X => powf(2.0, -asym.k) * (1.0 + abs(asym.gamma)),
            Branch::Z => powf(2.0, 3.0 - asym.k) * (1.0 + abs(asym.gamma)) * self.q / self.c,
            Branch::Log => f64::INFINITY,
        }
    }
}

/// Closure of the transformed equation that remembers the last `V` as a Newton hint.
struct Closure<'a> {
    transform: &'a Transform,
    hint: Cell<Option<f64>>,
    failure: Cell<Option<Error>>,
}

/// Reconstructed point: `V`, `K = f(V)F(V)` and `φ(V)`.
#[derive(Debug, Clone, Copy)]
struct Reconstructed {
    v: f64,
    k_integral: f64,
    phi: f64,
}

impl<'a> Closure<'a> {
    fn new(transform: &'a Transform) -> Self {
        Self { transform, hint: Cell::new(None), failure: Cell::new(None) }
    }

    fn reconstruct(&self, t: f64, y: f64) -> Result<Reconstructed> {
        let family = &self.transform.family;
        let v = family.invert_log_big_f(self.transform.target(t, y), self.hint.get())?;
        self.hint.set(Some(v));
        let tail = family.tail(v)?;
        Ok(Reconstructed { v, k_integral: tail.k_integral, phi: tail.j_minus_q })
    }

    fn rhs(&self, t: f64, state: &[f64; 2]) -> [f64; 2] {
        let (y, _) = self.transform.log_variable(state[0], state[1]);
        match self.reconstruct(t, y) {
            Ok(point) => [state[1], self.transform.acceleration(state[0], state[1], point.phi)],
            Err(e) => {
                let first = self.failure.take();
                self.failure.set(first.or(Some(e)));
                [f64::NAN, f64::NAN]
            }
        }
    }
}

/// Backward solution of the transformed equation on `[t_min, t_start]`.
#[derive(Debug, Clone)]
pub struct TransformedTrajectory {
    pub branch: Branch,
    pub asymptotics: Option<Asymptotics>,
    /// Nominal `t0` and the actual start `t0 + margin`.
    pub t0: f64,
    pub t_start: f64,
    pub t_min: f64,
    /// Decreasing from `t_start` to `t_min`.
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub phi: Vec<f64>,
    /// `V(e^{-t})` at the nodes.
    pub v: Vec<f64>,
    /// Largest `t^k |value|` over `t ≥ envelope_from`, and the envelope it is held to.
    pub envelope_ratio: Option<f64>,
    transform: Transform,
    trajectory: Trajectory<2>,
}

/// Contraction-based margin: `(1 + a m) e^{-a m} (1 + |γ|) ≤ 1e-10`.
fn default_margin(a: f64, asym: Option<Asymptotics>) -> f64 {
    let gamma = asym.map_or(1.0, |s| abs(s.gamma));
    let goal = ln((1.0 + gamma) * 1e10);
    let mut m = goal / a;
    for _ in 0..50 {
        m = (goal + ln(1.0 + a * m)) / a;
    }
    m
}

/// Integrates the transformed equation backward from `t0 + margin` to `t_min`.
///
/// `asymptotics` defaults to the family's declared `(k, γ)` when the family is critical.
pub fn solve_transformed(
    family: &Family,
    asymptotics: Option<Asymptotics>,
    opts: &SingularOptions,
) -> Result<TransformedTrajectory> {
    if !(opts.t_min >= 1.0) || !(opts.t0 > opts.t_min) {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ t_min < t0, got t_min = {}, t0 = {}",
            opts.t_min, opts.t0
        )));
    }
    let transform = Transform::new(family)?;
    let asym = match transform.branch {
        Branch::Log => None,
        _ => asymptotics.or_else(|| family.declared().map(|d| Asymptotics { k: d.k, gamma: d.gamma })),
    };
    if transform.branch != Branch::Log && asym.is_none() {
        return Err(Error::InvalidParameter(format!("family `{}` has no declared (k, γ)", family.spec().family)));
    }
    let margin = opts.margin.unwrap_or_else(|| default_margin(transform.a, asym));
    let t_start = opts.t0 + margin;
    let closure = Closure::new(&transform);
    let rhs = |t: f64, y: &[f64; 2]| closure.rhs(t, y);
    let solver = Dop853::with_tolerances(opts.rtol, opts.atol);
    let y0 = transform.initial_data(t_start, asym);
    let solved = crate::ode::solve(&solver, &rhs, t_start, y0, opts.t_min);
    if let Some(e) = closure.failure.take() {
        return Err(e);
    }
    let trajectory = solved?;

    let mut out = TransformedTrajectory {
        branch: transform.branch,
        asymptotics: asym,
        t0: opts.t0,
        t_start,
        t_min: opts.t_min,
        t_grid: Vec::with_capacity(trajectory.nodes.len()),
        values: Vec::with_capacity(trajectory.nodes.len()),
        derivatives: Vec::with_capacity(trajectory.nodes.len()),
        phi: Vec::with_capacity(trajectory.nodes.len()),
        v: Vec::with_capacity(trajectory.nodes.len()),
        envelope_ratio: None,
        transform: transform.clone(),
        trajectory,
    };
    let probe = Closure::new(&transform);
    let mut worst: f64 = 0.0;
    for node in &out.trajectory.nodes {
        let (y, _) = transform.log_variable(node.y[0], node.y[1]);
        let point = probe.reconstruct(node.t, y)?;
        out.t_grid.push(node.t);
        out.values.push(node.y[0]);
        out.derivatives.push(node.y[1]);
        out.phi.push(point.phi);
        out.v.push(point.v);
        if let Some(s) = asym {
            if node.t >= opts.envelope_from {
                let scaled = powf(node.t, s.k) * abs(node.y[0]);
                let bound = transform.envelope(s);
                worst = worst.max(scaled / bound);
                if scaled > 2.0 * 1.2 * bound {
                    return Err(Error::TrajectoryEscape { t: node.t, scaled, bound });
                }
            }
        }
    }
    if asym.is_some() {
        out.envelope_ratio = Some(worst);
    }
    Ok(out)
}

impl TransformedTrajectory {
    /// Branch value and derivative at any `t` in `[t_min, t_start]`.
    pub fn state(&self, t: f64) -> Option<[f64; 2]> {
        Some(self.node_at(t)?.y)
    }

    fn node_at(&self, t: f64) -> Option<Node<2>> {
        let i = self.trajectory.segment(t)?;
        let a = &self.trajectory.nodes[i];
        let b = &self.trajectory.nodes[i + 1];
        if t == a.t {
            return Some(*a);
        }
        if t == b.t {
            return Some(*b);
        }
        let closure = Closure::new(&self.transform);
        let rhs = |s: f64, y: &[f64; 2]| closure.rhs(s, y);
        let node = Dop853::step_exact(&rhs, a, t - a.t);
        closure.failure.take().is_none().then_some(node)
    }

    /// `(V, V', φ(V), r² f'(V))` at `r = e^{-t}`.
    fn point(&self, t: f64) -> Option<InnerPoint> {
        let [value, derivative] = self.state(t)?;
        let (y, dy) = self.transform.log_variable(value, derivative);
        let point = Closure::new(&self.transform).reconstruct(t, y).ok()?;
        let r = exp(-t);
        let tr = &self.transform;
        Some(InnerPoint {
            v: point.v,
            v_prime: -point.k_integral * (2.0 + dy) / r,
            phi: point.phi,
            // r² f'(V) = r² (q + φ)/F(V) = c e^y (q + φ)
            hardy_excess: tr.c * (tr.q * exp_m1(y) + exp(y) * point.phi),
            y,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct InnerPoint {
    v: f64,
    v_prime: f64,
    phi: f64,
    /// `r² f'(V) - c q`, which tends to 0 as `r → 0`.
    hardy_excess: f64,
    y: f64,
}

/// Singular solution on `[e^{-t_start}, √λ*]` together with its rescaling to the unit ball.
#[derive(Debug, Clone)]
pub struct SingularSolution {
    pub trajectory: TransformedTrajectory,
    /// Increasing radii covering the transformed part and the outward integration.
    pub r_grid: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    pub lambda_star: f64,
    /// `U*(ρ) = V(√λ* ρ)` on the same nodes, `ρ ∈ (0, 1]`.
    pub u_star_rho: Vec<f64>,
    pub u_star: Vec<f64>,
    pub handoff_radius: f64,
    /// `V'(r_h)` from the transformed solution and by differencing `V`.
    pub handoff_derivatives: (f64, f64),
    outer: RadialPath,
}

/// Builds `V` and `λ*` from a transformed trajectory.
///
/// Inside `r_h = e^{-t_min}` `V` comes from the branch relation; beyond it the radial
/// equation is integrated outward from `(V(r_h), V'(r_h))` to the first zero.
pub fn reconstruct_v(trajectory: TransformedTrajectory) -> Result<SingularSolution> {
    let t_h = trajectory.t_min;
    let handoff_radius = exp(-t_h);
    let at_handoff = trajectory.point(t_h).ok_or(Error::Convergence { what: "handoff reconstruction" })?;

    let delta = 1e-3;
    let mut values = [0.0; 5];
    for (j, slot) in values.iter_mut().enumerate() {
        *slot = trajectory.point(t_h + delta * j as f64).ok_or(Error::Convergence { what: "handoff differencing" })?.v;
    }
    // V_t by a one-sided fifth-order stencil, then V_r = -V_t / r.
    let v_t =
        (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3] - 3.0 * values[4]) / (12.0 * delta);
    let differenced = -v_t / handoff_radius;
    if abs(differenced - at_handoff.v_prime) > 1e-6 * abs(at_handoff.v_prime) {
        return Err(Error::HandoffMismatch { formula: at_handoff.v_prime, difference: differenced });
    }

    let family = trajectory.transform.family.clone();
    let f_floor = family.log_f_extended(0.0).min(family.log_f_extended(at_handoff.v));
    let r_max = 2.0 * sqrt(2.0 * trajectory.transform.n * (at_handoff.v + 1.0) * exp(-f_floor)) + 1.0;
    let outer = RadialPath::outward(
        &family,
        -t_h,
        [at_handoff.v, handoff_radius * at_handoff.v_prime],
        r_max,
        &ShootingOptions::default(),
    )?;
    let radius = outer.first_zero().ok_or(Error::NoCrossing { r_max })?;
    let lambda_star = radius * radius;

    let mut r_grid = Vec::new();
    let mut v = Vec::new();
    let mut v_prime = Vec::new();
    for &t in trajectory.t_grid.iter().rev() {
        if t <= t_h {
            continue;
        }
        let p = trajectory.point(t).ok_or(Error::Convergence { what: "inner reconstruction" })?;
        r_grid.push(exp(-t));
        v.push(p.v);
        v_prime.push(p.v_prime);
    }
    let (ro, vo, dvo) = outer.samples();
    r_grid.extend(ro);
    v.extend(vo);
    v_prime.extend(dvo);
    let u_star_rho = r_grid.iter().map(|r| (r / radius).min(1.0)).collect();
    let u_star = v.clone();

    Ok(SingularSolution {
        trajectory,
        r_grid,
        v,
        v_prime,
        lambda_star,
        u_star_rho,
        u_star,
        handoff_radius,
        handoff_derivatives: (at_handoff.v_prime, differenced),
        outer,
    })
}

/// [`solve_transformed`] followed by [`reconstruct_v`].
pub fn singular_solution(
    family: &Family,
    asymptotics: Option<Asymptotics>,
    opts: &SingularOptions,
) -> Result<SingularSolution> {
    let t_min = handoff_floor(family)?.max(opts.t_min);
    if t_min > opts.t_min && t_min < opts.t0 {
        let moved = SingularOptions { t_min, ..*opts };
        return reconstruct_v(solve_transformed(family, asymptotics, &moved)?);
    }
    reconstruct_v(solve_transformed(family, asymptotics, opts)?)
}

/// Smallest handoff time at which `V` is still clearly positive.
///
/// Near the center `F(V) ≈ r²/C`, so `V(e^{-t}) > 0` needs `-2t - log C < log F(0)`;
/// one unit of `t` is added as a safety margin. Matters for strongly translated families,
/// whose `λ*` is tiny.
fn handoff_floor(family: &Family) -> Result<f64> {
    let transform = Transform::new(family)?;
    let log_f0 = family.eval_log_big_f(0.0)?;
    Ok(-0.5 * (log_f0 + ln(transform.c)) + 1.0)
}

impl SingularSolution {
    pub fn family(&self) -> &Family {
        &self.trajectory.transform.family
    }

    /// Smallest radius covered.
    pub fn r_min(&self) -> f64 {
        exp(-self.trajectory.t_start)
    }

    /// `√λ*`, the first zero of `V`.
    pub fn radius(&self) -> f64 {
        sqrt(self.lambda_star)
    }

    /// `(V(r), V'(r))` for `r` in `[r_min, √λ*]`.
    pub fn state(&self, r: f64) -> Option<(f64, f64)> {
        if r < self.handoff_radius {
            let p = self.trajectory.point(-ln(r))?;
            Some((p.v, p.v_prime))
        } else {
            self.outer.state(r)
        }
    }

    /// `r² f'(V(r)) - (N-2)²/4` on the critical branches (`r² f'(V) - (2N-4q) q` in general),
    /// evaluated without cancellation inside the handoff radius.
    pub fn hardy_excess(&self, r: f64) -> Option<f64> {
        let tr = &self.trajectory.transform;
        if r < self.handoff_radius {
            return Some(self.trajectory.point(-ln(r))?.hardy_excess);
        }
        let (v, _) = self.outer.state(r)?;
        let family = &tr.family;
        let scaled = r * r * exp(family.log_f_extended(v)) * family.dlog_f_extended(v);
        Some(scaled - tr.c * tr.q)
    }

    /// `(2N - 4q) q`, which is `(N-2)²/4` at criticality.
    pub fn hardy_level(&self) -> f64 {
        self.trajectory.transform.c * self.trajectory.transform.q
    }

    /// `φ(V(r))` and the log variable `y` inside the handoff radius.
    pub fn phi_at(&self, r: f64) -> Option<(f64, f64)> {
        let p = self.trajectory.point(-ln(r))?;
        Some((p.phi, p.y))
    }

    /// `U*(ρ) = V(√λ* ρ)` and its derivative.
    pub fn u_star_state(&self, rho: f64) -> Option<(f64, f64)> {
        let scale = self.radius();
        let (v, dv) = self.state(rho * scale)?;
        Some((v, dv * scale))
    }

    /// Smallest constant with `|V'(r)| ≤ Ĉ r^{-(1 + 2/(p0-1))}` on the computed grid.
    pub fn decay_constant(&self, p0: f64) -> f64 {
        let exponent = 1.0 + 2.0 / (p0 - 1.0);
        self.r_grid.iter().zip(&self.v_prime).map(|(&r, &dv)| abs(dv) * powf(r, exponent)).fold(0.0, f64::max)
    }
}

/// One row of an asymptotic convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub t: f64,
    pub r: f64,
    pub value: f64,
}

/// Convergence table with an extrapolated limit and a 10 % verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AsymptoticTable {
    pub quantity: &'static str,
    pub k: f64,
    pub gamma: f64,
    pub rows: Vec<AsymptoticRow>,
    pub fit_window: (f64, f64),
    pub extrapolated: f64,
    pub slope: f64,
    pub pass: bool,
}

/// `t` window and sample count used for the asymptotic fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { t_lo: 20.0, t_hi: 40.0, points: 41 }
    }
}

fn fitted_table(
    quantity: &'static str,
    k: f64,
    gamma: f64,
    window: FitWindow,
    sample: impl Fn(f64) -> Option<(f64, f64)>,
) -> AsymptoticTable {
    let mut rows = Vec::with_capacity(window.points);
    let mut h = Vec::with_capacity(window.points);
    let mut vals = Vec::with_capacity(window.points);
    let span = window.t_hi - window.t_lo;
    for i in 0..window.points {
        let t = window.t_lo + span * i as f64 / (window.points - 1).max(1) as f64;
        if let Some((r, value)) = sample(t) {
            rows.push(AsymptoticRow { t, r, value });
            h.push(powf(t, -k.min(1.0)));
            vals.push(value);
        }
    }
    let (extrapolated, slope) = linear_fit(&h, &vals).unwrap_or((f64::NAN, f64::NAN));
    let pass = if gamma == 0.0 { abs(extrapolated) <= 1e-6 } else { abs(extrapolated - gamma) <= 0.1 * abs(gamma) };
    AsymptoticTable { quantity, k, gamma, rows, fit_window: (window.t_lo, window.t_hi), extrapolated, slope, pass }
}

/// `E(r) = (λ* f'(U*(r)) - (N-2)²/(4r²)) 2^{k-2} r² (-log r)^k / √(N-1)` on the unit ball,
/// with `t = -log r` sampled over the fit window.
pub fn verify_fprime_asymptotic(solution: &SingularSolution, k: f64, gamma: f64, window: FitWindow) -> AsymptoticTable {
    let n = solution.trajectory.transform.n;
    let half_log_lambda = 0.5 * ln(solution.lambda_star);
    fitted_table("fprime", k, gamma, window, |t| {
        // Ball radius e^{-t} corresponds to V's radius e^{-(t - ½ log λ*)}.
        let excess = solution.hardy_excess(exp(half_log_lambda - t))?;
        Some((exp(-t), excess * powf(2.0, k - 2.0) * powf(t, k) / sqrt(n - 1.0)))
    })
}

/// `φ(V(r)) 2^k (-log r)^k`, which tends to `γ`.
pub fn verify_phi_asymptotic(solution: &SingularSolution, k: f64, gamma: f64, window: FitWindow) -> AsymptoticTable {
    fitted_table("phi", k, gamma, window, |t| {
        let (phi, _) = solution.phi_at(exp(-t))?;
        Some((exp(-t), phi * powf(2.0, k) * powf(t, k)))
    })
}
