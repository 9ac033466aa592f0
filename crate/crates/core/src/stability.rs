//! Hardy-type quadratic forms and radial oscillation counts.
//!
//! For radial `φ` write `φ = r^{(2-N)/2} (-log r)^{1/2} ξ` and `τ = log(-log r)`. Then
//!
//! ```text
//! ∫|∇φ|² - (N-2)²/4 ∫φ²/r² - ¼ ∫φ²/(r log r)² = Nω_N ∫ ξ_τ² dτ,
//! ∫ φ²/(r log r)²                              = Nω_N ∫ ξ² dτ,
//! ∫ φ²/(r² (-log r)^k)                          = Nω_N ∫ ξ² e^{(2-k)τ} dτ,
//! ```
//!
//! so every quantity is evaluated in `τ` and radii such as `e^{-e^{4π}}` are never formed.
//!
//! Oscillation counts use `s = log r` and `w = r^{(2-N)/2} y`, which turns
//! `w'' + (N-1)/r w' + W w = 0` into `y_ss + κ(s) y = 0` with `κ = r² W - (N-2)²/4`,
//! followed by the Prüfer angle `θ' = cos²θ + κ sin²θ`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::math::{abs, atan2, cos, exp, floor, ln, powf, sin, sqrt, unit_ball_volume};
use crate::nonlinearity::Family;
use crate::ode::Dop853;
use crate::quadrature::{integrate, Tolerance};
use crate::shooting::{shoot, RadialProfile, ShootingOptions};
use crate::singular::SingularSolution;
use crate::{Error, Result};

/// Where a potential `W(ρ)` on the unit ball comes from.
#[derive(Debug, Clone, Copy)]
pub enum PotentialSource<'a> {
    /// `W = μ/ρ²`.
    Euler { mu: f64 },
    /// `W = (N-2)²/(4ρ²) + γ√(N-1)/(2^{k-2} ρ² (-log ρ)^k)`.
    Asymptotic { k: f64, gamma: f64 },
    /// `W = λ* f'(U*(ρ))`.
    Singular(&'a SingularSolution),
    /// `W = λ(α) f'(u(ρ, α))`.
    Regular(&'a RadialProfile),
    /// `ρ² W` tabulated on increasing `ρ`, linearly interpolated in `log ρ`.
    Sampled { rho: &'a [f64], scaled: &'a [f64] },
}

/// A potential on `(0, r_max]` in dimension `N`.
#[derive(Debug, Clone, Copy)]
pub struct PotentialProfile<'a> {
    pub n: u32,
    pub source: PotentialSource<'a>,
    /// Outer end of the Sturm interval; `1` except for the asymptotic form, which is
    /// singular at `ρ = 1` and is used on `(0, e^{-1}]`.
    pub r_max: f64,
}

impl<'a> PotentialProfile<'a> {
    pub fn euler(n: u32, mu: f64) -> Self {
        Self { n, source: PotentialSource::Euler { mu }, r_max: 1.0 }
    }

    pub fn asymptotic(n: u32, k: f64, gamma: f64) -> Self {
        Self { n, source: PotentialSource::Asymptotic { k, gamma }, r_max: exp(-1.0) }
    }

    pub fn singular(solution: &'a SingularSolution) -> Self {
        Self { n: solution.family().n(), source: PotentialSource::Singular(solution), r_max: 1.0 }
    }

    pub fn regular(profile: &'a RadialProfile) -> Self {
        Self { n: profile.path().family().n(), source: PotentialSource::Regular(profile), r_max: 1.0 }
    }

    pub fn sampled(n: u32, rho: &'a [f64], scaled: &'a [f64]) -> Self {
        Self { n, source: PotentialSource::Sampled { rho, scaled }, r_max: rho.last().copied().unwrap_or(1.0) }
    }

    fn hardy(&self) -> f64 {
        let m = self.n as f64 - 2.0;
        0.25 * m * m
    }

    /// `κ(ρ) = ρ² W(ρ) - (N-2)²/4`.
    pub fn excess(&self, rho: f64) -> Option<f64> {
        match self.source {
            PotentialSource::Euler { mu } => Some(mu - self.hardy()),
            PotentialSource::Asymptotic { k, gamma } => {
                let root = sqrt(self.n as f64 - 1.0);
                Some(gamma * root / (powf(2.0, k - 2.0) * powf(-ln(rho), k)))
            }
            PotentialSource::Singular(solution) => {
                let excess = solution.hardy_excess(rho * solution.radius())?;
                Some(excess + solution.hardy_level() - self.hardy())
            }
            PotentialSource::Regular(profile) => {
                let radius = profile.first_zero?;
                let r = rho * radius;
                let (v, _) = profile.state(r)?;
                let family = profile.path().family();
                let log_f = family.log_f_extended(v);
                Some(exp(2.0 * ln(r) + log_f) * family.dlog_f_extended(v) - self.hardy())
            }
            PotentialSource::Sampled { rho: grid, scaled } => {
                let n = grid.len();
                if n == 0 || rho < grid[0] || rho > grid[n - 1] {
                    return None;
                }
                let i = grid.partition_point(|&g| g <= rho).clamp(1, n - 1);
                let (a, b) = (ln(grid[i - 1]), ln(grid[i]));
                let w = if b > a { (ln(rho) - a) / (b - a) } else { 0.0 };
                Some(scaled[i - 1] + w * (scaled[i] - scaled[i - 1]) - self.hardy())
            }
        }
    }

    /// `W(ρ)`.
    pub fn value(&self, rho: f64) -> Option<f64> {
        Some((self.excess(rho)? + self.hardy()) / (rho * rho))
    }

    /// `(ρ, W(ρ))` on a log-spaced grid over `[r_min, r_max]`.
    pub fn sample(&self, r_min: f64, points: usize) -> Vec<(f64, f64)> {
        crate::math::logspace(r_min, self.r_max, points)
            .into_iter()
            .filter_map(|rho| Some((rho, self.value(rho)?)))
            .collect()
    }
}

/// Radial test function `ξ(τ)`, `τ = log(-log r)`, compactly supported in `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum TestFunction {
    /// `ξ = sin t`, `t = (ε/2) τ`, on `t ∈ [nπ, (n+1)π]`, i.e. `r ∈ [r_{n+1}, r_n]` with
    /// `r_n = e^{-e^{2πn/ε}}`.
    Sine { epsilon: f64, n: u32 },
    /// Piecewise-linear `ξ` through `(τ_i, ξ_i)`; the end values must be zero.
    PiecewiseLinear { tau: Vec<f64>, xi: Vec<f64> },
}

impl TestFunction {
    /// Support `[τ_lo, τ_hi]`. The corresponding radii are `e^{-e^{τ_hi}} ≤ r ≤ e^{-e^{τ_lo}}`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            TestFunction::Sine { epsilon, n } => {
                let scale = 2.0 / epsilon;
                (scale * PI * *n as f64, scale * PI * (*n as f64 + 1.0))
            }
            TestFunction::PiecewiseLinear { tau, .. } => (tau[0], tau[tau.len() - 1]),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Sine { epsilon, .. } if !(*epsilon > 0.0 && *epsilon < 1.0) => {
                Err(Error::OutOfRange { value: *epsilon, lower: 0.0, upper: 1.0 })
            }
            TestFunction::PiecewiseLinear { tau, xi } => {
                let ok = tau.len() >= 2
                    && tau.len() == xi.len()
                    && tau.windows(2).all(|w| w[1] > w[0])
                    && xi[0] == 0.0
                    && xi[xi.len() - 1] == 0.0
                    && tau.iter().chain(xi).all(|v| v.is_finite());
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "piecewise-linear test function needs increasing knots and zero ends".into(),
                    ))
                }
            }
            _ => Ok(()),
        }
    }

    /// `∫ g(τ, ξ, ξ_τ) dτ` over the support, split at the knots.
    fn integral<F: Fn(f64, f64, f64) -> f64>(&self, integrand: F) -> Result<f64> {
        let tol = Tolerance { abs: 1e-300, rel: 1e-13, max_intervals: 400 };
        match self {
            TestFunction::Sine { epsilon, .. } => {
                let (a, b) = self.support();
                let half = 0.5 * epsilon;
                Ok(integrate(|tau| integrand(tau, sin(half * tau), half * cos(half * tau)), a, b, tol)?.value)
            }
            TestFunction::PiecewiseLinear { tau, xi } => {
                let mut total = 0.0;
                for i in 0..tau.len() - 1 {
                    let slope = (xi[i + 1] - xi[i]) / (tau[i + 1] - tau[i]);
                    let at = |x: f64| xi[i] + slope * (x - tau[i]);
                    total += integrate(|x| integrand(x, at(x), slope), tau[i], tau[i + 1], tol)?.value;
                }
                Ok(total)
            }
        }
    }
}

/// `Nω_N`, the area of the unit sphere.
fn sphere_area(n: u32) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// `∫|∇φ|² - (N-2)²/4 ∫φ²/r² - ¼∫φ²/(r log r)²`, i.e. `Nω_N ∫ ξ_τ² dτ`.
pub fn hardy_deficit(potential: &PotentialProfile, test: &TestFunction) -> Result<f64> {
    test.validate()?;
    Ok(sphere_area(potential.n) * test.integral(|_, _, d| d * d)?)
}

/// `¼ ∫ φ²/(r log r)²`, the Hardy remainder weight, i.e. `¼ Nω_N ∫ ξ² dτ`.
pub fn log_hardy_weight(n: u32, test: &TestFunction) -> Result<f64> {
    test.validate()?;
    Ok(0.25 * sphere_area(n) * test.integral(|_, x, _| x * x)?)
}

/// `I(φ_n) - (1+ε)/4 ∫ φ_n²/(r log r)²` for the sine test function, by quadrature in
/// `t = (ε/2)τ`; it equals `(Nω_N/2)(ε - 1)(π/2)`.
pub fn critical_test_value(epsilon: f64, n: u32, dimension: u32) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange { value: epsilon, lower: 0.0, upper: 1.0 });
    }
    let tol = Tolerance { abs: 1e-300, rel: 1e-14, max_intervals: 200 };
    let (a, b) = (PI * n as f64, PI * (n as f64 + 1.0));
    let cos2 = integrate(|t| cos(t) * cos(t), a, b, tol)?.value;
    let sin2 = integrate(|t| sin(t) * sin(t), a, b, tol)?.value;
    Ok(0.5 * sphere_area(dimension) * (epsilon * cos2 - sin2))
}

/// Value of `Q(φ_n) = ∫|∇φ_n|² - W φ_n²` for the asymptotic potential
/// `W = (N-2)²/(4r²) + γ√(N-1)/(2^{k-2} r² (-log r)^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnulusProbe {
    pub n: u32,
    pub epsilon: f64,
    /// `log(-log r)` at the outer and inner edge of the annulus.
    pub tau_outer: f64,
    pub tau_inner: f64,
    pub form_value: f64,
    pub unstable: bool,
}

/// Evaluates `Q` on the `n`-th sine test function against the asymptotic potential.
pub fn annulus_instability_probe(dimension: u32, k: f64, gamma: f64, epsilon: f64, n: u32) -> Result<AnnulusProbe> {
    let test = TestFunction::Sine { epsilon, n };
    test.validate()?;
    let c_gamma = gamma * sqrt(dimension as f64 - 1.0) / powf(2.0, k - 2.0);
    // Q / (Nω_N) = ∫ ξ_τ² + ξ² (¼ - c_γ e^{(2-k)τ}) dτ
    let reduced = test.integral(|tau, x, d| d * d + x * x * (0.25 - c_gamma * exp((2.0 - k) * tau)))?;
    let (tau_outer, tau_inner) = test.support();
    let form_value = sphere_area(dimension) * reduced;
    Ok(AnnulusProbe { n, epsilon, tau_outer, tau_inner, form_value, unstable: form_value < 0.0 })
}

/// Probe results for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeLadder {
    pub probes: Vec<AnnulusProbe>,
    /// Smallest `n` with `Q < 0`.
    pub first_unstable: Option<u32>,
    /// Set when no annulus was unstable up to `n_max`.
    pub inconclusive: bool,
}

pub fn probe_ladder(dimension: u32, k: f64, gamma: f64, epsilon: f64, n_max: u32) -> Result<ProbeLadder> {
    let probes =
        (1..=n_max).map(|n| annulus_instability_probe(dimension, k, gamma, epsilon, n)).collect::<Result<Vec<_>>>()?;
    let first_unstable = probes.iter().find(|p| p.unstable).map(|p| p.n);
    Ok(ProbeLadder { inconclusive: first_unstable.is_none(), first_unstable, probes })
}

/// Number of interior zeros on `(r_min, r_max)` of the solution of
/// `w'' + (N-1)/r w' + W w = 0` that starts at `r_min` along the decaying indicial
/// solution of the frozen Euler equation (Dirichlet if the frozen equation oscillates).
pub fn sturm_negative_count(potential: &PotentialProfile, r_min: f64) -> Result<u32> {
    if !(r_min > 0.0 && r_min < potential.r_max) {
        return Err(Error::OutOfRange { value: r_min, lower: 0.0, upper: potential.r_max });
    }
    let failure = core::cell::Cell::new(false);
    let kappa = |s: f64| match potential.excess(exp(s)) {
        Some(v) if v.is_finite() => v,
        _ => {
            failure.set(true);
            f64::NAN
        }
    };
    let s0 = ln(r_min);
    let k0 = kappa(s0);
    let theta0 = if k0 < 0.0 {
        atan2(1.0, sqrt(-k0))
    } else if k0 == 0.0 {
        0.5 * PI
    } else {
        0.0
    };
    let rhs = |s: f64, y: &[f64; 1]| {
        let (sn, cs) = (sin(y[0]), cos(y[0]));
        [cs * cs + kappa(s) * sn * sn]
    };
    let solver = Dop853 { h_max: 0.1, ..Dop853::with_tolerances(1e-10, 1e-12) };
    let trajectory = crate::ode::solve(&solver, &rhs, s0, [theta0], ln(potential.r_max));
    if failure.get() {
        return Err(Error::Convergence { what: "potential evaluation" });
    }
    let theta_end = trajectory?.last().y[0];
    Ok(floor(theta_end / PI).max(0.0) as u32)
}

/// Counts for a ladder of inner radii.
pub fn sturm_ladder(potential: &PotentialProfile, r_mins: &[f64]) -> Result<Vec<(f64, u32)>> {
    r_mins.iter().map(|&r| Ok((r, sturm_negative_count(potential, r)?))).collect()
}

/// Inner radius used for regular solutions.
pub const REGULAR_R_MIN: f64 = 1e-6;

/// Radial Morse-index evidence for the regular solution with `u(0) = α`.
pub fn regular_morse_evidence(family: &Family, alpha: f64) -> Result<u32> {
    let profile = shoot(family, alpha, &ShootingOptions::default())?;
    sturm_negative_count(&PotentialProfile::regular(&profile), REGULAR_R_MIN)
}

/// Closed-form zero count of the oscillating Euler solution `r^{-(N-2)/2} sin(ω log(r/r_min))`
/// on `(r_min, 1)`, with `ω = √(μ - (N-2)²/4)`.
pub fn euler_zero_count(n: u32, mu: f64, r_min: f64) -> u32 {
    let m = n as f64 - 2.0;
    let excess = mu - 0.25 * m * m;
    if excess <= 0.0 {
        return 0;
    }
    let zeros = sqrt(excess) * -ln(r_min) / PI;
    let count = floor(zeros);
    // a zero exactly at r = 1 is not interior
    if count == zeros && count > 0.0 {
        (count - 1.0) as u32
    } else {
        count as u32
    }
}

/// Largest grid radius `ρ` with `κ ≤ 0` on all grid points of `[r_min, ρ]`, i.e. where the
/// potential stays below the Hardy constant; `None` if it already exceeds it at `r_min`.
pub fn stable_radius(potential: &PotentialProfile, r_min: f64, points: usize) -> Option<f64> {
    let mut last = None;
    for rho in crate::math::logspace(r_min, potential.r_max, points) {
        match potential.excess(rho) {
            Some(k) if k <= 0.0 => last = Some(rho),
            _ => break,
        }
    }
    last
}

/// Summary of a random deficit suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeficitSummary {
    pub cases: usize,
    pub min_deficit: f64,
    pub negative: usize,
}

impl DeficitSummary {
    pub fn from_values(values: &[f64]) -> Self {
        Self {
            cases: values.len(),
            min_deficit: values.iter().copied().fold(f64::INFINITY, f64::min),
            negative: values.iter().filter(|&&v| v < -1e-10).count(),
        }
    }
}

/// Magnitude of the largest `|κ|` on a grid, to judge how far a potential is from Hardy.
pub fn max_excess(potential: &PotentialProfile, r_min: f64, points: usize) -> f64 {
    crate::math::logspace(r_min, potential.r_max, points)
        .into_iter()
        .filter_map(|rho| potential.excess(rho))
        .map(abs)
        .fold(0.0, f64::max)
}
