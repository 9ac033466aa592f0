//! Bifurcation curves `α ↦ λ(α)` and the evidence that classifies them.
//!
//! The curve is sampled on an α grid, folds are located with a Schmitt trigger whose
//! band is a multiple of the shooting tolerance (the oscillation of `λ` around `λ*`
//! decays quickly and would otherwise drown in integration noise), and every fold is
//! refined by bisection in `log α`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{abs, exp, ln, logspace, sqrt};
use crate::nonlinearity::{estimate_gamma, threshold_side, Declared, Family, Side};
use crate::shooting::{lambda_of_alpha, RadialProfile, ShootingOptions};
use crate::singular::{singular_solution, SingularOptions, SingularSolution};
use crate::stability::{probe_ladder, sturm_ladder, PotentialProfile, ProbeLadder};
use crate::sweep::Mapper;
use crate::{Error, Result};

/// One solved point of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub lambda: f64,
}

/// A grid point whose shooting solve failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFailure {
    pub alpha: f64,
    pub error: String,
}

/// Bracket `[alpha_low, alpha_high]` around a fold of `λ(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TurningBracket {
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Sample with the extremal `λ` inside the bracket.
    pub alpha: f64,
    pub lambda: f64,
    /// `true` for a local maximum of `λ`.
    pub maximum: bool,
}

/// Sampled bifurcation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BifurcationCurve {
    pub samples: Vec<CurvePoint>,
    pub turning_points: Vec<TurningBracket>,
    pub lambda_star_ref: Option<f64>,
    /// Interpolated α where `λ - λ*` changes sign.
    pub crossings: Vec<f64>,
    pub failures: Vec<CurveFailure>,
    /// Hysteresis band relative to `|λ|`.
    pub band: f64,
}

/// Settings for [`trace_curve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub shooting: ShootingOptions,
    /// Refine folds until the bracket is this narrow relative to `α`; `None` disables refinement.
    pub refine_width: Option<f64>,
    /// Hysteresis band in units of the shooting tolerance.
    pub band_factor: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { shooting: ShootingOptions::default(), refine_width: Some(1e-3), band_factor: 10.0 }
    }
}

impl CurveOptions {
    pub fn band(&self) -> f64 {
        self.band_factor * self.shooting.rtol
    }
}

impl BifurcationCurve {
    /// Builds a curve from given samples, sorting by `α` and dropping repeated `α`.
    pub fn from_samples(mut samples: Vec<CurvePoint>, band: f64, lambda_star_ref: Option<f64>) -> Self {
        samples.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        samples.dedup_by(|a, b| a.alpha == b.alpha);
        let mut curve = Self {
            samples,
            turning_points: Vec::new(),
            lambda_star_ref,
            crossings: Vec::new(),
            failures: Vec::new(),
            band,
        };
        curve.turning_points = detect_turning_points(&curve);
        curve.crossings = match lambda_star_ref {
            Some(star) => crossings(&curve.samples, star, band),
            None => Vec::new(),
        };
        curve
    }

    pub fn explored_alpha_max(&self) -> f64 {
        self.samples.last().map_or(0.0, |p| p.alpha)
    }

    pub fn sup_lambda(&self) -> f64 {
        self.samples.iter().map(|p| p.lambda).fold(f64::NEG_INFINITY, f64::max)
    }

    /// No fold in the upper half (in `log α`) of the explored range.
    pub fn tail_monotone(&self) -> bool {
        let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) else {
            return false;
        };
        let start = sqrt(first.alpha * last.alpha);
        self.turning_points.iter().all(|t| t.alpha_high < start)
    }

    /// Every step is an increase, up to the hysteresis band.
    pub fn increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].lambda - w[0].lambda > -self.band * abs(w[1].lambda))
    }

    /// `(α, λ, sign of dλ/d log α)` rows for export; the slope is a central difference
    /// (one-sided at the ends) with values inside the band reported as `0`.
    pub fn slope_signs(&self) -> Vec<(f64, f64, i8)> {
        let s = &self.samples;
        let n = s.len();
        (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                let d = if b > a { s[b].lambda - s[a].lambda } else { 0.0 };
                let sign = if abs(d) <= self.band * abs(s[i].lambda) {
                    0
                } else if d > 0.0 {
                    1
                } else {
                    -1
                };
                (s[i].alpha, s[i].lambda, sign)
            })
            .collect()
    }
}

/// Indices of confirmed extrema, with `true` for maxima.
fn schmitt_extrema(samples: &[CurvePoint], band: f64) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    if samples.is_empty() {
        return out;
    }
    let value = |i: usize| samples[i].lambda;
    let (mut lo, mut hi) = (0, 0);
    let mut direction = 0i8;
    let mut ext = 0;
    for i in 1..samples.len() {
        match direction {
            0 => {
                if value(i) > value(hi) {
                    hi = i;
                }
                if value(i) < value(lo) {
                    lo = i;
                }
                if value(hi) - value(lo) > band * abs(value(hi)) {
                    if hi > lo {
                        direction = 1;
                        ext = hi;
                    } else {
                        direction = -1;
                        ext = lo;
                    }
                }
            }
            1 => {
                if value(i) >= value(ext) {
                    ext = i;
                } else if value(ext) - value(i) > band * abs(value(ext)) {
                    out.push((ext, true));
                    direction = -1;
                    ext = i;
                }
            }
            _ => {
                if value(i) <= value(ext) {
                    ext = i;
                } else if value(i) - value(ext) > band * abs(value(ext)) {
                    out.push((ext, false));
                    direction = 1;
                    ext = i;
                }
            }
        }
    }
    out
}

/// Fold brackets of a sampled curve, using the curve's hysteresis band.
pub fn detect_turning_points(curve: &BifurcationCurve) -> Vec<TurningBracket> {
    let s = &curve.samples;
    if s.len() < 3 {
        return Vec::new();
    }
    schmitt_extrema(s, curve.band)
        .into_iter()
        .map(|(i, maximum)| TurningBracket {
            alpha_low: s[i.saturating_sub(1)].alpha,
            alpha_high: s[(i + 1).min(s.len() - 1)].alpha,
            alpha: s[i].alpha,
            lambda: s[i].lambda,
            maximum,
        })
        .collect()
}

/// α values where `λ - λ*` changes sign, with a band of `band·λ*` around zero.
fn crossings(samples: &[CurvePoint], star: f64, band: f64) -> Vec<f64> {
    let width = band * abs(star);
    let mut out = Vec::new();
    let mut side = 0i8;
    let mut last_outside = 0usize;
    for (i, p) in samples.iter().enumerate() {
        let d = p.lambda - star;
        if abs(d) <= width {
            continue;
        }
        let sign = if d > 0.0 { 1 } else { -1 };
        if side != 0 && sign != side {
            // last sign change of the raw difference between the two confirmed sides
            let mut j = i;
            while j > last_outside + 1 && (samples[j - 1].lambda - star) * d > 0.0 {
                j -= 1;
            }
            let (a, b) = (samples[j - 1], samples[j]);
            let (da, db) = (a.lambda - star, b.lambda - star);
            let w = if db != da { da / (da - db) } else { 0.5 };
            out.push(exp(ln(a.alpha) + w * (ln(b.alpha) - ln(a.alpha))));
        }
        side = sign;
        last_outside = i;
    }
    out
}

fn solve_point(family: &Family, alpha: f64, opts: &ShootingOptions) -> core::result::Result<CurvePoint, CurveFailure> {
    lambda_of_alpha(family, alpha, opts)
        .map(|lambda| CurvePoint { alpha, lambda })
        .map_err(|e| CurveFailure { alpha, error: e.to_string() })
}

/// Narrows one fold by repeated bisection in `log α` of the two halves of the bracket.
fn refine_fold(
    family: &Family,
    bracket: [CurvePoint; 3],
    maximum: bool,
    width: f64,
    opts: &ShootingOptions,
) -> (Vec<CurvePoint>, Vec<CurveFailure>) {
    let mut added = Vec::new();
    let mut failures = Vec::new();
    let [mut a, mut m, mut b] = bracket;
    let better = |x: &CurvePoint, y: &CurvePoint| if maximum { x.lambda > y.lambda } else { x.lambda < y.lambda };
    for _ in 0..60 {
        if b.alpha - a.alpha <= width * m.alpha {
            break;
        }
        let left = solve_point(family, sqrt(a.alpha * m.alpha), opts);
        let right = solve_point(family, sqrt(m.alpha * b.alpha), opts);
        let (left, right) = match (left, right) {
            (Ok(l), Ok(r)) => (l, r),
            (l, r) => {
                failures.extend(l.err());
                failures.extend(r.err());
                break;
            }
        };
        added.push(left);
        added.push(right);
        let five = [a, left, m, right, b];
        let best = (1..4).fold(1, |k, j| if better(&five[j], &five[k]) { j } else { k });
        a = five[best - 1];
        m = five[best];
        b = five[best + 1];
    }
    (added, failures)
}

/// Solves `λ(α)` on `alpha_grid`, refines folds and annotates turning points and crossings.
///
/// Failed points are recorded and skipped. `lambda_star_ref` usually comes from the
/// singular solution.
pub fn trace_curve<M: Mapper>(
    family: &Family,
    alpha_grid: &[f64],
    lambda_star_ref: Option<f64>,
    opts: &CurveOptions,
    mapper: &M,
) -> Result<BifurcationCurve> {
    if alpha_grid.is_empty() || alpha_grid.windows(2).any(|w| !(w[1] > w[0])) || !(alpha_grid[0] > 0.0) {
        return Err(Error::InvalidParameter("alpha grid must be positive and strictly increasing".to_string()));
    }
    let cap = family.alpha_cap();
    if let Some(&last) = alpha_grid.last() {
        if last > cap {
            return Err(Error::OutOfRange { value: last, lower: 0.0, upper: cap });
        }
    }
    let results = mapper.map(alpha_grid, |&alpha| solve_point(family, alpha, &opts.shooting));
    let mut samples = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => samples.push(p),
            Err(f) => failures.push(f),
        }
    }
    let band = opts.band();
    if let Some(width) = opts.refine_width {
        let folds: Vec<([CurvePoint; 3], bool)> = schmitt_extrema(&samples, band)
            .into_iter()
            .filter(|&(i, _)| i > 0 && i + 1 < samples.len())
            .map(|(i, maximum)| ([samples[i - 1], samples[i], samples[i + 1]], maximum))
            .collect();
        let refined =
            mapper.map(&folds, |(bracket, maximum)| refine_fold(family, *bracket, *maximum, width, &opts.shooting));
        for (added, failed) in refined {
            samples.extend(added);
            failures.extend(failed);
        }
    }
    failures.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut curve = BifurcationCurve::from_samples(samples, band, lambda_star_ref);
    curve.failures = failures;
    Ok(curve)
}

/// Sign changes of `v(r, α) - V(r)` on a log grid over `r_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntersectionCount {
    pub count: u32,
    /// Set when subdividing a candidate interval changed the number of sign changes in it.
    pub unresolved: bool,
    pub r_lo: f64,
    pub r_hi: f64,
}

/// Grid size for [`intersection_count`].
pub const INTERSECTION_GRID: usize = 2000;

/// Default relative band below which `v - V` counts as zero.
pub const INTERSECTION_BAND: f64 = 1e-12;

/// Counts sign changes of `v - V` on `r_range`, checking each candidate by subdivision.
///
/// Differences smaller than `band·(1 + |V|)` carry no sign; a crossing is counted once the
/// difference leaves the band on the opposite side.
pub fn intersection_count(
    profile: &RadialProfile,
    singular: &SingularSolution,
    r_range: (f64, f64),
    band: f64,
) -> Result<IntersectionCount> {
    let (r_lo, r_hi) = r_range;
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(Error::InvalidParameter("intersection range must satisfy 0 < r_lo < r_hi".to_string()));
    }
    let side = |r: f64| -> Result<i8> {
        let (v, _) =
            profile.state(r).ok_or(Error::OutOfRange { value: r, lower: 0.0, upper: profile.path().r_max() })?;
        let (big_v, _) = singular.state(r).ok_or(Error::OutOfRange {
            value: r,
            lower: singular.r_min(),
            upper: singular.radius(),
        })?;
        let d = v - big_v;
        Ok(if abs(d) <= band * (1.0 + abs(big_v)) {
            0
        } else if d > 0.0 {
            1
        } else {
            -1
        })
    };
    let grid = logspace(r_lo, r_hi, INTERSECTION_GRID);
    let mut count = 0;
    let mut unresolved = false;
    let mut last: Option<(f64, i8)> = None;
    for &r in &grid {
        let s = side(r)?;
        if s == 0 {
            continue;
        }
        if let Some((r_prev, s_prev)) = last {
            if s != s_prev {
                let mut changes = 0;
                let mut current = s_prev;
                for x in logspace(r_prev, r, 9).into_iter().skip(1) {
                    let sx = side(x)?;
                    if sx != 0 && sx != current {
                        changes += 1;
                        current = sx;
                    }
                }
                unresolved |= changes != 1;
                count += changes.max(1);
            }
        }
        last = Some((r, s));
    }
    Ok(IntersectionCount { count, unresolved, r_lo, r_hi })
}

/// Classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "TypeI-evidence")]
    TypeI,
    #[serde(rename = "TypeII-evidence")]
    TypeII,
    #[serde(rename = "TypeIII/II-evidence")]
    TypeIIIOrII,
    #[serde(rename = "borderline-undetermined")]
    Borderline,
}

/// Settings for [`classify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub alpha_min: f64,
    /// Upper end of the sweep; clipped to the family's cap.
    pub alpha_max: f64,
    pub points: usize,
    pub curve: CurveOptions,
    pub singular: SingularOptions,
    pub epsilon: f64,
    pub n_max: u32,
    pub sturm_radii: [f64; 3],
    /// Band around the threshold when comparing the estimated `γ` with the declared side.
    pub side_margin: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            alpha_min: 0.1,
            alpha_max: 1e3,
            points: 240,
            curve: CurveOptions::default(),
            singular: SingularOptions::default(),
            epsilon: 0.5,
            n_max: 10,
            sturm_radii: [1e-3, 1e-5, 1e-8],
            side_margin: 0.02,
        }
    }
}

/// Stability evidence from the asymptotic potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StabilityEvidence {
    pub probes: ProbeLadder,
    /// `(r_min, count)` for the asymptotic potential.
    pub sturm_counts: Vec<(f64, u32)>,
}

/// Everything [`classify`] found, with the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassificationReport {
    pub family: String,
    pub dimension: u32,
    pub shift: f64,
    pub verdict: Verdict,
    /// Verdict from the sampled curve alone.
    pub curve_verdict: Verdict,
    pub declared: Option<Declared>,
    pub gamma_estimate: Option<f64>,
    pub declared_side: Side,
    pub estimated_side: Option<Side>,
    pub turning_count: usize,
    pub crossing_count: usize,
    pub tail_monotone: bool,
    pub explored_alpha_min: f64,
    pub explored_alpha_max: f64,
    pub alpha_cap: f64,
    pub lambda_star: Option<f64>,
    pub sup_lambda: f64,
    pub failed_points: usize,
    pub stability: Option<StabilityEvidence>,
    pub notes: Vec<String>,
}

fn curve_verdict(curve: &BifurcationCurve) -> Verdict {
    if curve.crossings.len() >= 2 {
        Verdict::TypeI
    } else if curve.turning_points.is_empty() && curve.tail_monotone() {
        Verdict::TypeII
    } else {
        Verdict::TypeIIIOrII
    }
}

/// Classification together with the curve it was based on.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub report: ClassificationReport,
    pub curve: BifurcationCurve,
}

/// Combines the threshold side, the sampled curve and the stability probes into a verdict.
pub fn classify<M: Mapper>(family: &Family, opts: &ClassifyOptions, mapper: &M) -> Result<Classification> {
    let mut notes = Vec::new();
    let declared = family.declared();
    let declared_side = family.declared_side();
    let n = family.n();

    let gamma_estimate = match declared {
        Some(d) => match estimate_gamma(family, d.k) {
            Ok(est) => Some(est.limit),
            Err(e) => {
                notes.push(alloc::format!("gamma estimate failed: {e}"));
                None
            }
        },
        None => None,
    };
    let estimated_side = match (declared, gamma_estimate) {
        (Some(d), Some(g)) => Some(threshold_side(n, d.k, g, opts.side_margin)),
        _ => None,
    };

    let lambda_star = match singular_solution(family, None, &opts.singular) {
        Ok(s) => Some(s.lambda_star),
        Err(e) => {
            notes.push(alloc::format!("singular solution unavailable: {e}"));
            None
        }
    };

    let cap = family.alpha_cap();
    let alpha_max = opts.alpha_max.min(cap);
    if alpha_max < opts.alpha_max {
        notes.push(alloc::format!("alpha range clipped to the family cap {cap:.6e}"));
    }
    if !(alpha_max > opts.alpha_min) {
        return Err(Error::OutOfRange { value: opts.alpha_min, lower: 0.0, upper: alpha_max });
    }
    let grid = logspace(opts.alpha_min, alpha_max, opts.points.max(3));
    let curve = trace_curve(family, &grid, lambda_star, &opts.curve, mapper)?;
    let by_curve = curve_verdict(&curve);

    let stability = match declared {
        Some(d) if matches!(declared_side, Side::A | Side::B) => {
            let probes = probe_ladder(n, d.k, d.gamma, opts.epsilon, opts.n_max)?;
            let potential = PotentialProfile::asymptotic(n, d.k, d.gamma);
            let sturm_counts = sturm_ladder(&potential, &opts.sturm_radii)?;
            Some(StabilityEvidence { probes, sturm_counts })
        }
        _ => None,
    };
    let annulus_fired = stability.as_ref().is_some_and(|s| s.probes.first_unstable.is_some());

    let verdict = match declared_side {
        Side::Boundary => Verdict::Borderline,
        Side::A if annulus_fired || curve.crossings.len() >= 2 => Verdict::TypeI,
        Side::A => {
            notes.push("side (A) but no unstable annulus up to n_max".to_string());
            Verdict::Borderline
        }
        Side::B if by_curve == Verdict::TypeI => Verdict::TypeIIIOrII,
        _ => by_curve,
    };
    if curve.tail_monotone() && !curve.turning_points.is_empty() {
        notes.push("turning points occur only below the upper half of the explored range".to_string());
    }

    let report = ClassificationReport {
        family: family.spec().family.clone(),
        dimension: n,
        shift: family.shift(),
        verdict,
        curve_verdict: by_curve,
        declared,
        gamma_estimate,
        declared_side,
        estimated_side,
        turning_count: curve.turning_points.len(),
        crossing_count: curve.crossings.len(),
        tail_monotone: curve.tail_monotone(),
        explored_alpha_min: curve.samples.first().map_or(opts.alpha_min, |p| p.alpha),
        explored_alpha_max: curve.explored_alpha_max(),
        alpha_cap: cap,
        lambda_star,
        sup_lambda: curve.sup_lambda(),
        failed_points: curve.failures.len(),
        stability,
        notes,
    };
    Ok(Classification { report, curve })
}

/// One rung of the translation ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranslationRow {
    pub c: f64,
    pub report: ClassificationReport,
}

/// Classification of `f(u + c)` along a ladder of shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranslationReport {
    pub rows: Vec<TranslationRow>,
    /// Smallest tested `c` whose curve has no turning point.
    pub smallest_monotone_shift: Option<f64>,
    pub turning_non_increasing: bool,
    pub explored_alpha_max: Vec<f64>,
}

/// Runs [`classify`] on `f(u + c)` for each `c` of the ladder.
pub fn translation_experiment<M: Mapper>(
    family: &Family,
    c_ladder: &[f64],
    opts: &ClassifyOptions,
    mapper: &M,
) -> Result<TranslationReport> {
    let mut rows = Vec::with_capacity(c_ladder.len());
    for &c in c_ladder {
        let shifted = family.shifted(c)?;
        rows.push(TranslationRow { c, report: classify(&shifted, opts, mapper)?.report });
    }
    let smallest_monotone_shift = rows.iter().filter(|r| r.report.turning_count == 0).map(|r| r.c).reduce(f64::min);
    let turning_non_increasing = rows.windows(2).all(|w| w[1].report.turning_count <= w[0].report.turning_count);
    let explored_alpha_max = rows.iter().map(|r| r.report.explored_alpha_max).collect();
    Ok(TranslationReport { rows, smallest_monotone_shift, turning_non_increasing, explored_alpha_max })
}

#[cfg(test)]
mod tests;
