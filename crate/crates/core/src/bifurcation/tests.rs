use super::*;
use crate::nonlinearity::FamilySpec;
use crate::shooting::shoot;
use crate::stability::stable_radius;
use crate::sweep::Sequential;
use alloc::vec;
use core::f64::consts::PI;

fn fam(spec: FamilySpec) -> Family {
    Family::from_spec(&spec).unwrap()
}

fn synthetic(alpha: &[f64], f: impl Fn(f64) -> f64) -> Vec<CurvePoint> {
    alpha.iter().map(|&a| CurvePoint { alpha: a, lambda: f(a) }).collect()
}

#[test]
fn monotone_synthetic_curve_has_no_brackets() {
    let samples = synthetic(&logspace(1.0, 1e4, 500), |a| 1.0 - 1.0 / a);
    let curve = BifurcationCurve::from_samples(samples, 1e-12, None);
    assert!(curve.turning_points.is_empty());
    assert!(curve.increasing());
    assert!(curve.tail_monotone());
}

/// Bisection for the zeros of `cos α - sin α`, the slope zeros of `16 + e^{-α} sin α`.
fn slope_zero(mut lo: f64, mut hi: f64) -> f64 {
    let g = |a: f64| a.cos() - a.sin();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn damped_oscillation_brackets_contain_slope_zeros() {
    let grid: Vec<f64> = (0..3000).map(|i| 0.05 + 12.0 * i as f64 / 2999.0).collect();
    let curve = BifurcationCurve::from_samples(synthetic(&grid, |a| 16.0 + (-a).exp() * a.sin()), 1e-12, Some(16.0));
    let zeros: Vec<f64> = (0..4).map(|n| slope_zero(n as f64 * PI, n as f64 * PI + 1.5)).collect();
    assert_eq!(curve.turning_points.len(), 4, "{:?}", curve.turning_points);
    for (bracket, zero) in curve.turning_points.iter().zip(&zeros) {
        assert!(bracket.alpha_low <= *zero && *zero <= bracket.alpha_high, "{bracket:?} {zero}");
    }
    assert!(curve.turning_points[0].maximum && !curve.turning_points[1].maximum);
    // crossings of 16 sit at multiples of π
    for (c, n) in curve.crossings.iter().zip(1..) {
        assert!((c - n as f64 * PI).abs() < 1e-2, "{c}");
    }
}

#[test]
fn noise_below_the_band_is_ignored() {
    let grid = logspace(1.0, 100.0, 400);
    let samples = synthetic(&grid, |a| 16.0 - (-a).exp() + 1e-13 * (37.0 * a).sin());
    let noisy = BifurcationCurve::from_samples(samples.clone(), 1e-12, None);
    assert!(noisy.turning_points.is_empty());
    let strict = BifurcationCurve::from_samples(samples, 0.0, None);
    assert!(!strict.turning_points.is_empty());
}

#[test]
fn exponential_in_dimension_ten_is_monotone() {
    let f = fam(FamilySpec::new("exp", 10));
    let curve = trace_curve(&f, &logspace(0.1, 300.0, 300), Some(16.0), &CurveOptions::default(), &Sequential).unwrap();
    assert!(curve.turning_points.is_empty());
    assert!(curve.crossings.is_empty());
    assert!(curve.increasing());
    let sup = curve.sup_lambda();
    assert!(16.0 - sup < 1e-2 && sup < 16.0 + 1e-10, "{sup}");
    assert!(curve.failures.is_empty());
}

#[test]
fn exponential_in_dimension_nine_oscillates() {
    let f = fam(FamilySpec::new("exp", 9));
    let curve = trace_curve(&f, &logspace(0.1, 40.0, 300), Some(14.0), &CurveOptions::default(), &Sequential).unwrap();
    assert!(curve.crossings.len() >= 3, "{:?}", curve.crossings);
    assert!(!curve.turning_points.is_empty());
    // a fold between any two consecutive crossings
    for w in curve.crossings.windows(2) {
        assert!(curve.turning_points.iter().any(|t| t.alpha > w[0] && t.alpha < w[1]));
    }
    // refined brackets are narrow
    let first = curve.turning_points[0];
    assert!((first.alpha_high - first.alpha_low) <= 1e-3 * first.alpha);
    // dense sweep as oracle for the first fold
    let opts = ShootingOptions::default();
    let dense: Vec<(f64, f64)> =
        (0..2001).map(|i| 4.0 + 3.0 * i as f64 / 2000.0).map(|a| (a, lambda_of_alpha(&f, a, &opts).unwrap())).collect();
    let peak = dense.iter().copied().fold((0.0, f64::NEG_INFINITY), |m, p| if p.1 > m.1 { p } else { m });
    let spacing = 3.0 / 2000.0;
    assert!(first.maximum);
    assert!(first.alpha_low - spacing <= peak.0 && peak.0 <= first.alpha_high + spacing, "{first:?} {peak:?}");
    assert!((first.lambda - peak.1).abs() < 1e-9);
}

#[test]
fn curve_has_no_jumps() {
    let f = fam(FamilySpec::new("exp", 9));
    let grid = logspace(0.1, 40.0, 300);
    let curve =
        trace_curve(&f, &grid, None, &CurveOptions { refine_width: None, ..CurveOptions::default() }, &Sequential)
            .unwrap();
    let steps: Vec<f64> =
        curve.samples.windows(2).map(|w| (w[1].lambda - w[0].lambda).abs() / (w[1].alpha / w[0].alpha).ln()).collect();
    let worst = steps.iter().copied().fold(0.0, f64::max);
    assert!(worst < 20.0, "{worst}");
}

#[test]
fn supercritical_power_has_no_folds() {
    let f = fam(FamilySpec::new("power", 11).param("p", 8.0));
    let curve = trace_curve(&f, &logspace(0.1, 1e6, 200), None, &CurveOptions::default(), &Sequential).unwrap();
    assert!(curve.turning_points.is_empty());
    assert!(curve.increasing());
}

#[test]
fn bad_grids_are_rejected() {
    let f = fam(FamilySpec::new("exp", 10));
    let opts = CurveOptions::default();
    assert!(trace_curve(&f, &[1.0, 0.5], None, &opts, &Sequential).is_err());
    assert!(trace_curve(&f, &[], None, &opts, &Sequential).is_err());
    assert!(trace_curve(&f, &[1.0, 1e4], None, &opts, &Sequential).is_err());
}

#[test]
fn slope_signs_follow_the_curve() {
    let samples = synthetic(&logspace(1.0, 10.0, 50), |a| (a - 5.0).powi(2));
    let curve = BifurcationCurve::from_samples(samples, 1e-12, None);
    let signs = curve.slope_signs();
    assert_eq!(signs.first().unwrap().2, -1);
    assert_eq!(signs.last().unwrap().2, 1);
}

fn exp_singular(n: u32) -> SingularSolution {
    singular_solution(&fam(FamilySpec::new("exp", n)), None, &SingularOptions::default()).unwrap()
}

#[test]
fn intersections_grow_in_dimension_nine() {
    let f = fam(FamilySpec::new("exp", 9));
    let singular = exp_singular(9);
    let opts = ShootingOptions::default();
    let mut previous = 0;
    for alpha in [10.0, 20.0, 30.0, 40.0] {
        let profile = shoot(&f, alpha, &opts).unwrap();
        let r_hi = profile.first_zero.unwrap().min(singular.radius());
        let count = intersection_count(&profile, &singular, (1e-12, r_hi), INTERSECTION_BAND).unwrap();
        assert!(!count.unresolved);
        assert!(count.count >= 2 && count.count >= previous, "alpha={alpha}: {count:?}");
        previous = count.count;
    }
}

#[test]
fn intersections_stay_separated_in_dimension_ten() {
    let f = fam(FamilySpec::new("exp", 10));
    let singular = exp_singular(10);
    let opts = ShootingOptions::default();
    for alpha in [5.0, 20.0, 80.0, 300.0] {
        let profile = shoot(&f, alpha, &opts).unwrap();
        let r_hi = profile.first_zero.unwrap().min(singular.radius());
        let count = intersection_count(&profile, &singular, (1e-3, r_hi), INTERSECTION_BAND).unwrap();
        assert!(count.count <= 1, "alpha={alpha}: {count:?}");
        // oracle: dense scan against the exact V = log(16/r²)
        let mut changes = 0;
        let mut last = 0.0;
        for r in logspace(1e-3, r_hi, 20000) {
            let exact = (16.0 / (r * r)).ln();
            let d = profile.state(r).unwrap().0 - exact;
            if d.abs() > INTERSECTION_BAND * (1.0 + exact.abs()) {
                if last != 0.0 && d.signum() != last {
                    changes += 1;
                }
                last = d.signum();
            }
        }
        assert_eq!(count.count, changes, "alpha={alpha}");
    }
    assert!(intersection_count(&shoot(&f, 5.0, &opts).unwrap(), &singular, (1.0, 0.5), INTERSECTION_BAND).is_err());
}

#[test]
fn profiles_are_ordered_below_the_singular_solution() {
    // e^u (1+u)^{-1} in dimension 10 lies on the stable side
    let f = fam(FamilySpec::new("exp_times_power", 10).param("nu", -1.0));
    let singular = singular_solution(&f, None, &SingularOptions::default()).unwrap();
    let rho0 = stable_radius(&PotentialProfile::singular(&singular), 1e-8, 400).unwrap();
    let r0 = rho0 * singular.radius();
    let opts = ShootingOptions::default();
    let alphas = [1.0, 2.0, 5.0, 10.0, 20.0];
    let profiles: Vec<_> = alphas.iter().map(|&a| shoot(&f, a, &opts).unwrap()).collect();
    let shared = profiles.iter().map(|p| p.first_zero.unwrap()).fold(r0, f64::min);
    for r in logspace(1e-4, shared, 400) {
        let big_v = singular.state(r).unwrap().0;
        let values: Vec<f64> = profiles.iter().map(|p| p.state(r).unwrap().0).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]), "r={r}: {values:?} V={big_v}");
        // the largest profile agrees with V to about 1e-12 near r = 1e-4
        assert!(*values.last().unwrap() < big_v + 1e-9, "r={r}: {values:?} V={big_v}");
    }
}

fn quick() -> ClassifyOptions {
    ClassifyOptions { points: 160, ..ClassifyOptions::default() }
}

#[test]
fn classification_of_the_critical_family() {
    let above = fam(FamilySpec::new("f_n_gamma", 10).param("gamma", 1.0));
    let report = classify(&above, &quick(), &Sequential).unwrap().report;
    assert_eq!(report.declared_side, Side::A);
    assert_eq!(report.verdict, Verdict::TypeI);
    assert!(report.stability.as_ref().unwrap().probes.first_unstable.is_some());

    let below = fam(FamilySpec::new("f_n_gamma", 10).param("gamma", -1.0));
    let report = classify(&below, &quick(), &Sequential).unwrap().report;
    assert_eq!(report.declared_side, Side::B);
    assert!(matches!(report.verdict, Verdict::TypeII | Verdict::TypeIIIOrII));
    assert!(report.tail_monotone);
    let evidence = report.stability.unwrap();
    assert!(evidence.probes.inconclusive);
    assert!(evidence.sturm_counts.iter().all(|&(_, c)| c == 0));
    assert_eq!(report.estimated_side, Some(Side::B));
}

#[test]
fn exponential_boundary_case() {
    let report = classify(&fam(FamilySpec::new("exp", 10)), &quick(), &Sequential).unwrap().report;
    assert_eq!(report.declared_side, Side::Boundary);
    assert_eq!(report.verdict, Verdict::Borderline);
    assert_eq!(report.curve_verdict, Verdict::TypeII);
    assert!((report.lambda_star.unwrap() - 16.0).abs() < 1e-6);
}

#[test]
fn oscillating_exponential_is_type_one() {
    let opts = ClassifyOptions { alpha_max: 40.0, ..quick() };
    let report = classify(&fam(FamilySpec::new("exp", 9)), &opts, &Sequential).unwrap().report;
    assert_eq!(report.declared_side, Side::QAbove);
    assert_eq!(report.verdict, Verdict::TypeI);
    assert!(report.crossing_count >= 3);
}

#[test]
fn classification_is_deterministic() {
    let f = fam(FamilySpec::new("f_n_gamma", 10).param("gamma", -1.0));
    let a = classify(&f, &quick(), &Sequential).unwrap();
    let b = classify(&f, &quick(), &Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn translations() {
    let opts = ClassifyOptions { points: 80, ..ClassifyOptions::default() };
    let exp = translation_experiment(&fam(FamilySpec::new("exp", 10)), &[0.0, 1.0, 5.0], &opts, &Sequential).unwrap();
    assert!(exp.rows.iter().all(|r| r.report.verdict == exp.rows[0].report.verdict));
    assert!(exp.rows.iter().all(|r| r.report.turning_count == exp.rows[0].report.turning_count));

    let power = fam(FamilySpec::new("power", 11).param("p", 8.0));
    let rows = translation_experiment(&power, &[0.0, 1.0, 5.0], &opts, &Sequential).unwrap();
    assert!(rows.rows.iter().all(|r| r.report.verdict == Verdict::TypeII));

    let critical = fam(FamilySpec::new("f_n_gamma", 10).param("gamma", -1.0));
    let ladder = translation_experiment(&critical, &[0.0, 1.0, 5.0, 20.0], &opts, &Sequential).unwrap();
    assert!(ladder.turning_non_increasing);
    assert_eq!(ladder.rows.last().unwrap().report.turning_count, 0);
    assert!(ladder.smallest_monotone_shift.is_some());
    assert!(ladder.explored_alpha_max.iter().all(|&a| a > 600.0));
}

#[test]
fn declared_side_matches_estimated_gamma() {
    let specs = vec![
        FamilySpec::new("exp_log_power", 10).param("nu", 2.0),
        FamilySpec::new("exp_power", 10).param("nu", 0.5),
        FamilySpec::new("exp_exp", 10),
        FamilySpec::new("exp_times_power", 10).param("nu", 0.5),
        FamilySpec::new("jl_log_power", 11).param("nu", 1.0),
        FamilySpec::new("f_n_gamma", 12).param("gamma", -0.5),
    ];
    for spec in specs {
        let f = fam(spec);
        let d = f.declared().unwrap();
        let estimate = estimate_gamma(&f, d.k).unwrap();
        assert_eq!(threshold_side(f.n(), d.k, estimate.limit, 0.0), f.declared_side(), "{}", f.spec().family);
    }
}
