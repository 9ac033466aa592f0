use gelfand_core::bifurcation::{BifurcationCurve, CurvePoint};
use gelfand_core::math::logspace;
use gelfand_core::nonlinearity::{Family, FamilySpec};
use gelfand_core::shooting::{shoot, ShootingOptions};
use gelfand_core::stability::{sturm_negative_count, PotentialProfile};
use gelfand_core::DimensionConstants;
use proptest::prelude::*;

fn family(spec: FamilySpec) -> Family {
    Family::from_spec(&spec).unwrap()
}

fn catalogue() -> Vec<Family> {
    vec![
        family(FamilySpec::new("exp", 10)),
        family(FamilySpec::new("power", 11).param("p", 5.0)),
        family(FamilySpec::new("exp_power", 10).param("nu", 0.5)),
        family(FamilySpec::new("exp_exp", 10)),
        family(FamilySpec::new("exp_times_power", 10).param("nu", 0.5)),
        family(FamilySpec::new("jl_log_power", 11).param("nu", 1.0)),
        family(FamilySpec::new("f_n_gamma", 10).param("gamma", -1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimension_constants_are_consistent(n in 3u32..60) {
        let c = DimensionConstants::new(n).unwrap();
        let root = ((n - 1) as f64).sqrt();
        prop_assert!((c.q_jl - (n as f64 - 2.0 * root) / 4.0).abs() <= 1e-12);
        prop_assert!((c.a - (n as f64 + 2.0 - 4.0 * c.q_jl) / 2.0).abs() <= 1e-12);
        prop_assert!((c.a - (1.0 + root)).abs() <= 1e-12);
        if n >= 11 {
            prop_assert!((c.p_jl - c.q_jl / (c.q_jl - 1.0)).abs() <= 1e-9 * c.p_jl);
        }
    }

    #[test]
    fn big_f_is_decreasing_and_inverts(index in 0usize..7, a in 0.0f64..60.0, b in 0.0f64..60.0) {
        let f = &catalogue()[index];
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assume!(hi - lo > 1e-3);
        let (l_lo, l_hi) = (f.eval_log_big_f(lo).unwrap(), f.eval_log_big_f(hi).unwrap());
        prop_assert!(l_hi < l_lo, "{}: log F({lo}) = {l_lo}, log F({hi}) = {l_hi}", f.spec().family);
        let back = f.invert_log_big_f(l_hi, None).unwrap();
        prop_assert!((back - hi).abs() <= 1e-10 * hi.max(1.0), "{}: {back} vs {hi}", f.spec().family);
    }

    #[test]
    fn f_is_positive_with_finite_log_derivatives(index in 0usize..7, u in 0.0f64..200.0) {
        let f = &catalogue()[index];
        let log_f = f.eval_log_f(u).unwrap();
        prop_assume!(log_f.is_finite());
        prop_assert!(log_f.exp() > 0.0 || log_f < -700.0);
        prop_assert!(f.dlog_f(u).unwrap().is_finite());
        prop_assert!(f.second_over_first(u).unwrap().is_finite());
    }

    #[test]
    fn closed_form_families_satisfy_f_big_f_prime_identity(u in 0.0f64..500.0, p in 1.5f64..12.0) {
        let exp = family(FamilySpec::new("exp", 10));
        let product = (exp.eval_log_big_f(u).unwrap() + exp.eval_log_f(u).unwrap()).exp() * exp.dlog_f(u).unwrap();
        prop_assert!((product - 1.0).abs() <= 1e-12);
        let power = family(FamilySpec::new("power", 10).param("p", p));
        let product = (power.eval_log_big_f(u).unwrap() + power.eval_log_f(u).unwrap()).exp() * power.dlog_f(u).unwrap();
        prop_assert!((product - p / (p - 1.0)).abs() <= 1e-12 * p, "p={p}: {product}");
    }

    #[test]
    fn regular_profiles_are_monotone_with_monotone_flux(n in 3u32..13, log_alpha in -2.0f64..3.5) {
        let alpha = log_alpha.exp();
        let f = family(FamilySpec::new("exp", n));
        let profile = shoot(&f, alpha, &ShootingOptions::default()).unwrap();
        let zero = profile.first_zero.unwrap();
        prop_assert_eq!(*profile.r_grid.last().unwrap(), zero);
        prop_assert!(profile.v.last().unwrap().abs() <= 1e-10 * alpha);
        let dim = n as f64;
        let mut prev_v = f64::INFINITY;
        let mut prev_flux = f64::INFINITY;
        for (i, &r) in profile.r_grid.iter().enumerate() {
            if r > zero {
                break;
            }
            let v = profile.v[i];
            let flux = r.powf(dim - 1.0) * profile.v_prime[i];
            prop_assert!(v < prev_v);
            prop_assert!(flux <= prev_flux + 1e-12 * flux.abs().max(1e-300));
            prev_v = v;
            prev_flux = flux;
        }
        let (r0, forcing) = (profile.r_grid[0], alpha.exp());
        let v0 = alpha - forcing * r0 * r0 / (2.0 * dim);
        prop_assert!((profile.v[0] - v0).abs() <= 1e-12 * alpha + 1e-6 * forcing * r0 * r0);
        prop_assert!((profile.v_prime[0] + forcing * r0 / dim).abs() <= 1e-6 * forcing * r0);
    }

    #[test]
    fn sturm_count_grows_as_the_interval_grows(mu_excess in 0.0f64..3.0, a in 2.0f64..8.0, b in 2.0f64..8.0) {
        let potential = PotentialProfile::euler(10, 16.0 + mu_excess);
        let (outer, inner) = (10f64.powf(-a.min(b)), 10f64.powf(-a.max(b)));
        let near = sturm_negative_count(&potential, outer).unwrap();
        let far = sturm_negative_count(&potential, inner).unwrap();
        prop_assert!(far >= near, "μ-16={mu_excess}: {near} at {outer:e}, {far} at {inner:e}");
    }

    #[test]
    fn turning_brackets_match_discrete_slope_changes(amplitude in 0.01f64..1.0, omega in 0.5f64..4.0, phase in 0.0f64..std::f64::consts::TAU) {
        let samples: Vec<CurvePoint> = logspace(1.0, 1e3, 300)
            .into_iter()
            .map(|alpha| CurvePoint { alpha, lambda: 10.0 + amplitude * (omega * alpha.ln() + phase).sin() })
            .collect();
        let slope: Vec<f64> = samples.windows(2).map(|w| w[1].lambda - w[0].lambda).collect();
        let changes = slope.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        let curve = BifurcationCurve::from_samples(samples.clone(), 1e-12, None);
        prop_assert!(curve.samples.windows(2).all(|w| w[1].alpha > w[0].alpha));
        prop_assert_eq!(curve.turning_points.len(), changes);
        for bracket in &curve.turning_points {
            let inside: Vec<f64> = samples
                .iter()
                .filter(|s| s.alpha >= bracket.alpha_low && s.alpha <= bracket.alpha_high)
                .map(|s| s.lambda)
                .collect();
            let flips = inside.windows(3).filter(|w| (w[1] - w[0]).signum() != (w[2] - w[1]).signum()).count();
            prop_assert_eq!(flips, 1);
        }
    }
}
