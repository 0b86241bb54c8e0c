use super::*;
use crate::hamiltonian::DEFAULT_FLOW_TOL;
use crate::map_kernel::catalog;
use proptest::prelude::*;

fn std_site(rho: f64) -> ResonanceSite {
    ResonanceSite { n: 1, omega_star: vec![0.0], i_star: vec![0.0], rho_n: rho }
}

#[test]
fn apriori_unperturbed_is_exact() {
    let m = catalog::twist(0.0).unwrap();
    let r = apriori_check(&m, &PhasePoint::new(vec![0.3], vec![0.11]), 50).unwrap();
    assert_eq!(r.action_change, 0.0);
    assert!(r.angle_change < 1e-13);
    assert_eq!(r.action_bound, 0.0);
}

#[test]
fn apriori_standard_example() {
    let m = catalog::standard(0.05).unwrap();
    let r = apriori_check(&m, &PhasePoint::new(vec![0.3], vec![0.11]), 10).unwrap();
    assert!((r.action_bound - 0.079_577_471_545_947_7).abs() < 1e-15);
    assert!(r.holds(), "{r:?}");
    assert!(r.action_change > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn apriori_bounds_hold(i0 in -0.3..0.3f64, p0 in 0.0..1.0f64, eps in 0.0..0.05f64, n in 1usize..100) {
        let m = catalog::standard(eps).unwrap();
        let r = apriori_check(&m, &PhasePoint::new(vec![i0], vec![p0]), n).unwrap();
        prop_assert!(r.action_change <= r.action_bound * (1.0 + APRIORI_ROUNDING) + 1e-15);
        prop_assert!(r.angle_change <= r.angle_bound * (1.0 + APRIORI_ROUNDING) + 1e-13);
    }

    #[test]
    fn apriori_bounds_hold_froeschle(i0 in -0.3..0.3f64, i1 in -0.3..0.3f64, eps in 0.0..0.05f64, n in 1usize..100) {
        let m = catalog::froeschle2(eps, 0.3).unwrap();
        let r = apriori_check(&m, &PhasePoint::new(vec![i0, i1], vec![0.2, 0.7]), n).unwrap();
        prop_assert!(r.action_change <= r.action_bound * (1.0 + APRIORI_ROUNDING) + 1e-15);
        prop_assert!(r.angle_change <= r.angle_bound * (1.0 + APRIORI_ROUNDING) + 1e-13);
    }
}

#[test]
fn integrable_part_quadratic() {
    let m = catalog::froeschle2(1e-4, 0.3).unwrap();
    let site = ResonanceSite { n: 2, omega_star: vec![0.5, 0.0], i_star: vec![0.5, 0.0], rho_n: 0.05 };
    let j = [0.3, -0.4];
    // h0 = |I|^2 / 2 gives h_n = n rho |J|^2 / 2
    let oracle = 2.0 * 0.05 * 0.25 / 2.0;
    assert!((integrable_part(&m, &site, 0.05, &j) - oracle).abs() < 1e-15);
}

#[test]
fn sn_split_without_perturbation() {
    let m = catalog::standard(0.0).unwrap();
    let r = sn_decomposition(&m, &std_site(0.2), 5, 1e-12).unwrap();
    assert!(r.sup_w < 1e-12, "{}", r.sup_w);
    assert_eq!(r.w_bound, 0.0);
    assert_eq!(r.sandwich_violation, 0.0);
}

#[test]
fn sn_split_standard_site() {
    let m = catalog::standard(1e-4).unwrap();
    let params = covering_params(&m, 1e-4, 2.0).unwrap();
    let site = std_site(params.rho_n(1));
    let r = sn_decomposition(&m, &site, 7, 1e-12).unwrap();
    assert!(r.sup_w > 0.0);
    assert!(r.sup_w <= r.w_bound, "{} > {}", r.sup_w, r.w_bound);
    assert_eq!(r.sandwich_violation, 0.0);
    // w_n is the periodic potential part: -eps s / rho to leading order
    let s = r.samples.iter().find(|s| s.point == vec![0.0, 0.5]).unwrap();
    let lead = 1e-4 / r.rho * (2.0 / (4.0 * std::f64::consts::PI.powi(2)));
    assert!((s.w_n - lead).abs() < 0.05 * lead, "{} vs {}", s.w_n, lead);
}

#[test]
fn drift_without_perturbation() {
    let m = catalog::standard(0.0).unwrap();
    let block = ScaledBlock::with_rho(&m, &std_site(0.1), 0.1).unwrap();
    let r = energy_drift(&block, 2, Scheme::Newton, &[0.3, 0.2], 5, 1e-12).unwrap();
    assert!(r.max_increment <= 1e-12, "{}", r.max_increment);
}

#[test]
fn drift_telescopes() {
    let m = catalog::standard(1e-4).unwrap();
    let block = ScaledBlock::new(&m, &std_site(0.1), BlockScaling::Nucleus).unwrap();
    let r = energy_drift(&block, 1, Scheme::Newton, &[0.2, 0.1], 20, 1e-11).unwrap();
    assert_eq!(r.values.len(), 21);
    assert!((r.telescoped - r.direct_total()).abs() <= 1e-12 * r.values[0].abs().max(r.max_increment));
    assert!(r.telescoped.abs() <= 20.0 * r.max_increment);
    let higher = energy_drift(&block, 3, Scheme::Newton, &[0.2, 0.1], 20, 1e-11).unwrap();
    assert!(higher.max_increment < r.max_increment);
}

#[test]
fn scan_unperturbed_has_no_excursion() {
    let m = catalog::twist(0.0).unwrap();
    let seeds = random_seeds(1, -0.5, 0.5, 5, 3);
    let recs = stability_scan(&m, &seeds, 1000, 1e-6);
    assert!(recs.iter().all(|r| r.max_excursion == 0.0 && r.action_spread == 0.0 && r.exit_index.is_none() && r.steps == 1000));
}

#[test]
fn scan_isolates_failing_seed() {
    let m = catalog::standard(1e-3).unwrap();
    let seeds = vec![
        PhasePoint::new(vec![0.1], vec![0.2]),
        PhasePoint::new(vec![5.0], vec![0.2]),
        PhasePoint::new(vec![-0.2], vec![0.7]),
    ];
    let recs = stability_scan(&m, &seeds, 200, 1.0);
    assert!(recs[0].failure.is_none() && recs[2].failure.is_none());
    assert!(recs[1].failure.is_some());
    assert_eq!(recs[2].initial, vec![-0.2, 0.7]);
}

#[test]
fn scan_reports_exit() {
    let m = catalog::standard(1e-2).unwrap();
    // inside the main resonance the action swings by about 2 sqrt(eps) / pi
    let recs = stability_scan(&m, &[PhasePoint::new(vec![0.0], vec![0.45])], 10_000, 1e-3);
    assert!(recs[0].escaped());
    assert!(recs[0].max_excursion > 1e-3);
    assert!(recs[0].action_spread >= recs[0].max_excursion);
}

#[test]
fn seeds_are_reproducible() {
    let a = random_seeds(2, -0.5, 0.5, 10, 42);
    let b = random_seeds(2, -0.5, 0.5, 10, 42);
    assert_eq!(a, b);
    assert_ne!(a, random_seeds(2, -0.5, 0.5, 10, 43));
    assert!(a.iter().all(|p| p.action.iter().all(|x| (-0.5..0.5).contains(x))));
}

#[test]
fn van_der_corput() {
    let v: Vec<f64> = (1..5).map(|k| radical_inverse(k, 2)).collect();
    assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
}

#[test]
fn pilot_seeds_sit_on_resonances() {
    let m = catalog::standard(1e-3).unwrap();
    let seeds = resonant_pilot_seeds(&m, -0.5, 0.5, 10, 2.0).unwrap();
    assert_eq!(seeds.len(), 10);
    for s in &seeds {
        let w = m.frequency(&s.action)[0];
        let near = (1..6).any(|n| {
            let t = n as f64 * w;
            (t - t.round()).abs() < 1e-9
        });
        assert!(near, "{w}");
    }
}

#[test]
fn calibration_doubles_pilot_spread() {
    let m = catalog::standard(1e-3).unwrap();
    let seeds = resonant_pilot_seeds(&m, -0.5, 0.5, 4, 2.0).unwrap();
    let cal = calibrate_radius(&m, &seeds, 2000).unwrap();
    let worst = cal.pilot.iter().fold(0.0_f64, |a, r| a.max(r.action_spread));
    assert!(cal.pilot.iter().all(|r| r.action_spread >= r.max_excursion));
    assert!((cal.radius - 2.0 * worst).abs() < 1e-15);
    assert!((cal.c1 * 1e-3f64.powf(0.25) - worst).abs() < 1e-15);
    assert_eq!(cal.exponent, 0.25);
    assert!(calibrate_radius(&catalog::standard(0.0).unwrap(), &seeds, 10).is_err());
}

#[test]
fn order_law_on_twist_is_degenerate() {
    let m = catalog::twist(0.0).unwrap();
    let region = PhaseBox::action_ball(&[0.0], 0.1);
    let settings = EmbeddingSettings { scheme: Scheme::Newton, delta: 0.5, flow_tol: DEFAULT_FLOW_TOL };
    let r = error_law_vs_order(&m, &[1, 2, 3], &region, 3, settings).unwrap();
    assert!(r.fit.is_none());
    assert!(r.points.iter().all(|p| p.floored));
}

#[test]
fn order_law_on_nucleus_block() {
    let m = catalog::standard(1e-4).unwrap();
    let block = ScaledBlock::new(&m, &std_site(0.1), BlockScaling::Nucleus).unwrap();
    let region = PhaseBox::action_ball(&[0.0], 1.0);
    let settings = EmbeddingSettings { scheme: Scheme::Newton, delta: 0.5, flow_tol: DEFAULT_FLOW_TOL };
    let r = error_law_vs_order(&block, &[1, 2, 3], &region, 5, settings).unwrap();
    let fit = r.fit.unwrap();
    assert!(fit.slope < 0.0);
    assert!(r.ratios.iter().all(|q| *q < 0.2), "{:?}", r.ratios);
}

#[test]
fn eps_law_picks_optimal_order() {
    let region = PhaseBox::action_ball(&[0.0], 1.0);
    let settings = EmbeddingSettings { scheme: Scheme::Newton, delta: 0.5, flow_tol: DEFAULT_FLOW_TOL };
    let family = |eps: f64| -> Result<Box<dyn PhaseMap>> {
        let m = catalog::standard(eps)?;
        Ok(Box::new(ScaledBlock::new(&m, &std_site(0.1), BlockScaling::Nucleus)?))
    };
    let r = error_law_vs_eps(family, &[4e-4, 1e-4], &region, 3, settings).unwrap();
    assert_eq!(r.points.len(), 2);
    let e = &r.points[1].report;
    assert_eq!(e.m, optimal_order(0.5, e.eps_hat, 1).m);
    assert!(r.points[1].report.max_error < r.points[0].report.max_error);
}

#[test]
fn drift_ensemble_takes_the_sup() {
    let m = catalog::standard(1e-4).unwrap();
    let block = ScaledBlock::new(&m, &std_site(0.1), BlockScaling::Nucleus).unwrap();
    let starts = vec![vec![0.2, 0.1], vec![0.8, 0.3]];
    let ens = energy_drift_ensemble(&block, 1, Scheme::Newton, &starts, 3, 1e-11).unwrap();
    assert_eq!(ens.reports.len(), 2);
    let single = energy_drift(&block, 1, Scheme::Newton, &starts[1], 3, 1e-11).unwrap();
    assert_eq!(ens.reports[1], single);
    assert_eq!(ens.max_increment, ens.reports[0].max_increment.max(ens.reports[1].max_increment));
}

#[test]
fn floor_grows_with_order() {
    let region = PhaseBox::action_ball(&[0.0], 1.0);
    assert_eq!(numerical_floor(1, Scheme::Newton, &region).unwrap(), FLOOR);
    let f11 = numerical_floor(11, Scheme::Newton, &region).unwrap();
    assert!(f11 > 1e-14 && f11 < 1e-13, "{f11}");
}
