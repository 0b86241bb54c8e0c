use super::*;
use crate::map_kernel::{catalog, FnIntegrable, PhasePoint};
use proptest::prelude::*;
use std::sync::Arc;

fn quartic_twist() -> MapModel {
    let h = FnIntegrable {
        d: 1,
        energy: |i: &[f64]| 0.5 * i[0] * i[0] + i[0].powi(4) / 12.0,
        frequency: |i: &[f64], o: &mut [f64]| o[0] = i[0] + i[0].powi(3) / 3.0,
        hessian: |i: &[f64]| DMatrix::from_element(1, 1, 1.0 + i[0] * i[0]),
    };
    let base = catalog::twist(0.0).unwrap();
    MapModel::new(
        "quartic",
        0.0,
        Arc::new(h),
        crate::map_kernel::Perturbation::Explicit(Arc::new(catalog::ConstantKick {
            action_kick: vec![0.0],
            angle_kick: vec![0.0],
        })),
        base.domain().clone(),
    )
    .unwrap()
}

#[test]
fn dirichlet_integer_frequency() {
    let a = dirichlet(&[2.0, -1.0], 7.0).unwrap();
    assert_eq!(a.n, 1);
    assert_eq!(a.omega_star, vec![2.0, -1.0]);
}

#[test]
fn dirichlet_golden_mean() {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let a = dirichlet(&[golden], 5.0).unwrap();
    assert_eq!(a.n, 3);
    assert!((a.omega_star[0] - 2.0 / 3.0).abs() < 1e-16);
    assert!((a.error - 0.048_632_677_916_772).abs() < 1e-12);
}

#[test]
fn dirichlet_exact_resonance() {
    let a = dirichlet(&[0.5, 1.0 / 3.0], 10.0).unwrap();
    assert_eq!(a.n, 6);
    assert!(a.error < 1e-16);
}

#[test]
fn dirichlet_rejects_bad_budget() {
    assert!(dirichlet(&[0.3], 1.0).is_err());
    assert!(dirichlet(&[0.3, 0.1], 6e5).is_err());
}

#[test]
fn resonant_action_identity_frequency() {
    let m = catalog::froeschle2(0.1, 0.3).unwrap();
    let i = resonant_action(&m, &[0.5, -0.25], &[0.1, 0.1]).unwrap();
    assert!((i[0] - 0.5).abs() <= 1e-16 && (i[1] + 0.25).abs() <= 1e-16, "{i:?}");
}

#[test]
fn resonant_action_quartic_twist_matches_bisection() {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.powi(3) / 3.0 - 0.5 > 0.0 { hi = mid } else { lo = mid }
    }
    let oracle = 0.5 * (lo + hi);
    let m = quartic_twist();
    let i = resonant_action(&m, &[0.5], &[0.0]).unwrap();
    assert!((i[0] - oracle).abs() < 1e-12);
    let w = m.frequency(&i);
    assert!((w[0] - 0.5).abs() <= RESONANT_ACTION_TOL);
}

#[test]
fn resonant_action_out_of_domain() {
    let m = catalog::standard(0.0).unwrap();
    assert!(resonant_action(&m, &[5.0], &[0.0]).is_err());
}

#[test]
fn covering_arithmetic() {
    let m = catalog::standard(1e-4).unwrap();
    let p = covering_params(&m, 1e-4, 2.0).unwrap();
    assert!((p.n_eps - 10.0).abs() < 1e-12);
    assert!((p.rho_eps - 0.2).abs() < 1e-14);
    assert!((p.gamma0 - (18.0 / (2.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-14);
    assert!((p.gamma0 - 1.6926).abs() < 1e-4);
    assert!((p.r0 - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
    assert!(!p.gamma_below_gamma0 && !p.only_period_one);
    assert!((p.rho_n(4) - 0.05).abs() < 1e-15);
    let coarse = covering_params(&m, 0.1, 2.0).unwrap();
    assert!(coarse.only_period_one);
    assert!(covering_params(&m, 1e-4, 1.0).unwrap().gamma_below_gamma0);
}

#[test]
fn covering_threshold_inverts_formula() {
    let n0 = covering_threshold(1.0, 2, 0.1);
    assert!((n0.powf(-0.5) - 0.1 / 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn block_at_zero_eps() {
    let m = catalog::standard(0.0).unwrap();
    let site = ResonanceSite { n: 2, omega_star: vec![0.5], i_star: vec![0.5], rho_n: 0.1 };
    let b = ScaledBlock::new(&m, &site, BlockScaling::Lochak).unwrap();
    assert_eq!(b.apply(&[0.0, 0.37]).unwrap(), vec![0.0, 0.37]);
    let y = b.apply(&[0.3, 0.37]).unwrap();
    assert_eq!(y[0], 0.3);
    assert!((y[1] - (0.37 + 2.0 * 0.1 * 0.3)).abs() < 1e-15);
    assert!(ScaledBlock::new(&m, &site, BlockScaling::Nucleus).is_err());
}

#[test]
fn block_matches_shifted_lift() {
    let m = catalog::froeschle2(1e-3, 0.3).unwrap();
    let site = ResonanceSite { n: 2, omega_star: vec![0.5, 0.0], i_star: vec![0.5, 0.0], rho_n: 0.05 };
    let b = ScaledBlock::new(&m, &site, BlockScaling::Lochak).unwrap();
    let x = [0.2, -0.4, 0.13, 0.77];
    let y = b.apply(&x).unwrap();
    let p = PhasePoint::new(b.to_action(&x[..2]), x[2..].to_vec());
    let lift = m.shifted_lift(&p, 2, &site.omega_star).unwrap();
    for i in 0..2 {
        assert!((site.i_star[i] + 0.05 * y[i] - lift.action[i]).abs() < 1e-15);
        assert!((y[2 + i] - lift.angle[i]).abs() < 1e-14);
    }
    let back = b.apply_inverse(&y).unwrap();
    for i in 0..4 {
        assert!((back[i] - x[i]).abs() < 1e-12, "{back:?}");
    }
}

#[test]
fn block_distance_within_estimate() {
    let eps = 1e-4;
    let m = catalog::standard(eps).unwrap();
    let p = covering_params(&m, eps, 2.0).unwrap();
    let site = ResonanceSite { n: 1, omega_star: vec![0.0], i_star: vec![0.0], rho_n: p.rho_n(1) };
    let b = ScaledBlock::new(&m, &site, BlockScaling::Lochak).unwrap();
    let region = crate::hamiltonian::PhaseBox { bounds: vec![(-2.0, 2.0), (0.0, 1.0)] };
    let eps_hat = crate::hamiltonian::distance_to_identity(&b, &region, 41).unwrap();
    let est = block_distance_estimate(&m, 1, site.rho_n);
    assert!(eps_hat <= est, "{eps_hat} > {est}");
}

#[test]
fn shifted_lift_near_half_resonance() {
    let eps = 1e-4;
    let m = catalog::standard(eps).unwrap();
    let p = covering_params(&m, eps, 2.0).unwrap();
    let rho = p.rho_n(2);
    let x = PhasePoint::new(vec![0.5 + 1e-3], vec![0.3]);
    let y = m.shifted_lift(&x, 2, &[0.5]).unwrap();
    let dist = ((y.action[0] - x.action[0]) / rho).abs().max((y.angle[0] - x.angle[0]).abs());
    assert!(dist <= block_distance_estimate(&m, 2, rho));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dirichlet_certificate(w in proptest::collection::vec(-3.0..3.0f64, 1..=3), big_n in 2.0..50.0f64) {
        let a = dirichlet(&w, big_n).unwrap();
        let err = w.iter().zip(&a.omega_star).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(err < 1.0 / (a.n as f64 * big_n.powf(1.0 / w.len() as f64)));
        prop_assert!((a.n as f64) < big_n);
        prop_assert!(is_resonant(&a.omega_star, a.n));
    }

    #[test]
    fn covering_property(i0 in -1.0..1.0f64) {
        let eps = 1e-4;
        let m = catalog::standard(eps).unwrap();
        let p = covering_params(&m, eps, 2.0).unwrap();
        let (site, _) = locate_site(&m, &[i0], &p).unwrap();
        prop_assert!((i0 - site.i_star[0]).abs() < covering_radius(1.0, 1, site.n, p.n_eps));
        prop_assert!(site.validate(&m).is_ok());
    }

    #[test]
    fn block_actions_constant_at_zero_eps(j in -1.0..1.0f64, phi in 0.0..1.0f64) {
        let m = catalog::standard(0.0).unwrap();
        let site = ResonanceSite { n: 3, omega_star: vec![1.0 / 3.0], i_star: vec![1.0 / 3.0], rho_n: 0.05 };
        let b = ScaledBlock::new(&m, &site, BlockScaling::Lochak).unwrap();
        prop_assert_eq!(b.apply(&[j, phi]).unwrap()[0], j);
    }
}
