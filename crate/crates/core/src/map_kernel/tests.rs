use super::*;
use crate::map_kernel::catalog;

fn pt(i: &[f64], p: &[f64]) -> PhasePoint {
    PhasePoint::new(i.to_vec(), p.to_vec())
}

#[test]
fn integrable_step() {
    let m = catalog::standard(0.0).unwrap();
    let y = m.step(&pt(&[0.37], &[4.2])).unwrap();
    assert_eq!(y.action, vec![0.37]);
    assert_eq!(y.angle, vec![4.2 + 0.37]);
}

#[test]
fn standard_step_at_zero_angle_is_closed_form() {
    let m = catalog::standard(0.1).unwrap();
    let y = m.step(&pt(&[0.3], &[0.0])).unwrap();
    assert!((y.action[0] - 0.3).abs() < 1e-15);
    assert!((y.angle[0] - 0.3).abs() < 1e-15);
}

#[test]
fn standard_step_quarter_turn_matches_fixed_point_oracle() {
    // s_phi does not depend on Ibar, so the fixed point is reached after one substitution.
    let eps = 0.1;
    let ibar = 0.3 - eps * (2.0 * std::f64::consts::PI * 0.25).sin() / (2.0 * std::f64::consts::PI);
    let m = catalog::standard(eps).unwrap();
    let y = m.step(&pt(&[0.3], &[0.25])).unwrap();
    assert!((y.action[0] - ibar).abs() < 1e-14);
    assert!((y.angle[0] - (0.25 + ibar)).abs() < 1e-14);
    assert!((y.action[0] - 0.284_084_505_690_810_1).abs() < 1e-14, "{}", y.action[0]);
}

#[test]
fn action_dependent_generating_term_uses_implicit_solve() {
    // s = c I^2 sin(2 pi phi): Ibar = I - eps c 2 pi Ibar^2 cos(2 pi phi), solved by bisection.
    let c = 0.3;
    let s = FnGenerating {
        value: move |a: &[f64], p: &[f64]| c * a[0] * a[0] * (2.0 * std::f64::consts::PI * p[0]).sin(),
        grad_angle: move |a: &[f64], p: &[f64], o: &mut [f64]| {
            o[0] = c * a[0] * a[0] * 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * p[0]).cos()
        },
        grad_action: move |a: &[f64], p: &[f64], o: &mut [f64]| {
            o[0] = 2.0 * c * a[0] * (2.0 * std::f64::consts::PI * p[0]).sin()
        },
    };
    let eps = 0.05;
    let m = MapModel::new(
        "user",
        eps,
        Arc::new(catalog::Quadratic { d: 1 }),
        Perturbation::Generating(Arc::new(s)),
        catalog::standard(0.0).unwrap().domain().clone(),
    )
    .unwrap();
    let (i0, p0) = (0.6, 0.1);
    let k = eps * c * 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * p0).cos();
    let f = |x: f64| x - i0 + k * x * x;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 { hi = mid } else { lo = mid }
    }
    let ibar = 0.5 * (lo + hi);
    let y = m.step(&pt(&[i0], &[p0])).unwrap();
    assert!((y.action[0] - ibar).abs() < 1e-13);
    let phibar = p0 + ibar + eps * 2.0 * c * ibar * (2.0 * std::f64::consts::PI * p0).sin();
    assert!((y.angle[0] - phibar).abs() < 1e-13);
}

#[test]
fn iterate_twist_lifts_angles() {
    let m = catalog::twist(0.0).unwrap();
    let orbit = m.iterate(&pt(&[0.5], &[0.0]), 3).unwrap();
    let angles: Vec<f64> = orbit.iter().map(|p| p.angle[0]).collect();
    assert_eq!(angles, vec![0.0, 0.5, 1.0, 1.5]);
    assert_eq!(m.iterate(&pt(&[0.5], &[0.0]), 0).unwrap().len(), 1);
}

#[test]
fn iterate_reports_failing_index() {
    let m = catalog::nonexact(0.5).unwrap();
    let err = m.iterate(&pt(&[0.0], &[0.0]), 10).unwrap_err();
    match err {
        Error::AtStep { index, source } => {
            assert_eq!(index, 4);
            assert!(matches!(*source, Error::DomainEscape { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn step_rejects_points_outside_extended_ball() {
    let m = catalog::standard(0.01).unwrap();
    assert!(matches!(m.step(&pt(&[2.5], &[0.0])), Err(Error::DomainEscape { .. })));
}

#[test]
fn standard_orbit_respects_action_bound() {
    let eps = 0.05;
    let m = catalog::standard(eps).unwrap();
    let orbit = m.iterate(&pt(&[0.3], &[0.11]), 10).unwrap();
    let bound = m.domain().c1() * 10.0 * eps;
    assert!((bound - 0.0795774715459477).abs() < 1e-12);
    for (k, p) in orbit.iter().enumerate() {
        assert!((p.action[0] - 0.3).abs() <= m.domain().c1() * k as f64 * eps + 1e-15);
    }
}

#[test]
fn inverse_undoes_step() {
    for m in [catalog::standard(0.08).unwrap(), catalog::froeschle2(0.05, 0.3).unwrap(), catalog::nonexact(0.01).unwrap()] {
        let d = m.dim();
        let x = pt(&vec![0.21; d], &vec![3.37; d]);
        let y = m.step(&x).unwrap();
        let back = m.step_inverse(&y).unwrap();
        for i in 0..d {
            assert!((back.action[i] - x.action[i]).abs() < 1e-13, "{}", m.name());
            assert!((back.angle[i] - x.angle[i]).abs() < 1e-13, "{}", m.name());
        }
    }
}

#[test]
fn shifted_lift_checks_resonance() {
    let m = catalog::standard(1e-4).unwrap();
    assert!(matches!(m.shifted_lift(&pt(&[0.5], &[0.0]), 2, &[0.3]), Err(Error::NotResonant { .. })));
}

#[test]
fn shifted_lift_fixed_point_at_resonant_torus() {
    let m = catalog::standard(0.0).unwrap();
    let x = pt(&[0.5], &[0.123]);
    let y = m.shifted_lift(&x, 2, &[0.5]).unwrap();
    assert_eq!(y, x);
}

#[test]
fn shifted_lift_n1_zero_frequency_is_plain_step() {
    let m = catalog::standard(0.07).unwrap();
    let x = pt(&[0.2], &[0.4]);
    assert_eq!(m.shifted_lift(&x, 1, &[0.0]).unwrap(), m.step(&x).unwrap());
}

#[test]
fn shifted_lift_matches_plain_iteration() {
    let m = catalog::froeschle2(0.01, 0.3).unwrap();
    let x = pt(&[0.5 + 1e-3, 0.0], &[0.3, 0.7]);
    let n = 2;
    let w = [0.5, 0.0];
    let lift = m.shifted_lift(&x, n, &w).unwrap();
    let plain = m.iterate(&x, n).unwrap().pop().unwrap();
    for i in 0..2 {
        assert!((lift.action[i] - plain.action[i]).abs() < 1e-14);
        assert!((lift.angle[i] - (plain.angle[i] - n as f64 * w[i])).abs() < 1e-13);
    }
}

#[test]
fn lift_consistency_with_per_step_reduction() {
    let m = catalog::standard(0.1).unwrap();
    let mut x = pt(&[0.3], &[0.11]);
    let mut red = x.clone();
    for _ in 0..1000 {
        x = m.step(&x).unwrap();
        red = m.step(&red).unwrap().reduced();
    }
    let diff = x.angle[0] - red.angle[0];
    assert!((diff - diff.round()).abs() <= 1e-10, "{diff}");
    assert!((x.action[0] - red.action[0]).abs() <= 1e-10);
}

#[test]
fn catalog_periodicity() {
    let m = catalog::froeschle2(0.0, 0.4).unwrap();
    let s = m.generating_term().unwrap();
    let mut g0 = [0.0; 2];
    let mut g1 = [0.0; 2];
    for &(x, y) in &[(0.13, 0.71), (0.5, 0.25), (0.99, 0.01)] {
        let v0 = s.value(&[0.0, 0.0], &[x, y]);
        let v1 = m.generating_value(&[0.0, 0.0], &[x + 1.0, y - 3.0]).unwrap();
        assert!((v0 - v1).abs() < 1e-15);
        s.grad_angle(&[0.0, 0.0], &[x, y], &mut g0);
        s.grad_angle(&[0.0, 0.0], &[reduce_angle(x + 1.0), reduce_angle(y + 1.0)], &mut g1);
        assert!((g0[0] - g1[0]).abs() < 1e-14 && (g0[1] - g1[1]).abs() < 1e-14);
    }
}

#[test]
fn catalog_hessian_bounded_below_by_nu() {
    for m in [catalog::standard(0.0).unwrap(), catalog::froeschle2(0.0, 0.3).unwrap()] {
        let h = m.hessian(&vec![0.3; m.dim()]);
        let eig = nalgebra::SymmetricEigen::new(h).eigenvalues;
        assert!(eig.min() >= m.domain().nu);
    }
}

#[test]
fn by_name_rejects_unknown() {
    let p = std::collections::BTreeMap::new();
    assert!(catalog::by_name("henon", &p, 0.1).is_err());
    let mut q = std::collections::BTreeMap::new();
    q.insert("k".to_string(), 1.0);
    assert!(catalog::by_name("standard", &q, 0.1).is_err());
    q.clear();
    q.insert("eta".to_string(), 0.3);
    assert_eq!(catalog::by_name("froeschle2", &q, 0.1).unwrap().dim(), 2);
}

#[test]
fn domain_validation() {
    let mut d = catalog::standard(0.0).unwrap().domain().clone();
    d.nu = 2.0;
    assert!(d.validate().is_err());
    d.nu = 1.0;
    d.radius = 0.0;
    assert!(d.validate().is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn jacobian(m: &MapModel, x: &[f64], h: f64) -> nalgebra::DMatrix<f64> {
        let n = x.len();
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fp = m.apply(&xp).unwrap();
            let fm = m.apply(&xm).unwrap();
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    fn symplectic_form(d: usize) -> nalgebra::DMatrix<f64> {
        let mut j = nalgebra::DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            j[(i, d + i)] = -1.0;
            j[(d + i, i)] = 1.0;
        }
        j
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn standard_is_symplectic(i in -0.9..0.9f64, p in -2.0..2.0f64, eps in 0.0..0.1f64) {
            let m = catalog::standard(eps).unwrap();
            let jac = jacobian(&m, &[i, p], 1e-6);
            let om = symplectic_form(1);
            let defect = (jac.transpose() * &om * &jac - &om).abs().max();
            prop_assert!(defect <= 1e-6, "{}", defect);
        }

        #[test]
        fn froeschle_is_symplectic(i1 in -0.9..0.9f64, i2 in -0.9..0.9f64, p1 in 0.0..1.0f64, p2 in 0.0..1.0f64, eps in 0.0..0.1f64, eta in -0.5..0.5f64) {
            let m = catalog::froeschle2(eps, eta).unwrap();
            let jac = jacobian(&m, &[i1, i2, p1, p2], 1e-6);
            let om = symplectic_form(2);
            let defect = (jac.transpose() * &om * &jac - &om).abs().max();
            prop_assert!(defect <= 1e-6, "{}", defect);
        }

        #[test]
        fn apriori_bounds_hold(i in -0.5..0.5f64, p in 0.0..1.0f64, eps in 0.0..0.05f64, n in 1usize..60) {
            let m = catalog::standard(eps).unwrap();
            let orbit = m.iterate(&pt(&[i], &[p]), n).unwrap();
            let last = orbit.last().unwrap();
            let dom = m.domain();
            prop_assert!((last.action[0] - i).abs() <= dom.c1() * n as f64 * eps + 1e-14);
            let drift = last.angle[0] - p - n as f64 * i;
            prop_assert!(drift.abs() <= dom.c2() * (n * n) as f64 * eps + 1e-12);
        }

        #[test]
        fn picard_residuals_monotone(y0 in -3.0..3.0f64, c in 0.01..0.2f64) {
            let out = implicit_solve_traced(|y, o| o[0] = c * (2.0 * y[0]).sin(), &[y0], 1.0, 1e-15, 200).unwrap();
            for w in out.residuals.windows(2).skip(1) {
                prop_assert!(w[1] <= w[0] || w[1] <= 1e-15);
            }
        }
    }
}
