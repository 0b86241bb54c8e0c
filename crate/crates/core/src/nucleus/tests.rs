use super::*;
use crate::map_kernel::catalog;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

fn site(n: usize, omega: &[f64]) -> ResonanceSite {
    ResonanceSite { n, omega_star: omega.to_vec(), i_star: omega.to_vec(), rho_n: 0.1 }
}

fn standard_nucleus(eps: f64) -> NucleusModel {
    NucleusModel::new(&catalog::standard(eps).unwrap(), &site(1, &[0.0])).unwrap()
}

#[test]
fn radii_standard() {
    let r = nucleus_radii(&catalog::standard(1e-4).unwrap());
    assert!((r.r0_hat - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-15);
    assert!((r.r0_hat - 0.2251).abs() < 1e-4);
    assert!((r.r1 / r.r0_hat - 5f64.sqrt()).abs() < 1e-14);
    assert!(r.r0_hat < r.r1 && r.r1 < r.r_star);
}

#[test]
fn radii_ratio_uses_nu2() {
    // froeschle2: nu2 = 2, nu = 1
    let r = nucleus_radii(&catalog::froeschle2(1e-4, 0.3).unwrap());
    assert!((r.r1 / r.r0_hat - 10f64.sqrt()).abs() < 1e-14);
}

#[test]
fn average_period_one_is_the_potential() {
    let m = catalog::standard(0.01).unwrap();
    for phi in [0.0, 0.13, 0.5, 0.77, 3.25] {
        let v = resonant_average(&m, &site(1, &[0.0]), &[phi]).unwrap();
        assert!((v + (2.0 * PI * phi).cos() / FOUR_PI_SQ).abs() < 1e-16);
    }
}

#[test]
fn average_froeschle_half_resonance() {
    // the cos(2 pi phi1) and mixed terms flip sign under phi1 -> phi1 + 1/2
    let m = catalog::froeschle2(0.01, 0.3).unwrap();
    let s = site(2, &[0.5, 0.0]);
    for phi in [[0.1, 0.2], [0.37, 0.9], [0.5, 0.5]] {
        let v = resonant_average(&m, &s, &phi).unwrap();
        let oracle = -(2.0 * PI * phi[1]).cos() / FOUR_PI_SQ;
        assert!((v - oracle).abs() < 1e-16, "{v} vs {oracle}");
    }
}

#[test]
fn average_froeschle_third_resonance() {
    // only the mixed term survives at omega* = (1/3, 2/3)
    let eta = 0.3;
    let m = catalog::froeschle2(0.01, eta).unwrap();
    let s = site(3, &[1.0 / 3.0, 2.0 / 3.0]);
    for phi in [[0.1, 0.2], [0.37, 0.9]] {
        let v = resonant_average(&m, &s, &phi).unwrap();
        let oracle = -eta * (2.0 * PI * (phi[0] + phi[1])).cos() / FOUR_PI_SQ;
        assert!((v - oracle).abs() < 1e-16);
    }
}

#[test]
fn average_rejects_explicit_form() {
    let m = catalog::nonexact(0.1).unwrap();
    assert!(matches!(resonant_average(&m, &site(1, &[0.0]), &[0.2]), Err(Error::FormMismatch)));
    assert!(matches!(NucleusModel::new(&m, &site(1, &[0.0])), Err(Error::FormMismatch)));
}

#[test]
fn model_rejects_bad_site() {
    let m = catalog::standard(0.01).unwrap();
    let bad = ResonanceSite { n: 2, omega_star: vec![0.5], i_star: vec![0.4], rho_n: 0.1 };
    assert!(NucleusModel::new(&m, &bad).is_err());
}

#[test]
fn translation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = catalog::froeschle2(0.01, 0.3).unwrap();
    for s in [site(2, &[0.5, 0.0]), site(3, &[1.0 / 3.0, 2.0 / 3.0]), site(4, &[0.25, -0.5])] {
        let nm = NucleusModel::new(&m, &s).unwrap();
        for _ in 0..1000 {
            let phi = [rng.random::<f64>(), rng.random::<f64>()];
            let shifted = [phi[0] + s.omega_star[0], phi[1] + s.omega_star[1]];
            let a = nm.potential(&phi).unwrap();
            let b = nm.potential(&shifted).unwrap();
            assert!((a - b).abs() <= 1e-10);
            assert!(a.abs() <= m.domain().norm_s * (1.0 + 1e-14));
        }
    }
}

#[test]
fn pendulum_energy() {
    let nm = standard_nucleus(1e-4);
    for x in [[0.0, 0.0], [0.3, 0.25], [-0.1, 0.6]] {
        let e = nucleus_energy(&nm, &x).unwrap();
        let oracle = 0.5 * x[0] * x[0] - (2.0 * PI * x[1]).cos() / FOUR_PI_SQ;
        assert!((e - oracle).abs() < 1e-16);
    }
    // minimum at J = 0, phi = 0
    assert!((nucleus_energy(&nm, &[0.0, 0.0]).unwrap() + 1.0 / FOUR_PI_SQ).abs() < 1e-16);
    let h1 = nm.leading_hamiltonian(&[0.3, 0.25]).unwrap();
    assert!((h1 - 1e-2 * 0.045).abs() < 1e-16);
}

#[test]
fn low_energy_set_inside_r1() {
    for m in [catalog::standard(1e-4).unwrap(), catalog::froeschle2(1e-4, 0.3).unwrap()] {
        let d = m.dim();
        let s = site(1, &vec![0.0; d]);
        let nm = NucleusModel::new(&m, &s).unwrap();
        let r = nm.radii();
        let e0 = 2.0 * m.domain().norm_s;
        let n: usize = if d == 1 { 201 } else { 31 };
        let span = 2.0 * r.r1;
        let mut checked = 0;
        for idx in 0..n.pow(2 * d as u32) {
            let mut rest = idx;
            let mut x = vec![0.0; 2 * d];
            for (l, xl) in x.iter_mut().enumerate() {
                let t = (rest % n) as f64 / (n - 1) as f64;
                rest /= n;
                *xl = if l < d { -span + 2.0 * span * t } else { t };
            }
            if nucleus_energy(&nm, &x).unwrap() <= e0 {
                let jn = x[..d].iter().map(|a| a * a).sum::<f64>().sqrt();
                assert!(jn <= r.r1);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn small_actions_have_low_energy() {
    let m = catalog::froeschle2(1e-4, 0.3).unwrap();
    let nm = NucleusModel::new(&m, &site(1, &[0.0, 0.0])).unwrap();
    let r = nm.radii().r0_hat;
    for t in 0..64 {
        let a = t as f64 / 64.0 * 2.0 * PI;
        let x = [r * a.cos(), r * a.sin(), 0.31 * t as f64, 0.17 * t as f64];
        assert!(nucleus_energy(&nm, &x).unwrap() <= 2.0 * m.domain().norm_s);
    }
}

#[test]
fn trapped_without_perturbation() {
    let nm = standard_nucleus(0.0);
    let run = trapped_orbit(&nm, &[0.1, 0.3], 1000, 0).unwrap();
    assert_eq!(run.record.exit_index, None);
    assert_eq!(run.record.steps, 1000);
    assert_eq!(run.record.max_step_drift, 0.0);
    assert_eq!(run.record.max_excursion, 0.0);
    assert!((run.initial_energy - (0.005 - (0.6 * PI).cos() / FOUR_PI_SQ)).abs() < 1e-16);
}

#[test]
fn trapped_standard() {
    let nm = standard_nucleus(1e-4);
    let run = trapped_orbit(&nm, &[0.1, 0.0], 100_000, 10_000).unwrap();
    assert_eq!(run.record.exit_index, None);
    assert!(run.max_radius <= nm.radii().r1);
    assert_eq!(run.samples.len(), 11);
    // E changes by O(eps) per block and stays bounded
    assert!(run.record.max_step_drift < 1e-4);
    assert!(run.record.max_drift < 2.0 * nm.model().domain().norm_s);
}

#[test]
fn trapped_froeschle() {
    let m = catalog::froeschle2(1e-4, 0.3).unwrap();
    let nm = NucleusModel::new(&m, &site(1, &[0.0, 0.0])).unwrap();
    let run = trapped_orbit(&nm, &[0.1, -0.1, 0.3, 0.6], 10_000, 0).unwrap();
    assert_eq!(run.record.exit_index, None);
}

#[test]
fn exit_is_reported() {
    // start far outside r1 on a fast rotation
    let nm = standard_nucleus(1e-4);
    let run = trapped_orbit(&nm, &[0.9, 0.0], 10, 1).unwrap();
    assert_eq!(run.record.exit_index, Some(1));
    assert!(run.samples.last().unwrap().exited);
}

#[test]
fn ensemble_keeps_order() {
    let nm = standard_nucleus(1e-4);
    let starts = vec![vec![0.1, 0.0], vec![f64::NAN, 0.0], vec![0.2, 0.5]];
    let runs = trapped_ensemble(&nm, &starts, 100, 0);
    assert_eq!(runs.len(), 3);
    assert_eq!(runs[0].as_ref().unwrap().record.initial, vec![0.1, 0.0]);
    assert!(runs[1].is_err() || runs[1].as_ref().unwrap().record.exit_index.is_some());
    assert_eq!(runs[2].as_ref().unwrap().record.initial, vec![0.2, 0.5]);
}

#[test]
fn fourier_standard() {
    let nm = standard_nucleus(1e-4);
    for j in [1, -1] {
        let c = resonant_fourier_check(&nm, &[j], 64).unwrap();
        assert!(c.resonant);
        assert!((c.re + 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
        assert!(c.im.abs() < 1e-15);
    }
    assert!(resonant_fourier_check(&nm, &[2], 64).unwrap().magnitude < 1e-16);
    assert!(resonant_fourier_check(&nm, &[0], 64).is_err());
}

#[test]
fn fourier_nonresonant_modes_vanish() {
    let m = catalog::froeschle2(1e-4, 0.3).unwrap();
    let norm_s = m.domain().norm_s;
    let nm = NucleusModel::new(&m, &site(2, &[0.5, 0.0])).unwrap();
    for j in [[1, 0], [1, 1], [-1, 1], [3, 2]] {
        let c = resonant_fourier_check(&nm, &j, 32).unwrap();
        assert!(!c.resonant);
        assert!(c.magnitude <= 1e-10 * norm_s);
    }
    let c = resonant_fourier_check(&nm, &[0, 1], 32).unwrap();
    assert!(c.resonant);
    assert!((c.re + 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
    // j = (2, 0) is resonant but V* has no such mode
    let c = resonant_fourier_check(&nm, &[2, 0], 32).unwrap();
    assert!(c.resonant && c.magnitude < 1e-16);
}

#[test]
fn fourier_third_resonance_mixed_mode() {
    let eta = 0.3;
    let m = catalog::froeschle2(1e-4, eta).unwrap();
    let nm = NucleusModel::new(&m, &site(3, &[1.0 / 3.0, 2.0 / 3.0])).unwrap();
    let c = resonant_fourier_check(&nm, &[1, 1], 32).unwrap();
    assert!(c.resonant);
    assert!((c.re + eta / (8.0 * PI * PI)).abs() < 1e-15);
    let c = resonant_fourier_check(&nm, &[1, 0], 32).unwrap();
    assert!(!c.resonant && c.magnitude <= 1e-10 * m.domain().norm_s);
}
