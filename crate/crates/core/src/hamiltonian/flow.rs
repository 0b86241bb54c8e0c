//! Dormand-Prince 5(4) integration of autonomous fields.

use super::FieldEvaluator;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_FLOW_TOL: f64 = 1e-12;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order solution minus embedded fourth-order solution
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlowStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Time-`t` map of `y' = X(y)` from `x`.
pub fn flow_map(field: &dyn FieldEvaluator, x: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    flow_map_with_stats(field, x, t, tol).map(|(y, _)| y)
}

/// As [`flow_map`], also returning step statistics.
///
/// The state is integrated as a displacement `z = y - x`, so the error
/// control is absolute in `z` and unaffected by large angle lifts in `x`.
/// A failed field evaluation counts as a rejected step; repeated failures
/// shrink the step until it underflows and [`Error::StepFailure`] is raised.
pub fn flow_map_with_stats(field: &dyn FieldEvaluator, x: &[f64], t: f64, tol: f64) -> Result<(Vec<f64>, FlowStats)> {
    let n = x.len();
    if n != field.dim() {
        return Err(invalid("point dimension does not match field"));
    }
    if !(tol > 0.0) || !t.is_finite() {
        return Err(invalid("flow needs finite time and tol > 0"));
    }
    let mut stats = FlowStats::default();
    if t == 0.0 {
        return Ok((x.to_vec(), stats));
    }
    let dir = t.signum();
    let span = t.abs();
    let mut z = vec![0.0; n];
    let mut probe = vec![0.0; n];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];

    let eval = |z: &[f64], out: &mut Vec<f64>, stats: &mut FlowStats, probe: &mut Vec<f64>| -> Result<()> {
        for i in 0..n {
            probe[i] = x[i] + z[i];
        }
        stats.evaluations += 1;
        let v = field.eval(probe)?;
        if v.len() != n || v.iter().any(|a| !a.is_finite()) {
            return Err(invalid("field returned a non-finite value"));
        }
        for i in 0..n {
            out[i] = dir * v[i];
        }
        Ok(())
    };

    eval(&z, &mut k[0], &mut stats, &mut probe).map_err(|_| Error::StepFailure { t: 0.0 })?;
    let f0 = k[0].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut h = if f0 > 0.0 { (0.01 * tol.powf(0.2) / f0).max(1e-3).min(span) } else { span };
    h = h.min(span).max(span * 1e-12);
    let h_min = 16.0 * f64::EPSILON * span.max(1.0);
    let mut s = 0.0_f64;
    let mut err_old = 1e-4_f64;
    let mut znew = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut steps = 0usize;

    while s < span {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepFailure { t: dir * s });
        }
        let last = s + h >= span;
        if last {
            h = span - s;
        }
        let mut failed = false;
        for st in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(st) {
                    acc += A[st][j] * kj[i];
                }
                stage[i] = z[i] + h * acc;
            }
            if eval(&stage, &mut k[st], &mut stats, &mut probe).is_err() {
                failed = true;
                break;
            }
        }
        if failed {
            stats.rejected += 1;
            h *= 0.25;
            if h < h_min {
                return Err(Error::StepFailure { t: dir * s });
            }
            continue;
        }
        // stage 7 evaluated the fifth-order solution itself (FSAL)
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += A[6][j] * kj[i];
            }
            znew[i] = z[i] + h * acc;
        }
        let mut err = 0.0_f64;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = tol * (1.0 + z[i].abs().max(znew[i].abs()));
            err = err.max((h * e).abs() / sc);
        }
        if err <= 1.0 {
            stats.accepted += 1;
            s = if last { span } else { s + h };
            z.copy_from_slice(&znew);
            k.swap(0, 6);
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-ALPHA) * err_old.powf(BETA)).clamp(FAC_MIN, FAC_MAX)
            };
            err_old = err.max(1e-4);
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
            if h < h_min {
                return Err(Error::StepFailure { t: dir * s });
            }
        }
    }
    let out = x.iter().zip(&z).map(|(a, b)| a + b).collect();
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::FnField;

    #[test]
    fn zero_field_is_identity() {
        let f = FnField::new(2, |_x: &[f64]| Ok(vec![0.0, 0.0]));
        assert_eq!(flow_map(&f, &[0.3, 7.0], 1.0, 1e-12).unwrap(), vec![0.3, 7.0]);
    }

    #[test]
    fn constant_field_translates() {
        let f = FnField::new(2, |_x: &[f64]| Ok(vec![0.25, -1.5]));
        let y = flow_map(&f, &[0.3, 7.0], 1.0, 1e-12).unwrap();
        assert!((y[0] - 0.55).abs() < 1e-12 && (y[1] - 5.5).abs() < 1e-12);
    }

    #[test]
    fn rotation_quarter_turn() {
        // p' = -q, q' = p: (1, 0) -> (0, 1) after pi/2
        let f = FnField::new(2, |x: &[f64]| Ok(vec![-x[1], x[0]]));
        let tol = 1e-12;
        let y = flow_map(&f, &[1.0, 0.0], std::f64::consts::FRAC_PI_2, tol).unwrap();
        assert!(y[0].abs() < 10.0 * tol && (y[1] - 1.0).abs() < 10.0 * tol, "{y:?}");
        let back = flow_map(&f, &y, -std::f64::consts::FRAC_PI_2, tol).unwrap();
        assert!((back[0] - 1.0).abs() < 20.0 * tol && back[1].abs() < 20.0 * tol);
    }

    #[test]
    fn halving_tolerance_changes_little() {
        let f = FnField::new(2, |x: &[f64]| Ok(vec![-(2.0 * std::f64::consts::PI * x[1]).sin() * 0.3, x[0]]));
        let tol = 1e-10;
        let a = flow_map(&f, &[0.2, 0.1], 1.0, tol).unwrap();
        let b = flow_map(&f, &[0.2, 0.1], 1.0, tol / 2.0).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() <= 10.0 * tol));
    }

    #[test]
    fn failing_field_reports_step_failure() {
        let f = FnField::new(2, |x: &[f64]| {
            if x[0] > 0.5 { Err(invalid("outside")) } else { Ok(vec![1.0, 0.0]) }
        });
        assert!(matches!(flow_map(&f, &[0.0, 0.0], 1.0, 1e-12), Err(Error::StepFailure { .. })));
    }
}
