//! Contraction-based solver for `y = y0 + g(y)`.
//!
//! Plain Picard iteration. The sup of `|g|` over the ball `B_R(y0)` is not
//! computable for a black-box `g`, so it is estimated from the centre and the
//! points `y0 +- R/2 e_i`, inflated by a factor of two, and checked against
//! `R/(d+1)`. The runtime residual check backstops the estimate.
//!
//! Iterates are tracked as displacements `z = y - y0`, so residuals stay
//! meaningful when `y0` is a large angle lift.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 100;

const PROBE_SAFETY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `|y_k - y0 - g(y_k)|` for each iterate, in order.
    pub residuals: Vec<f64>,
}

/// Solves `y = y0 + g(y)` in the ball of radius `radius` about `y0`.
///
/// `g` writes its value into the output slice.
pub fn implicit_solve<G>(g: G, y0: &[f64], radius: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>>
where
    G: FnMut(&[f64], &mut [f64]),
{
    picard(g, y0, radius, tol, max_iter, None).map(|o| o.solution)
}

/// Same as [`implicit_solve`] but keeps the residual history.
pub fn implicit_solve_traced<G>(
    g: G,
    y0: &[f64],
    radius: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let mut trace = Vec::new();
    picard(g, y0, radius, tol, max_iter, Some(&mut trace)).map(|mut o| {
        o.residuals = trace;
        o
    })
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn picard<G>(
    mut g: G,
    y0: &[f64],
    radius: f64,
    tol: f64,
    max_iter: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<PicardOutcome>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let d = y0.len();
    if !(radius > 0.0) || !(tol > 0.0) || max_iter == 0 {
        return Err(crate::error::invalid("implicit_solve needs radius > 0, tol > 0, max_iter > 0"));
    }
    let mut point = y0.to_vec();
    let mut val = vec![0.0; d];

    // Probe estimate of sup |g| on the ball.
    g(&point, &mut val);
    let mut sup = sup_norm(&val);
    let z_first = val.clone();
    for i in 0..d {
        for sign in [-1.0, 1.0] {
            point[i] = y0[i] + sign * 0.5 * radius;
            g(&point, &mut val);
            sup = sup.max(sup_norm(&val));
            point[i] = y0[i];
        }
    }
    let estimate = PROBE_SAFETY * sup;
    let limit = radius / (d as f64 + 1.0);
    if !(estimate < limit) {
        return Err(Error::ContractionViolated { estimate, limit });
    }

    let mut z = z_first;
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        for i in 0..d {
            point[i] = y0[i] + z[i];
        }
        g(&point, &mut val);
        residual = z.iter().zip(&val).fold(0.0_f64, |m, (a, b)| {
            let r = (a - b).abs();
            if r.is_nan() { f64::NAN } else { m.max(r) }
        });
        if let Some(t) = trace.as_deref_mut() {
            t.push(residual);
        }
        if residual.is_nan() {
            break;
        }
        if residual <= tol {
            return Ok(PicardOutcome { solution: point, iterations: iteration, residuals: Vec::new() });
        }
        std::mem::swap(&mut z, &mut val);
    }
    Err(Error::NoConvergence { residual, iterations: max_iter })
}
