//! Line integrals: Hamiltonians of near-Hamiltonian fields, generating
//! functions of maps, and loop actions.

use rayon::prelude::*;

use super::FieldEvaluator;
use crate::error::{invalid, Error, Result};
use crate::map_kernel::{implicit_solve, PhaseMap};
use crate::numerics::{integrate, ridders_derivative};

/// Order in which a staircase path visits the coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathOrder {
    ActionsFirst,
    AnglesFirst,
}

fn path_exit(e: Error) -> Error {
    match e {
        Error::QuadratureFailure { .. } | Error::PathExit { .. } => e,
        other => Error::PathExit { reason: other.to_string() },
    }
}

/// Integral of the `coord` component of `dH = X_phi dI - X_I dphi` from
/// `start` with `start[coord]` moved to `to`.
fn segment(field: &dyn FieldEvaluator, start: &[f64], coord: usize, to: f64, tol: f64) -> Result<f64> {
    let from = start[coord];
    if from == to {
        return Ok(0.0);
    }
    let d = start.len() / 2;
    let mut point = start.to_vec();
    integrate(
        |t| {
            point[coord] = t;
            let x = field.eval(&point).map_err(path_exit)?;
            Ok(if coord < d { x[d + coord] } else { -x[coord - d] })
        },
        from,
        to,
        tol,
    )
}

fn staircase(order: PathOrder, n: usize) -> Vec<usize> {
    let d = n / 2;
    match order {
        PathOrder::ActionsFirst => (0..n).collect(),
        PathOrder::AnglesFirst => (d..n).chain(0..d).collect(),
    }
}

/// Uncorrected `H(x) - H(base)` along a staircase path.
pub fn hamiltonian_value(
    field: &dyn FieldEvaluator,
    base: &[f64],
    x: &[f64],
    order: PathOrder,
    quad_tol: f64,
) -> Result<f64> {
    let n = base.len();
    if x.len() != n || n != field.dim() || n % 2 != 0 {
        return Err(invalid("point dimensions do not match field"));
    }
    let seg_tol = quad_tol / n as f64;
    let mut point = base.to_vec();
    let mut total = 0.0;
    for coord in staircase(order, n) {
        total += segment(field, &point, coord, x[coord], seg_tol)?;
        point[coord] = x[coord];
    }
    Ok(total)
}

/// Hamiltonian reconstructed from a field by path integration, made
/// periodic in the angles by subtracting `c . (phi - phi_base)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianField {
    pub base: Vec<f64>,
    /// `c_l` = uncorrected increment over one turn of angle `l` from the base.
    pub correction: Vec<f64>,
    pub queries: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub quad_tol: f64,
}

impl HamiltonianField {
    /// Periodic-corrected `H(x)` with `H(base) = 0`.
    pub fn evaluate(&self, field: &dyn FieldEvaluator, x: &[f64], order: PathOrder) -> Result<f64> {
        let raw = hamiltonian_value(field, &self.base, x, order, self.quad_tol)?;
        Ok(raw - self.linear_part(x))
    }

    fn linear_part(&self, x: &[f64]) -> f64 {
        let d = self.base.len() / 2;
        (0..d).map(|l| self.correction[l] * (x[d + l] - self.base[d + l])).sum()
    }
}

/// Builds `H` with `H(base) = 0` and evaluates it at `queries`
/// (actions-first staircase paths).
pub fn reconstruct_hamiltonian(
    field: &dyn FieldEvaluator,
    base: &[f64],
    queries: &[Vec<f64>],
    quad_tol: f64,
) -> Result<HamiltonianField> {
    if !(quad_tol > 0.0) {
        return Err(invalid("quadrature tolerance must be positive"));
    }
    let n = base.len();
    if n != field.dim() || n % 2 != 0 {
        return Err(invalid("base dimension does not match field"));
    }
    let d = n / 2;
    let correction: Vec<f64> = (0..d)
        .map(|l| segment(field, base, d + l, base[d + l] + 1.0, quad_tol))
        .collect::<Result<_>>()?;
    let mut h = HamiltonianField { base: base.to_vec(), correction, queries: queries.to_vec(), values: Vec::new(), quad_tol };
    let values: Vec<Result<f64>> =
        queries.par_iter().map(|q| h.evaluate(field, q, PathOrder::ActionsFirst)).collect();
    h.values = values.into_iter().collect::<Result<_>>()?;
    Ok(h)
}

/// Scalar function `S(p, q)` with gradient `[dS/dp, dS/dq]`.
pub trait GeneratingFunction: Send + Sync {
    fn half_dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

pub struct FnGeneratingFunction<V, G> {
    d: usize,
    value: V,
    gradient: G,
}

impl<V, G> FnGeneratingFunction<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(d: usize, value: V, gradient: G) -> Self {
        Self { d, value, gradient }
    }
}

impl<V, G> GeneratingFunction for FnGeneratingFunction<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn half_dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }
}

/// `H_2 = S - (1/2) dS/dp . dS/dq` for the map generated by `p1 q + S(p1, q)`.
pub fn h2_closed_form(s: &dyn GeneratingFunction, x: &[f64]) -> f64 {
    let d = s.half_dim();
    let mut g = vec![0.0; 2 * d];
    s.gradient(x, &mut g);
    s.value(x) - 0.5 * (0..d).map(|l| g[l] * g[d + l]).sum::<f64>()
}

/// Radius of the action solve in [`cross_form`].
const CROSS_RADIUS: f64 = 0.5;

/// `(u, v) = (p - pbar, qbar - q)` at `(pbar, q)`, solving `P(p, q) = pbar` for `p`.
pub fn cross_form(map: &dyn PhaseMap, pbar: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = pbar.len();
    let mut x = vec![0.0; 2 * d];
    x[d..].copy_from_slice(q);
    let mut inner: Option<Error> = None;
    let p = implicit_solve(
        |y, out| {
            x[..d].copy_from_slice(y);
            match map.apply(&x) {
                Ok(img) => {
                    for l in 0..d {
                        out[l] = y[l] - img[l];
                    }
                }
                Err(e) => {
                    inner.get_or_insert(e);
                    out.fill(f64::NAN);
                }
            }
        },
        pbar,
        CROSS_RADIUS,
        crate::map_kernel::implicit::DEFAULT_TOL,
        crate::map_kernel::implicit::DEFAULT_MAX_ITER,
    );
    if let Some(e) = inner {
        return Err(e);
    }
    let p = p?;
    x[..d].copy_from_slice(&p);
    let img = map.apply(&x)?;
    let u = (0..d).map(|l| p[l] - pbar[l]).collect();
    let v = (0..d).map(|l| img[d + l] - q[l]).collect();
    Ok((u, v))
}

/// Generating function `s(pbar, q)` with `ds = u dq + v dpbar` and `s(base) = 0`.
///
/// Points are `[pbar, q]`; the path moves the actions first.
pub fn recover_generating(map: &dyn PhaseMap, base: &[f64], query: &[f64], quad_tol: f64) -> Result<f64> {
    let d = map.half_dim();
    if base.len() != 2 * d || query.len() != 2 * d {
        return Err(invalid("point dimensions do not match map"));
    }
    let seg_tol = quad_tol / (2 * d) as f64;
    let mut point = base.to_vec();
    let mut total = 0.0;
    for coord in 0..2 * d {
        let (from, to) = (point[coord], query[coord]);
        if from != to {
            let mut probe = point.clone();
            total += integrate(
                |t| {
                    probe[coord] = t;
                    let (u, v) = cross_form(map, &probe[..d], &probe[d..]).map_err(path_exit)?;
                    Ok(if coord < d { v[coord] } else { u[coord - d] })
                },
                from,
                to,
                seg_tol,
            )?;
        }
        point[coord] = to;
    }
    Ok(total)
}

/// Ridders starting step for loop tangents.
const LOOP_FD_STEP: f64 = 1e-2;

fn action_of(curve: &(dyn Fn(f64) -> Result<Vec<f64>> + Sync), d: usize, quad_tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for l in 0..d {
        total += integrate(
            |t| {
                let p = curve(t)?[l];
                let dq = ridders_derivative(|s| Ok(curve(s)?[d + l]), t, LOOP_FD_STEP)?;
                Ok(p * dq)
            },
            0.0,
            1.0,
            quad_tol / d as f64,
        )?;
    }
    Ok(total)
}

/// `(A(gamma), A(f o gamma))` with `A(gamma) = int_0^1 p . dq/dt dt`.
pub fn loop_action<L>(map: &dyn PhaseMap, gamma: L, quad_tol: f64) -> Result<(f64, f64)>
where
    L: Fn(f64) -> Vec<f64> + Sync,
{
    let d = map.half_dim();
    let plain = |t: f64| -> Result<Vec<f64>> {
        let x = gamma(t);
        if x.len() != 2 * d {
            return Err(invalid("loop point dimension does not match map"));
        }
        Ok(x)
    };
    let image = |t: f64| -> Result<Vec<f64>> { map.apply(&plain(t)?) };
    let a = action_of(&plain, d, quad_tol)?;
    let b = action_of(&image, d, quad_tol)?;
    Ok((a, b))
}
