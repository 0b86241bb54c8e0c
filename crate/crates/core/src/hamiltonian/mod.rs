//! Embedding a near-identity map into a flow.
//!
//! Phase vectors are `[I, phi]` (equivalently `[p, q]`). Hamiltonian fields
//! follow `I' = -dH/dphi`, `phi' = dH/dI`, i.e. `X = J grad H` with
//! `J^{-1} X = (X_phi, -X_I) = grad H`.

pub mod flow;
pub mod reconstruct;

use std::f64::consts::E as EULER;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::interpolation::{interpolating_vf, Scheme, M_MAX};
use crate::map_kernel::PhaseMap;
pub use flow::{flow_map, flow_map_with_stats, FlowStats, DEFAULT_FLOW_TOL};
pub use reconstruct::{
    h2_closed_form, hamiltonian_value, loop_action, recover_generating, reconstruct_hamiltonian, FnGeneratingFunction,
    GeneratingFunction, HamiltonianField, PathOrder,
};

/// A vector field on `R^{2d}`.
pub trait FieldEvaluator: Send + Sync {
    /// Length of phase vectors, `2d`.
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Map applications per evaluation.
    fn cost_hint(&self) -> usize {
        1
    }
}

impl<T: FieldEvaluator + ?Sized> FieldEvaluator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).eval(x)
    }
    fn cost_hint(&self) -> usize {
        (**self).cost_hint()
    }
}

/// Field given by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> FieldEvaluator for FnField<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.f)(x)
    }
}

/// `X_m` of a map, evaluated pointwise from orbit windows.
pub struct InterpolatingField<M> {
    map: M,
    m: usize,
    scheme: Scheme,
}

impl<M: PhaseMap> InterpolatingField<M> {
    pub fn new(map: M, m: usize, scheme: Scheme) -> Result<Self> {
        if m == 0 || m > M_MAX {
            return Err(crate::error::Error::OrderTooLarge { m, max: M_MAX });
        }
        if scheme == Scheme::Gauss && m % 2 == 1 {
            return Err(crate::error::Error::OddGaussOrder(m));
        }
        Ok(Self { map, m, scheme })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn map(&self) -> &M {
        &self.map
    }
}

impl<M: PhaseMap> FieldEvaluator for InterpolatingField<M> {
    fn dim(&self) -> usize {
        2 * self.map.half_dim()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        interpolating_vf(&self.map, x, self.m, self.scheme)
    }
    fn cost_hint(&self) -> usize {
        self.m
    }
}

/// Axis-aligned box in phase space: one `(lo, hi)` pair per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBox {
    pub bounds: Vec<(f64, f64)>,
}

impl PhaseBox {
    /// `[center - radius, center + radius]` in each action, `[0, 1]` in each angle.
    pub fn action_ball(center: &[f64], radius: f64) -> Self {
        let mut bounds: Vec<(f64, f64)> = center.iter().map(|c| (c - radius, c + radius)).collect();
        bounds.extend(center.iter().map(|_| (0.0, 1.0)));
        Self { bounds }
    }

    /// Tensor grid with `n` equispaced nodes per axis, endpoints included.
    /// Coordinates with `lo == hi` get a single node.
    pub fn grid(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        if n < 2 {
            return Err(invalid("grid needs at least 2 nodes per axis"));
        }
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    vec![lo]
                } else {
                    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
                }
            })
            .collect();
        let mut points = vec![Vec::with_capacity(axes.len())];
        for axis in &axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        Ok(points)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sup_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `max |f(x) - x|_inf` over the grid, in the map's own coordinates.
pub fn distance_to_identity(map: &dyn PhaseMap, region: &PhaseBox, grid_n: usize) -> Result<f64> {
    let grid = region.grid(grid_n)?;
    let values: Vec<Result<f64>> = grid.par_iter().map(|x| map.apply(x).map(|y| sup_diff(&y, x))).collect();
    let mut eps = 0.0_f64;
    for v in values {
        eps = eps.max(v?);
    }
    Ok(eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalOrder {
    pub m: usize,
    pub clamped: bool,
}

/// `m = floor(delta / (6 e eps_hat) - d)` clamped to `[1, M_MAX]`.
pub fn optimal_order(delta: f64, eps_hat: f64, d: usize) -> OptimalOrder {
    let raw = delta / (6.0 * EULER * eps_hat) - d as f64;
    // absorb the last-ulp error of the division when raw is an integer
    let guarded = raw + 1e-9 * raw.abs().max(1.0);
    if !(guarded >= 1.0) {
        return OptimalOrder { m: 1, clamped: true };
    }
    let m = guarded.floor();
    if m > M_MAX as f64 {
        OptimalOrder { m: M_MAX, clamped: true }
    } else {
        OptimalOrder { m: m as usize, clamped: false }
    }
}

/// `C_m = 6 (m + d) / delta`
pub fn order_constant(m: usize, d: usize, delta: f64) -> f64 {
    6.0 * (m + d) as f64 / delta
}

/// `3 C_m^m eps^(m+1)`
pub fn order_error_bound(m: usize, d: usize, delta: f64, eps_hat: f64) -> f64 {
    3.0 * order_constant(m, d, delta).powi(m as i32) * eps_hat.powi(m as i32 + 1)
}

/// `3 e^(d+1) eps exp(-delta / (6 e eps))`
pub fn exponential_bound(d: usize, delta: f64, eps_hat: f64) -> f64 {
    3.0 * EULER.powi(d as i32 + 1) * eps_hat * (-delta / (6.0 * EULER * eps_hat)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    pub m: usize,
    pub eps_hat: f64,
    /// `max |Phi^1(x) - f(x)|_inf` over the grid points that succeeded.
    pub max_error: f64,
    /// `max |X_m(x)|_inf` over the same points.
    pub max_field: f64,
    /// `3 C_m^m eps_hat^(m+1)`
    pub bound: f64,
    pub delta: f64,
    /// `m < delta / (6 eps_hat) - d`
    pub admissible: bool,
    pub within_bound: bool,
    pub points: usize,
    pub failed_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingSettings {
    pub scheme: Scheme,
    pub delta: f64,
    pub flow_tol: f64,
}

/// Compares the time-one flow of `X_m` with the map on a grid.
pub fn embedding_error(
    map: &dyn PhaseMap,
    m: usize,
    region: &PhaseBox,
    grid_n: usize,
    settings: EmbeddingSettings,
) -> Result<EmbeddingReport> {
    let eps_hat = distance_to_identity(map, region, grid_n)?;
    embedding_error_with_eps(map, m, region, grid_n, settings, eps_hat)
}

/// As [`embedding_error`] with a previously measured `eps_hat`.
pub fn embedding_error_with_eps(
    map: &dyn PhaseMap,
    m: usize,
    region: &PhaseBox,
    grid_n: usize,
    settings: EmbeddingSettings,
    eps_hat: f64,
) -> Result<EmbeddingReport> {
    let d = map.half_dim();
    let field = InterpolatingField::new(map, m, settings.scheme)?;
    let grid = region.grid(grid_n)?;
    let per_point: Vec<Result<(f64, f64)>> = grid
        .par_iter()
        .map(|x| {
            let fx = map.apply(x)?;
            let xm = field.eval(x)?;
            let phi = flow_map(&field, x, 1.0, settings.flow_tol)?;
            Ok((sup_diff(&phi, &fx), sup_abs(&xm)))
        })
        .collect();
    let mut max_error = 0.0_f64;
    let mut max_field = 0.0_f64;
    let mut failed = 0;
    let mut first_err = None;
    for r in per_point {
        match r {
            Ok((e, f)) => {
                max_error = max_error.max(e);
                max_field = max_field.max(f);
            }
            Err(e) => {
                failed += 1;
                first_err.get_or_insert(e);
            }
        }
    }
    if failed == grid.len() {
        return Err(first_err.expect("at least one grid point"));
    }
    let bound = order_error_bound(m, d, settings.delta, eps_hat);
    Ok(EmbeddingReport {
        m,
        eps_hat,
        max_error,
        max_field,
        bound,
        delta: settings.delta,
        admissible: (m as f64) < settings.delta / (6.0 * eps_hat) - d as f64,
        within_bound: max_error <= bound,
        points: grid.len(),
        failed_points: failed,
    })
}

/// Default finite-difference step for [`symmetry_defect`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `max |M - M^T|` for `M = D(J^{-1} X)(x)` by central differences.
///
/// Zero exactly when `X` is locally Hamiltonian.
pub fn symmetry_defect(field: &dyn FieldEvaluator, x: &[f64], h_fd: f64) -> Result<f64> {
    let n = x.len();
    if n % 2 != 0 || n != field.dim() {
        return Err(invalid("point dimension does not match field"));
    }
    if !(h_fd > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let d = n / 2;
    let columns: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = h_fd * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fp = field.eval(&xp)?;
            let fm = field.eval(&xm)?;
            // J^{-1} X = (X_phi, -X_I)
            let mut col = vec![0.0; n];
            for i in 0..d {
                col[i] = (fp[d + i] - fm[d + i]) / (2.0 * h);
                col[d + i] = -(fp[i] - fm[i]) / (2.0 * h);
            }
            Ok(col)
        })
        .collect();
    let mut cols = Vec::with_capacity(n);
    for c in columns {
        cols.push(c?);
    }
    let mut defect = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((cols[j][i] - cols[i][j]).abs());
        }
    }
    Ok(defect)
}
