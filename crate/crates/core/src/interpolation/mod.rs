//! Interpolating vector fields from finite differences of orbits.
//!
//! The Newton field of order `m` is the derivative at `t = 0` of the degree
//! `m` polynomial through `x_0, .., x_m`:
//!
//! ```text
//! X_m(x0) = sum_{k=1}^m (-1)^(k-1) / k * Delta_k(x0)
//! ```
//!
//! The Gauss field uses the centred window `x_-j, .., x_j` with `m = 2j`.
//! Differences are taken on displacements `x_k - x_0` so that large angle
//! lifts do not eat into the cancellation.

use crate::error::{invalid, Error, Result};
use crate::map_kernel::{backward_orbit, forward_orbit, PhaseMap};
use crate::numerics::{fit_loglog, KahanSum, LinearFit, FLOOR};

pub const M_MAX: usize = 30;

/// Residual allowed when checking that a window is an orbit.
pub const WINDOW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Newton,
    Gauss,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Scheme::Newton),
            "gauss" => Ok(Scheme::Gauss),
            other => Err(invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Consecutive iterates `x_0..x_m` (Newton) or `x_-j..x_j` (Gauss), oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitWindow {
    points: Vec<Vec<f64>>,
    scheme: Scheme,
    m: usize,
}

fn check_order(m: usize, scheme: Scheme) -> Result<()> {
    if m == 0 || m > M_MAX {
        return Err(Error::OrderTooLarge { m, max: M_MAX });
    }
    if scheme == Scheme::Gauss && m % 2 == 1 {
        return Err(Error::OddGaussOrder(m));
    }
    Ok(())
}

impl OrbitWindow {
    /// Computes the window of `map` around `x0`.
    pub fn from_map(map: &dyn PhaseMap, x0: &[f64], m: usize, scheme: Scheme) -> Result<Self> {
        check_order(m, scheme)?;
        if x0.len() != 2 * map.half_dim() {
            return Err(invalid("phase vector length must be 2d"));
        }
        let points = match scheme {
            Scheme::Newton => forward_orbit(map, x0, m)?,
            Scheme::Gauss => {
                let j = m / 2;
                let mut back = backward_orbit(map, x0, j)?;
                back.reverse();
                let fwd = forward_orbit(map, x0, j)?;
                back.extend(fwd.into_iter().skip(1));
                back
            }
        };
        Ok(Self { points, scheme, m })
    }

    /// Wraps given points after checking `f(x_k) = x_{k+1}` to [`WINDOW_TOL`].
    pub fn from_points(map: &dyn PhaseMap, points: Vec<Vec<f64>>, scheme: Scheme) -> Result<Self> {
        let w = Self::unchecked(points, scheme)?;
        for k in 0..w.points.len() - 1 {
            let image = map.apply(&w.points[k])?;
            let res = image.iter().zip(&w.points[k + 1]).fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()));
            if !(res <= WINDOW_TOL) {
                return Err(invalid(format!("window points {k} and {} are not consecutive iterates (residual {res:e})", k + 1)));
            }
        }
        Ok(w)
    }

    /// Wraps arbitrary sequences, e.g. polynomial test data.
    pub fn unchecked(points: Vec<Vec<f64>>, scheme: Scheme) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("window needs at least two points"));
        }
        let m = points.len() - 1;
        check_order(m, scheme)?;
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("window points have different lengths"));
        }
        Ok(Self { points, scheme, m })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// The base point `x_0`.
    pub fn base(&self) -> &[f64] {
        match self.scheme {
            Scheme::Newton => &self.points[0],
            Scheme::Gauss => &self.points[self.m / 2],
        }
    }

    /// `X_m(x_0)` for this window.
    pub fn field(&self) -> Vec<f64> {
        match self.scheme {
            Scheme::Newton => newton_field(&self.points),
            Scheme::Gauss => gauss_field(&self.points),
        }
    }
}

/// Difference table of displacements from `origin`: row `k` holds
/// `Delta_k(x_i)` for `i = 0..len-k`.
fn difference_table(points: &[Vec<f64>], origin: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let mut row: Vec<Vec<f64>> =
        points.iter().map(|p| p.iter().zip(origin).map(|(a, b)| a - b).collect()).collect();
    let mut table = Vec::with_capacity(points.len());
    loop {
        let next: Vec<Vec<f64>> = row
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
            .collect();
        table.push(row);
        if next.is_empty() {
            break;
        }
        row = next;
    }
    table
}

/// `Delta_0, .., Delta_m` at the first window point, by the recursive scheme
/// `Delta_k = Delta_{k-1} o f - Delta_{k-1}`.
pub fn finite_differences(window: &OrbitWindow) -> Vec<Vec<f64>> {
    let origin = vec![0.0; window.points[0].len()];
    difference_table(&window.points, &origin).into_iter().map(|mut row| row.swap_remove(0)).collect()
}

fn newton_field(points: &[Vec<f64>]) -> Vec<f64> {
    let table = difference_table(points, &points[0]);
    let dim = points[0].len();
    let mut out = vec![0.0; dim];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = KahanSum::new();
        for (k, row) in table.iter().enumerate().skip(1) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc.add(sign * row[0][i] / k as f64);
        }
        *o = acc.value();
    }
    out
}

fn gauss_field(points: &[Vec<f64>]) -> Vec<f64> {
    let j = (points.len() - 1) / 2;
    let table = difference_table(points, &points[j]);
    let dim = points[0].len();
    // coefficients (k-1)!^2/(2k-1)! and (k-1)! k!/(2k)!, built incrementally
    let mut odd_coef = Vec::with_capacity(j);
    let mut even_coef = Vec::with_capacity(j);
    let (mut fk1, mut fk, mut f2k1, mut f2k) = (1.0_f64, 1.0_f64, 1.0_f64, 2.0_f64);
    for k in 1..=j {
        if k > 1 {
            fk1 *= (k - 1) as f64;
            fk *= k as f64;
            f2k1 *= ((2 * k - 2) * (2 * k - 1)) as f64;
            f2k *= ((2 * k - 1) * (2 * k)) as f64;
        }
        odd_coef.push(fk1 * fk1 / f2k1);
        even_coef.push(fk1 * fk / f2k);
    }
    let mut out = vec![0.0; dim];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = KahanSum::new();
        for k in 1..=j {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            // Delta_{2k-1}(x_{-k+1}) sits at index j-k+1, Delta_{2k}(x_{-k}) at j-k
            acc.add(sign * odd_coef[k - 1] * table[2 * k - 1][j + 1 - k][i]);
            acc.add(-sign * even_coef[k - 1] * table[2 * k][j - k][i]);
        }
        *o = acc.value();
    }
    out
}

/// Weights `p_m0..p_mm` with `X_m = sum_k p_mk x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub m: usize,
    pub weights: Vec<f64>,
}

impl WeightTable {
    /// `sum_k p_mk x_k` with compensated summation, on displacements from `x_0`.
    pub fn apply(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        if points.len() != self.m + 1 {
            return Err(invalid("window length does not match weight table"));
        }
        let dim = points[0].len();
        let mut out = vec![0.0; dim];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = KahanSum::new();
            for (p, x) in self.weights.iter().zip(points).skip(1) {
                acc.add(p * (x[i] - points[0][i]));
            }
            *o = acc.value();
        }
        Ok(out)
    }
}

/// `p_m0 = -H_m`, `p_mk = (-1)^(k+1) (m+1-k) / (k (m+1)) C(m+1, k)`.
pub fn newton_weights(m: usize) -> Result<WeightTable> {
    check_order(m, Scheme::Newton)?;
    let mut weights = Vec::with_capacity(m + 1);
    let harmonic: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    weights.push(-harmonic);
    let mut binom = 1.0_f64;
    for k in 1..=m {
        binom = binom * (m + 2 - k) as f64 / k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        weights.push(sign * (m + 1 - k) as f64 / (k as f64 * (m + 1) as f64) * binom);
    }
    Ok(WeightTable { m, weights })
}

/// `sum_k |w_k|` for the weights that combine the window points into `X_m`.
///
/// Rounding errors of size `u |x|` in the points reach the field amplified by
/// at most this factor.
pub fn rounding_gain(m: usize, scheme: Scheme) -> Result<f64> {
    check_order(m, scheme)?;
    let mut gain = 0.0;
    for k in 0..=m {
        let points = (0..=m).map(|j| vec![if j == k { 1.0 } else { 0.0 }]).collect();
        gain += OrbitWindow::unchecked(points, scheme)?.field()[0].abs();
    }
    Ok(gain)
}

/// `X_m(x0)` for a map, using `m` forward iterates (Newton) or `m/2` iterates
/// each way (Gauss).
pub fn interpolating_vf(map: &dyn PhaseMap, x0: &[f64], m: usize, scheme: Scheme) -> Result<Vec<f64>> {
    OrbitWindow::from_map(map, x0, m, scheme).map(|w| w.field())
}

/// Fits `log |X_{m+1} - X_m|_inf` against `log eps` across a family of maps.
pub fn order_scaling_check<F>(family: F, x0: &[f64], m: usize, eps_grid: &[f64]) -> Result<LinearFit>
where
    F: Fn(f64) -> Result<Box<dyn PhaseMap>>,
{
    if eps_grid.len() < 4 {
        return Err(invalid("order check needs at least 4 grid points"));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("eps grid must be positive"));
    }
    check_order(m + 1, Scheme::Newton)?;
    let mut diffs = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let eval = || -> Result<f64> {
            let map = family(eps)?;
            let orbit = forward_orbit(map.as_ref(), x0, m + 1)?;
            let hi = newton_field(&orbit);
            let lo = newton_field(&orbit[..=m]);
            Ok(hi.iter().zip(&lo).fold(0.0_f64, |a, (u, v)| a.max((u - v).abs())))
        };
        diffs.push(eval().map_err(|e| Error::FitFailed(format!("eps = {eps:e}: {e}")))?);
    }
    let floored = diffs.iter().filter(|d| !(**d > FLOOR)).count();
    if floored > 0 {
        return Err(Error::DegenerateFit { usable: diffs.len() - floored, floored });
    }
    fit_loglog(eps_grid, &diffs)
}
