//! Reproducible experiments: a-priori margins, the split of the block
//! generating function, energy drift along orbits, confinement scans and
//! error-law fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{
    distance_to_identity, embedding_error_with_eps, optimal_order, reconstruct_hamiltonian, recover_generating,
    EmbeddingReport, EmbeddingSettings, InterpolatingField, PathOrder, PhaseBox,
};
use crate::interpolation::{rounding_gain, Scheme};
use crate::map_kernel::{MapModel, PhaseMap, PhasePoint};
use crate::numerics::{fit_log_y, kahan_sum, LinearFit, FLOOR};
use crate::resonance::{covering_params, locate_site, BlockScaling, ResonanceSite, ScaledBlock};

/// Outcome of following one initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRecord {
    pub initial: Vec<f64>,
    pub site: Option<ResonanceSite>,
    /// Iterates requested.
    pub horizon: usize,
    /// Iterates completed.
    pub steps: usize,
    /// `max_k |I_k - I_0|_inf` in the coordinates being iterated.
    pub max_excursion: f64,
    /// `max_(k,l) |I_k - I_l|_inf`, the largest excursion seen from any
    /// point of the orbit taken as the start.
    pub action_spread: f64,
    pub exit_index: Option<usize>,
    /// `max_k |E_k - E_(k-1)|` of the slow observable, 0 when none is tracked.
    pub max_step_drift: f64,
    /// `max_k |E_k - E_0|`
    pub max_drift: f64,
    /// Error that stopped the orbit early.
    pub failure: Option<String>,
}

impl StabilityRecord {
    pub fn new(initial: Vec<f64>, site: Option<ResonanceSite>, horizon: usize) -> Self {
        Self {
            initial,
            site,
            horizon,
            steps: 0,
            max_excursion: 0.0,
            action_spread: 0.0,
            exit_index: None,
            max_step_drift: 0.0,
            max_drift: 0.0,
            failure: None,
        }
    }

    pub(crate) fn observe(&mut self, k: usize, excursion: f64, step_drift: f64, drift: f64) {
        self.steps = k;
        self.max_excursion = self.max_excursion.max(excursion);
        self.max_step_drift = self.max_step_drift.max(step_drift);
        self.max_drift = self.max_drift.max(drift);
    }

    pub fn escaped(&self) -> bool {
        self.exit_index.is_some()
    }
}

/// Per-coordinate range of the actions visited so far.
pub(crate) struct ActionRange {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ActionRange {
    pub(crate) fn new(action: &[f64]) -> Self {
        Self { lo: action.to_vec(), hi: action.to_vec() }
    }

    pub(crate) fn add(&mut self, action: &[f64]) {
        for ((lo, hi), a) in self.lo.iter_mut().zip(self.hi.iter_mut()).zip(action) {
            *lo = lo.min(*a);
            *hi = hi.max(*a);
        }
    }

    pub(crate) fn spread(&self) -> f64 {
        self.lo.iter().zip(&self.hi).fold(0.0_f64, |m, (lo, hi)| m.max(hi - lo))
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Measured drifts after `n` steps next to their a-priori bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriMargins {
    /// `|I_n - I_0|_inf`
    pub action_change: f64,
    /// `C1 n eps`
    pub action_bound: f64,
    /// `|phi_n - phi_0 - n omega(I_0)|_inf`
    pub angle_change: f64,
    /// `C2 n^2 eps`
    pub angle_bound: f64,
}

impl AprioriMargins {
    pub fn holds(&self) -> bool {
        self.action_change <= self.action_bound && self.angle_change <= self.angle_bound
    }
}

/// Relative slack for rounding in [`AprioriMargins`] comparisons made by callers.
pub const APRIORI_ROUNDING: f64 = 1e-12;

pub fn apriori_check(model: &MapModel, x0: &PhasePoint, n: usize) -> Result<AprioriMargins> {
    let orbit = model.iterate(x0, n)?;
    let last = orbit.last().expect("orbit contains x0");
    let w0 = model.frequency(&x0.action);
    let nf = n as f64;
    let angle_change = (0..model.dim()).fold(0.0_f64, |m, l| {
        m.max((last.angle[l] - x0.angle[l] - nf * w0[l]).abs())
    });
    let dom = model.domain();
    let eps = model.eps();
    Ok(AprioriMargins {
        action_change: sup_diff(&last.action, &x0.action),
        action_bound: dom.c1() * nf * eps,
        angle_change,
        angle_bound: dom.c2() * nf * nf * eps,
    })
}

/// `h_n(Jbar) = n / rho (h0(I* + rho Jbar) - h0(I*) - rho omega* . Jbar)`
pub fn integrable_part(model: &MapModel, site: &ResonanceSite, rho: f64, jbar: &[f64]) -> f64 {
    let action: Vec<f64> = jbar.iter().zip(&site.i_star).map(|(j, c)| c + rho * j).collect();
    let lin: f64 = jbar.iter().zip(&site.omega_star).map(|(j, w)| j * w).sum();
    site.n as f64 / rho * (model.energy(&action) - model.energy(&site.i_star) - rho * lin)
}

/// One grid point of [`sn_decomposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct SnSample {
    pub point: Vec<f64>,
    pub s_n: f64,
    pub h_n: f64,
    pub w_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnReport {
    pub rho: f64,
    pub samples: Vec<SnSample>,
    /// `max |w_n|` over the grid
    pub sup_w: f64,
    /// `d C2 n^2 eps + d C1 n eps / rho`
    pub w_bound: f64,
    /// Largest violation of `nu n rho |J|^2 / 2 <= h_n <= nu2 n rho |J|^2 / 2`
    /// (0 when the sandwich holds everywhere).
    pub sandwich_violation: f64,
}

/// Splits the generating function `S_n` of the Lochak block into `h_n + w_n`.
///
/// `S_n` is recovered by path integration from `(0, 0)`; the grid covers
/// `|Jbar| <= 1` (from a `[-1, 1]^d` box) times `[0, 1]^d` in the angles.
pub fn sn_decomposition(model: &MapModel, site: &ResonanceSite, grid_n: usize, quad_tol: f64) -> Result<SnReport> {
    let block = ScaledBlock::new(model, site, BlockScaling::Lochak)?;
    let d = model.dim();
    let rho = block.rho();
    let region = PhaseBox::action_ball(&vec![0.0; d], 1.0);
    let grid: Vec<Vec<f64>> = region
        .grid(grid_n)?
        .into_iter()
        .filter(|x| x[..d].iter().map(|j| j * j).sum::<f64>() <= 1.0)
        .collect();
    let base = vec![0.0; 2 * d];
    let samples: Vec<Result<SnSample>> = grid
        .par_iter()
        .map(|x| {
            let s_n = recover_generating(&block, &base, x, quad_tol)?;
            let h_n = integrable_part(model, site, rho, &x[..d]);
            Ok(SnSample { point: x.clone(), s_n, h_n, w_n: s_n - h_n })
        })
        .collect();
    let samples: Vec<SnSample> = samples.into_iter().collect::<Result<_>>()?;
    let dom = model.domain();
    let (nf, df, eps) = (site.n as f64, d as f64, model.eps());
    let w_bound = df * dom.c2() * nf * nf * eps + df * dom.c1() * nf * eps / rho;
    let mut sup_w = 0.0_f64;
    let mut violation = 0.0_f64;
    for s in &samples {
        sup_w = sup_w.max(s.w_n.abs());
        let j2: f64 = s.point[..d].iter().map(|j| j * j).sum();
        let lo = 0.5 * dom.nu * nf * rho * j2;
        let hi = 0.5 * dom.nu2 * nf * rho * j2;
        let slack = 1e-12 * hi.max(f64::MIN_POSITIVE);
        violation = violation.max(lo - s.h_n - slack).max(s.h_n - hi - slack);
    }
    Ok(SnReport { rho, samples, sup_w, w_bound, sandwich_violation: violation.max(0.0) })
}

/// `H_m` at block boundaries of one orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub m: usize,
    /// `H_m(x_j)` for `j = 0..=blocks`
    pub values: Vec<f64>,
    /// `H_m(x_j) - H_m(x_(j-1))`
    pub increments: Vec<f64>,
    /// `max_j |increment_j|`
    pub max_increment: f64,
    /// Compensated sum of the increments.
    pub telescoped: f64,
}

impl DriftReport {
    /// `H_m(end) - H_m(start)`
    pub fn direct_total(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }
}

/// Evaluates the Hamiltonian of `X_m` along the orbit of `map` from `x0`.
///
/// `H_m` is reconstructed by path integration from the origin with the
/// periodic correction of [`reconstruct_hamiltonian`].
pub fn energy_drift(
    map: &dyn PhaseMap,
    m: usize,
    scheme: Scheme,
    x0: &[f64],
    blocks: usize,
    quad_tol: f64,
) -> Result<DriftReport> {
    let ens = energy_drift_ensemble(map, m, scheme, &[x0.to_vec()], blocks, quad_tol)?;
    Ok(ens.reports.into_iter().next().expect("one start"))
}

/// Drift reports for several starts sharing one reconstructed `H_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEnsemble {
    pub m: usize,
    pub reports: Vec<DriftReport>,
    /// Largest per-block increment over all starts.
    pub max_increment: f64,
}

pub fn energy_drift_ensemble(
    map: &dyn PhaseMap,
    m: usize,
    scheme: Scheme,
    starts: &[Vec<f64>],
    blocks: usize,
    quad_tol: f64,
) -> Result<DriftEnsemble> {
    if blocks == 0 || starts.is_empty() {
        return Err(invalid("energy drift needs at least one block and one start"));
    }
    let field = InterpolatingField::new(map, m, scheme)?;
    let dim = 2 * map.half_dim();
    if starts.iter().any(|x| x.len() != dim) {
        return Err(invalid("phase vector length must be 2d"));
    }
    let h = reconstruct_hamiltonian(&field, &vec![0.0; dim], &[], quad_tol)?;
    let mut reports = Vec::with_capacity(starts.len());
    for x0 in starts {
        let mut orbit = Vec::with_capacity(blocks + 1);
        orbit.push(x0.clone());
        for k in 0..blocks {
            let next = map.apply(&orbit[k]).map_err(|e| e.at_step(k))?;
            orbit.push(next);
        }
        let values: Vec<Result<f64>> =
            orbit.par_iter().map(|x| h.evaluate(&field, x, PathOrder::ActionsFirst)).collect();
        let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
        let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        let max_increment = increments.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let telescoped = kahan_sum(increments.iter().copied());
        reports.push(DriftReport { m, values, increments, max_increment, telescoped });
    }
    let max_increment = reports.iter().fold(0.0_f64, |a, r| a.max(r.max_increment));
    Ok(DriftEnsemble { m, reports, max_increment })
}

/// `1 / (2(d + 1))`, the confinement exponent in `d` degrees of freedom.
pub fn confinement_exponent(d: usize) -> f64 {
    1.0 / (2.0 * (d as f64 + 1.0))
}

/// Follows each seed for `horizon` steps of the map and records
/// `|I_k - I_0|_inf`; the first `k` with excursion above `radius` ends the seed.
///
/// Results keep the seed order. A seed that fails numerically keeps its
/// partial record with `failure` set.
pub fn stability_scan(model: &MapModel, seeds: &[PhasePoint], horizon: usize, radius: f64) -> Vec<StabilityRecord> {
    seeds.par_iter().map(|x0| scan_one(model, x0, horizon, radius)).collect()
}

fn scan_one(model: &MapModel, x0: &PhasePoint, horizon: usize, radius: f64) -> StabilityRecord {
    let mut rec = StabilityRecord::new(x0.to_flat(), None, horizon);
    let mut x = x0.clone();
    let mut range = ActionRange::new(&x0.action);
    for k in 1..=horizon {
        match model.step(&x) {
            Ok(next) => x = next,
            Err(e) => {
                rec.failure = Some(e.at_step(k - 1).to_string());
                rec.action_spread = range.spread();
                return rec;
            }
        }
        let exc = sup_diff(&x.action, &x0.action);
        range.add(&x.action);
        rec.observe(k, exc, 0.0, 0.0);
        rec.action_spread = range.spread();
        if exc > radius {
            rec.exit_index = Some(k);
            break;
        }
    }
    rec
}

/// Radius calibrated from a pilot scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotCalibration {
    /// `max action spread / eps^exponent` over the pilot seeds
    pub c1: f64,
    pub exponent: f64,
    /// `2 c1 eps^exponent`
    pub radius: f64,
    pub pilot: Vec<StabilityRecord>,
}

/// Runs the pilot seeds unconfined and sets the radius to `2 c1 eps^(1/(2(d+1)))`
/// with `c1 eps^(1/(2(d+1)))` the largest action spread seen.
///
/// Every point of a pilot orbit is itself an admissible start, so the spread
/// (not the excursion from the one seed) estimates the supremum of excursions.
pub fn calibrate_radius(model: &MapModel, pilot_seeds: &[PhasePoint], horizon: usize) -> Result<PilotCalibration> {
    if pilot_seeds.is_empty() {
        return Err(invalid("pilot needs at least one seed"));
    }
    let eps = model.eps();
    if !(eps > 0.0) {
        return Err(invalid("calibration needs eps > 0"));
    }
    let pilot = stability_scan(model, pilot_seeds, horizon, f64::INFINITY);
    if let Some(bad) = pilot.iter().find_map(|r| r.failure.clone()) {
        return Err(invalid(format!("pilot seed failed: {bad}")));
    }
    let exponent = confinement_exponent(model.dim());
    let scale = eps.powf(exponent);
    let worst = pilot.iter().fold(0.0_f64, |m, r| m.max(r.action_spread));
    let c1 = worst / scale;
    Ok(PilotCalibration { c1, exponent, radius: 2.0 * c1 * scale, pilot })
}

/// `k`-th element of the van der Corput sequence in `base`.
fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while k > 0 {
        x += f * (k % base) as f64;
        k /= base;
        f *= inv;
    }
    x
}

const HALTON_BASES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Pilot seeds placed on the resonant tori that cover a Halton sample of the
/// action box `[lo, hi]^d`, with Halton angles.
///
/// Confinement is weakest at resonances, so these seeds probe the largest
/// excursions the scan can meet.
pub fn resonant_pilot_seeds(model: &MapModel, lo: f64, hi: f64, count: usize, gamma: f64) -> Result<Vec<PhasePoint>> {
    let d = model.dim();
    if 2 * d > HALTON_BASES.len() {
        return Err(invalid("pilot seeds support d <= 4"));
    }
    if !(hi > lo) {
        return Err(invalid("seed box needs lo < hi"));
    }
    let params = covering_params(model, model.eps(), gamma)?;
    (0..count)
        .map(|k| {
            let i0: Vec<f64> = (0..d).map(|l| lo + (hi - lo) * radical_inverse(k + 1, HALTON_BASES[l])).collect();
            let angle: Vec<f64> = (0..d).map(|l| radical_inverse(k + 1, HALTON_BASES[d + l])).collect();
            let (site, _) = locate_site(model, &i0, &params)?;
            Ok(PhasePoint::new(site.i_star, angle))
        })
        .collect()
}

/// Seeds with actions uniform in `[lo, hi]^d` and angles uniform in `[0, 1)^d`.
pub fn random_seeds(d: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let action = (0..d).map(|_| rng.random_range(lo..hi)).collect();
            let angle = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            PhasePoint::new(action, angle)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawMode {
    /// `log error` against `m` at fixed `eps_hat`.
    VsOrder,
    /// `log error` against `1 / eps_hat` at the optimal order.
    VsEps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawPoint {
    /// Family parameter (`eps` of the underlying map), or `eps_hat` for [`LawMode::VsOrder`].
    pub param: f64,
    pub report: EmbeddingReport,
    /// `max(FLOOR, u G_m max|x|)` with `G_m` the [`rounding_gain`] of the scheme.
    pub floor: f64,
    /// Excluded from the fit because the error sits at the numerical floor.
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    pub mode: LawMode,
    pub points: Vec<LawPoint>,
    /// `None` when fewer than two points are above the floor.
    pub fit: Option<LinearFit>,
    /// `error_(k+1) / error_k` between consecutive points.
    pub ratios: Vec<f64>,
}

/// Error level below which an embedding error is indistinguishable from
/// rounding in the window points.
pub fn numerical_floor(m: usize, scheme: Scheme, region: &PhaseBox) -> Result<f64> {
    let scale = region.bounds.iter().fold(1.0_f64, |a, &(lo, hi)| a.max(lo.abs()).max(hi.abs()));
    Ok(FLOOR.max(f64::EPSILON * rounding_gain(m, scheme)? * scale))
}

fn law_point(param: f64, report: EmbeddingReport, scheme: Scheme, region: &PhaseBox) -> Result<LawPoint> {
    let floor = numerical_floor(report.m, scheme, region)?;
    let floored = report.max_error <= floor;
    Ok(LawPoint { param, report, floor, floored })
}

fn finish(mode: LawMode, points: Vec<LawPoint>, xs: Vec<f64>) -> Result<LawReport> {
    let errors: Vec<f64> = points.iter().map(|p| p.report.max_error).collect();
    let ratios = errors.windows(2).map(|w| w[1] / w[0]).collect();
    // floored points are passed as 0 so the fit skips and counts them
    let fit_errors: Vec<f64> = points.iter().map(|p| if p.floored { 0.0 } else { p.report.max_error }).collect();
    let fit = match fit_log_y(&xs, &fit_errors) {
        Ok(f) => Some(f),
        Err(Error::DegenerateFit { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(LawReport { mode, points, fit, ratios })
}

/// Embedding errors of one map for each order in `orders`.
pub fn error_law_vs_order(
    map: &dyn PhaseMap,
    orders: &[usize],
    region: &PhaseBox,
    grid_n: usize,
    settings: EmbeddingSettings,
) -> Result<LawReport> {
    let eps_hat = distance_to_identity(map, region, grid_n)?;
    let mut points = Vec::with_capacity(orders.len());
    for &m in orders {
        let report = embedding_error_with_eps(map, m, region, grid_n, settings, eps_hat)?;
        points.push(law_point(eps_hat, report, settings.scheme, region)?);
    }
    let xs = orders.iter().map(|&m| m as f64).collect();
    finish(LawMode::VsOrder, points, xs)
}

/// Embedding errors at the optimal order across a family of maps.
///
/// Gauss schemes round the optimal order up to the next even integer.
pub fn error_law_vs_eps<F>(
    family: F,
    eps_grid: &[f64],
    region: &PhaseBox,
    grid_n: usize,
    settings: EmbeddingSettings,
) -> Result<LawReport>
where
    F: Fn(f64) -> Result<Box<dyn PhaseMap>>,
{
    let mut points = Vec::with_capacity(eps_grid.len());
    let mut xs = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let map = family(eps)?;
        let eps_hat = distance_to_identity(map.as_ref(), region, grid_n)?;
        let mut m = optimal_order(settings.delta, eps_hat, map.half_dim()).m;
        if settings.scheme == Scheme::Gauss && m % 2 == 1 {
            m += 1;
        }
        let report = embedding_error_with_eps(map.as_ref(), m, region, grid_n, settings, eps_hat)?;
        xs.push(1.0 / eps_hat);
        points.push(law_point(eps, report, settings.scheme, region)?);
    }
    finish(LawMode::VsEps, points, xs)
}

#[cfg(test)]
mod tests;
