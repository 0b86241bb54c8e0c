//! Fully resonant tori: simultaneous Diophantine approximation, inversion of
//! the frequency map, covering radii and the scaled block map near a
//! resonance.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::map_kernel::{resonant_anchor, Anchor, MapModel, PhaseMap, RESONANCE_TOL};

/// Fully resonant torus `n omega(I*) = omega_star n` in `Z^d`, with block radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSite {
    pub n: usize,
    pub omega_star: Vec<f64>,
    pub i_star: Vec<f64>,
    pub rho_n: f64,
}

impl ResonanceSite {
    /// Checks integrality of `n omega*` and `omega(I*) = omega*`.
    pub fn validate(&self, model: &MapModel) -> Result<()> {
        resonant_anchor(&self.omega_star, self.n)?;
        if self.i_star.len() != model.dim() || self.omega_star.len() != model.dim() {
            return Err(invalid("site dimension does not match model"));
        }
        let w = model.frequency(&self.i_star);
        let res = w.iter().zip(&self.omega_star).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if !(res <= 1e-10) {
            return Err(invalid(format!("omega(I*) misses omega* by {res:e}")));
        }
        if !(self.rho_n > 0.0) {
            return Err(invalid("rho_n must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletApprox {
    pub n: usize,
    pub omega_star: Vec<f64>,
    /// `|omega - omega*|_inf`
    pub error: f64,
    /// `1 / (n N^(1/d))`
    pub bound: f64,
}

/// Slack used when no `n` passes the strict inequality.
pub const DIRICHLET_SLACK: f64 = 1e-15;

/// Smallest `n < N` with `|omega - round(n omega)/n|_inf < 1 / (n N^(1/d))`.
pub fn dirichlet(omega: &[f64], big_n: f64) -> Result<DirichletApprox> {
    let d = omega.len();
    if d == 0 || omega.iter().any(|w| !w.is_finite()) {
        return Err(invalid("frequency must be a finite nonempty vector"));
    }
    if !(big_n > 1.0) || big_n > 1e6 / d as f64 {
        return Err(invalid("N must lie in (1, 1e6/d]"));
    }
    let n_max = big_n.ceil() as usize - 1;
    let root = big_n.powf(1.0 / d as f64);
    let candidate = |n: usize| {
        let star: Vec<f64> = omega.iter().map(|w| (n as f64 * w).round() / n as f64).collect();
        let err = omega.iter().zip(&star).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        (star, err, 1.0 / (n as f64 * root))
    };
    for slack in [0.0, DIRICHLET_SLACK] {
        for n in 1..=n_max {
            let (star, err, bound) = candidate(n);
            if err < bound + slack {
                return Ok(DirichletApprox { n, omega_star: star, error: err, bound });
            }
        }
    }
    Err(Error::SearchExhausted { n_max: big_n.ceil() as usize })
}

pub const RESONANT_ACTION_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 5;

/// Solves `omega(I) = omega*` by damped Newton from `guess`.
pub fn resonant_action(model: &MapModel, omega_star: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
    let d = model.dim();
    if omega_star.len() != d || guess.len() != d {
        return Err(invalid("dimension mismatch in resonant_action"));
    }
    let domain = model.domain();
    let residual_of = |i: &[f64]| -> DVector<f64> {
        DVector::from_iterator(d, model.frequency(i).iter().zip(omega_star).map(|(a, b)| a - b))
    };
    let mut i = guess.to_vec();
    let mut r = residual_of(&i);
    for _ in 0..NEWTON_MAX_ITER {
        let norm = r.amax();
        if norm <= RESONANT_ACTION_TOL {
            return Ok(i);
        }
        let hess: DMatrix<f64> = model.hessian(&i);
        let step = hess.lu().solve(&r).ok_or(Error::ResonantActionFailed { residual: norm })?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = (0..d).map(|k| i[k] - scale * step[k]).collect();
            if !domain.in_extended_ball(&trial) {
                scale *= 0.5;
                continue;
            }
            let rt = residual_of(&trial);
            if rt.amax() < norm {
                accepted = Some((trial, rt));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((trial, rt)) => {
                i = trial;
                r = rt;
            }
            None => {
                let trial: Vec<f64> = (0..d).map(|k| i[k] - scale * 2.0 * step[k]).collect();
                if !domain.in_extended_ball(&trial) {
                    return Err(Error::OutOfDomain { action: trial });
                }
                return Err(Error::NoConvergence { residual: norm, iterations: NEWTON_MAX_ITER });
            }
        }
    }
    let norm = r.amax();
    if norm <= RESONANT_ACTION_TOL {
        Ok(i)
    } else {
        Err(Error::NoConvergence { residual: norm, iterations: NEWTON_MAX_ITER })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringParams {
    pub eps: f64,
    pub gamma: f64,
    pub d: usize,
    /// `N_eps = eps^(-d / (2(d+1)))`
    pub n_eps: f64,
    /// `rho_eps = gamma eps^(1 / (2(d+1)))`
    pub rho_eps: f64,
    /// `gamma0 = sqrt(18 d ||a|| / nu)`
    pub gamma0: f64,
    /// `r0 = sqrt(nu / (6 d ||h0''||))`
    pub r0: f64,
    pub gamma_below_gamma0: bool,
    /// `N_eps <= 2`, so only `n = 1` sites exist.
    pub only_period_one: bool,
}

impl CoveringParams {
    pub fn rho_n(&self, n: usize) -> f64 {
        self.rho_eps / n as f64
    }
}

pub fn covering_params(model: &MapModel, eps: f64, gamma: f64) -> Result<CoveringParams> {
    if !(eps > 0.0) || !(gamma > 0.0) {
        return Err(invalid("covering needs eps > 0 and gamma > 0"));
    }
    let d = model.dim();
    let dom = model.domain();
    let df = d as f64;
    let n_eps = eps.powf(-df / (2.0 * (df + 1.0)));
    let rho_eps = gamma * eps.powf(1.0 / (2.0 * (df + 1.0)));
    let gamma0 = (18.0 * df * dom.norm_a / dom.nu).sqrt();
    let r0 = if dom.norm_h0pp > 0.0 { (dom.nu / (6.0 * df * dom.norm_h0pp)).sqrt() } else { f64::INFINITY };
    Ok(CoveringParams {
        eps,
        gamma,
        d,
        n_eps,
        rho_eps,
        gamma0,
        r0,
        gamma_below_gamma0: gamma < gamma0,
        only_period_one: n_eps <= 2.0,
    })
}

/// `N0` from `N0^(-1/d) = nu d^(-1/2) delta_u`.
pub fn covering_threshold(nu: f64, d: usize, delta_u: f64) -> f64 {
    (nu * delta_u / (d as f64).sqrt()).powf(-(d as f64))
}

/// `sqrt(d) / (nu n N^(1/d))`, the covering radius around a site.
pub fn covering_radius(nu: f64, d: usize, n: usize, big_n: f64) -> f64 {
    (d as f64).sqrt() / (nu * n as f64 * big_n.powf(1.0 / d as f64))
}

/// Dirichlet site for `omega(I0)` with `N = N_eps`, plus its resonant action.
pub fn locate_site(model: &MapModel, i0: &[f64], params: &CoveringParams) -> Result<(ResonanceSite, DirichletApprox)> {
    let w = model.frequency(i0);
    let approx = dirichlet(&w, params.n_eps)?;
    let i_star = resonant_action(model, &approx.omega_star, i0)?;
    let site = ResonanceSite {
        n: approx.n,
        omega_star: approx.omega_star.clone(),
        i_star,
        rho_n: params.rho_n(approx.n),
    };
    Ok((site, approx))
}

/// Upper estimate for the distance to identity of the Lochak block:
/// `max(C1 n eps / rho_n, C3 n rho_n + C2 n^2 eps)` with `C3 = 2 ||omega'||`.
pub fn block_distance_estimate(model: &MapModel, n: usize, rho: f64) -> f64 {
    let dom = model.domain();
    let nf = n as f64;
    let eps = model.eps();
    let c3 = 2.0 * dom.norm_omega_prime;
    (dom.c1() * nf * eps / rho).max(c3 * nf * rho + dom.c2() * nf * nf * eps)
}

/// Action scaling `I = I* + rho J` for a resonance block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockScaling {
    /// `rho = rho_n` from the covering.
    Lochak,
    /// `rho = sqrt(eps)`, the resonance nucleus.
    Nucleus,
}

/// The `n`-th iterate near a resonance in scaled coordinates `(J, phi)`:
/// `J = (I - I*) / rho`, angles shifted by `-k omega*` after `k` steps.
#[derive(Debug, Clone)]
pub struct ScaledBlock {
    model: MapModel,
    site: ResonanceSite,
    rho: f64,
    anchor: Anchor,
}

impl ScaledBlock {
    pub fn new(model: &MapModel, site: &ResonanceSite, scaling: BlockScaling) -> Result<Self> {
        let rho = match scaling {
            BlockScaling::Lochak => site.rho_n,
            BlockScaling::Nucleus => model.eps().sqrt(),
        };
        Self::with_rho(model, site, rho)
    }

    pub fn with_rho(model: &MapModel, site: &ResonanceSite, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(invalid("block scale must be positive (eps = 0 has no nucleus scale)"));
        }
        site.validate(model)?;
        let mut anchor = resonant_anchor(&site.omega_star, site.n)?;
        anchor.action = site.i_star.clone();
        Ok(Self { model: model.clone(), site: site.clone(), rho, anchor })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn site(&self) -> &ResonanceSite {
        &self.site
    }

    pub fn model(&self) -> &MapModel {
        &self.model
    }

    // J increments are added to the input J so that unchanged actions stay bitwise equal
    fn rescale(&self, x: &[f64], start: &[f64], delta: &[f64], angle: Vec<f64>) -> Vec<f64> {
        let mut out: Vec<f64> = (0..start.len()).map(|i| x[i] + (delta[i] - start[i]) / self.rho).collect();
        out.extend(angle);
        out
    }

    /// Maps `(J, phi)` to `I = I* + rho J`.
    pub fn to_action(&self, j: &[f64]) -> Vec<f64> {
        j.iter().zip(&self.site.i_star).map(|(a, b)| b + self.rho * a).collect()
    }
}

impl PhaseMap for ScaledBlock {
    fn half_dim(&self) -> usize {
        self.model.dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.model.dim();
        if x.len() != 2 * d {
            return Err(invalid("phase vector length must be 2d"));
        }
        let start: Vec<f64> = x[..d].iter().map(|j| self.rho * j).collect();
        let mut delta = start.clone();
        let mut angle = x[d..].to_vec();
        for k in 0..self.site.n {
            self.model.step_relative(&self.anchor, &mut delta, &mut angle, k).map_err(|e| e.at_step(k))?;
        }
        Ok(self.rescale(x, &start, &delta, angle))
    }

    fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.model.dim();
        if x.len() != 2 * d {
            return Err(invalid("phase vector length must be 2d"));
        }
        let start: Vec<f64> = x[..d].iter().map(|j| self.rho * j).collect();
        let mut delta = start.clone();
        let mut angle = x[d..].to_vec();
        for k in (1..=self.site.n).rev() {
            self.model
                .step_inverse_relative(&self.anchor, &mut delta, &mut angle, k)
                .map_err(|e| e.at_step(self.site.n - k))?;
        }
        Ok(self.rescale(x, &start, &delta, angle))
    }
}

/// The exact resonance check used by [`ResonanceSite::validate`].
pub fn is_resonant(omega_star: &[f64], n: usize) -> bool {
    n > 0
        && omega_star.iter().all(|w| {
            let t = n as f64 * w;
            (t - t.round()).abs() <= RESONANCE_TOL
        })
}

#[cfg(test)]
mod tests;
