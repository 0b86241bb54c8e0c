//! Pendulum model at the nucleus of a resonance: `E(J, phi) = K(J) + V*(phi)`
//! with `I = I* + sqrt(eps) J`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::experiments::{ActionRange, StabilityRecord};
use crate::map_kernel::{reduce_angle, MapModel, PhaseMap, RESONANCE_TOL};
use crate::numerics::KahanSum;
use crate::resonance::{BlockScaling, ResonanceSite, ScaledBlock};

/// `(r0_hat, r1, R*)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NucleusRadii {
    /// Initial conditions with `|J| <= r0_hat` have `E <= 2 |s|`.
    pub r0_hat: f64,
    /// `E <= 4 |s|` implies `|J| <= r1`.
    pub r1: f64,
    pub r_star: f64,
}

/// `r0_hat^2 = 2 |s| / nu2`, `r1^2 = 10 |s| / nu`, `R*^2 = 11 |s| / nu`.
pub fn nucleus_radii(model: &MapModel) -> NucleusRadii {
    let dom = model.domain();
    NucleusRadii {
        r0_hat: (2.0 * dom.norm_s / dom.nu2).sqrt(),
        r1: (10.0 * dom.norm_s / dom.nu).sqrt(),
        r_star: (11.0 * dom.norm_s / dom.nu).sqrt(),
    }
}

/// `V*(phi) = (1/n) sum_k s(I*, phi + k omega*)`
pub fn resonant_average(model: &MapModel, site: &ResonanceSite, phi: &[f64]) -> Result<f64> {
    let s = model.generating_term().ok_or(Error::FormMismatch)?;
    let d = model.dim();
    if phi.len() != d || site.omega_star.len() != d || site.i_star.len() != d || site.n == 0 {
        return Err(invalid("angle or site dimension does not match model"));
    }
    let mut shifted = vec![0.0; d];
    let mut acc = KahanSum::new();
    for k in 0..site.n {
        for l in 0..d {
            shifted[l] = reduce_angle(phi[l] + k as f64 * site.omega_star[l]);
        }
        acc.add(s.value(&site.i_star, &shifted));
    }
    Ok(acc.value() / site.n as f64)
}

/// Leading-order model near a resonant torus.
#[derive(Debug, Clone)]
pub struct NucleusModel {
    model: MapModel,
    site: ResonanceSite,
    hessian: DMatrix<f64>,
    radii: NucleusRadii,
    sqrt_eps: f64,
}

/// Relative tolerance of the Hessian symmetry and convexity checks.
const HESSIAN_TOL: f64 = 1e-12;

impl NucleusModel {
    pub fn new(model: &MapModel, site: &ResonanceSite) -> Result<Self> {
        if model.generating_term().is_none() {
            return Err(Error::FormMismatch);
        }
        site.validate(model)?;
        let hessian = model.hessian(&site.i_star);
        let scale = hessian.amax().max(1.0);
        if (&hessian - hessian.transpose()).amax() > HESSIAN_TOL * scale {
            return Err(invalid("h0'' at I* is not symmetric"));
        }
        let sym = (&hessian + hessian.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        let nu = model.domain().nu;
        if min_eig < nu * (1.0 - HESSIAN_TOL) {
            return Err(invalid(format!("h0'' at I* has eigenvalue {min_eig} below nu = {nu}")));
        }
        Ok(Self {
            model: model.clone(),
            site: site.clone(),
            hessian,
            radii: nucleus_radii(model),
            sqrt_eps: model.eps().sqrt(),
        })
    }

    pub fn model(&self) -> &MapModel {
        &self.model
    }

    pub fn site(&self) -> &ResonanceSite {
        &self.site
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn radii(&self) -> NucleusRadii {
        self.radii
    }

    pub fn sqrt_eps(&self) -> f64 {
        self.sqrt_eps
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `K(J) = (h0''(I*) J) . J / 2`
    pub fn kinetic(&self, j: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for a in 0..d {
            for b in 0..d {
                acc += self.hessian[(a, b)] * j[a] * j[b];
            }
        }
        0.5 * acc
    }

    pub fn potential(&self, phi: &[f64]) -> Result<f64> {
        resonant_average(&self.model, &self.site, phi)
    }

    /// `H1_hat = n sqrt(eps) E`
    pub fn leading_hamiltonian(&self, x: &[f64]) -> Result<f64> {
        Ok(self.site.n as f64 * self.sqrt_eps * nucleus_energy(self, x)?)
    }

    /// The `n`-step map in `(J, phi)` with `I = I* + sqrt(eps) J`.
    pub fn block(&self) -> Result<ScaledBlock> {
        ScaledBlock::new(&self.model, &self.site, BlockScaling::Nucleus)
    }
}

/// `E(J, phi) = K(J) + V*(phi)` at `x = [J, phi]`.
pub fn nucleus_energy(nucleus: &NucleusModel, x: &[f64]) -> Result<f64> {
    let d = nucleus.dim();
    if x.len() != 2 * d {
        return Err(invalid("phase vector length must be 2d"));
    }
    Ok(nucleus.kinetic(&x[..d]) + nucleus.potential(&x[d..])?)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// One sampled row of a trapped orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct NucleusSample {
    pub k: usize,
    pub j: Vec<f64>,
    pub energy: f64,
    pub exited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrappedOrbit {
    /// Excursion and drifts are measured in `J` and `E`.
    pub record: StabilityRecord,
    /// `max_k |J_k|`
    pub max_radius: f64,
    pub initial_energy: f64,
    pub samples: Vec<NucleusSample>,
}

/// Iterates the nucleus block from `x0 = [J0, phi0]` for at most `budget`
/// blocks, stopping at the first `|J_k| > r1`.
///
/// Every `sample_every`-th block is kept in `samples` (0 keeps none; the exit
/// block is always kept). At `eps = 0` the block is the identity.
pub fn trapped_orbit(nucleus: &NucleusModel, x0: &[f64], budget: usize, sample_every: usize) -> Result<TrappedOrbit> {
    let d = nucleus.dim();
    if x0.len() != 2 * d {
        return Err(invalid("phase vector length must be 2d"));
    }
    let r1 = nucleus.radii.r1;
    let block = if nucleus.sqrt_eps > 0.0 { Some(nucleus.block()?) } else { None };
    let e0 = nucleus_energy(nucleus, x0)?;
    let mut x = x0.to_vec();
    let mut e_prev = e0;
    let mut record = StabilityRecord::new(x0.to_vec(), Some(nucleus.site.clone()), budget);
    let mut max_radius = norm2(&x0[..d]);
    let mut range = ActionRange::new(&x0[..d]);
    let mut samples = Vec::new();
    let keep = |k: usize| sample_every > 0 && k % sample_every == 0;
    if keep(0) {
        samples.push(NucleusSample { k: 0, j: x0[..d].to_vec(), energy: e0, exited: max_radius > r1 });
    }
    for k in 1..=budget {
        if let Some(b) = &block {
            x = b.apply(&x).map_err(|e| e.at_step(k - 1))?;
        }
        let e = nucleus_energy(nucleus, &x)?;
        let radius = norm2(&x[..d]);
        let exc = x[..d].iter().zip(&x0[..d]).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        range.add(&x[..d]);
        record.observe(k, exc, (e - e_prev).abs(), (e - e0).abs());
        record.action_spread = range.spread();
        max_radius = max_radius.max(radius);
        e_prev = e;
        let exited = radius > r1;
        if keep(k) || exited {
            samples.push(NucleusSample { k, j: x[..d].to_vec(), energy: e, exited });
        }
        if exited {
            record.exit_index = Some(k);
            break;
        }
    }
    Ok(TrappedOrbit { record, max_radius, initial_energy: e0, samples })
}

/// [`trapped_orbit`] over many starts; results keep the input order and a
/// failing start does not abort the others.
pub fn trapped_ensemble(
    nucleus: &NucleusModel,
    starts: &[Vec<f64>],
    budget: usize,
    sample_every: usize,
) -> Vec<Result<TrappedOrbit>> {
    starts.par_iter().map(|x0| trapped_orbit(nucleus, x0, budget, sample_every)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierCoefficient {
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    /// `j . omega*` is an integer
    pub resonant: bool,
}

/// Trapezoid-rule coefficient `int V*(phi) exp(-2 pi i j.phi) dphi` on a
/// `quad_n^d` grid.
pub fn resonant_fourier_check(nucleus: &NucleusModel, j: &[i64], quad_n: usize) -> Result<FourierCoefficient> {
    let d = nucleus.dim();
    if j.len() != d {
        return Err(invalid("mode dimension does not match model"));
    }
    if j.iter().all(|&a| a == 0) {
        return Err(invalid("mode must be nonzero"));
    }
    if quad_n < 2 {
        return Err(invalid("quadrature needs at least 2 nodes per angle"));
    }
    let total = quad_n.checked_pow(d as u32).filter(|&t| t <= 1 << 24).ok_or_else(|| invalid("quadrature grid too large"))?;
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    let mut phi = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        let mut phase = 0.0;
        for l in 0..d {
            let node = rest % quad_n;
            rest /= quad_n;
            phi[l] = node as f64 / quad_n as f64;
            // exact integer arithmetic before scaling keeps the phase small
            phase += ((j[l] * node as i64).rem_euclid(quad_n as i64)) as f64 / quad_n as f64;
        }
        let v = nucleus.potential(&phi)?;
        let arg = 2.0 * PI * phase;
        re.add(v * arg.cos());
        im.add(-v * arg.sin());
    }
    let (re, im) = (re.value() / total as f64, im.value() / total as f64);
    let dot: f64 = j.iter().zip(&nucleus.site.omega_star).map(|(&a, w)| a as f64 * w).sum();
    Ok(FourierCoefficient { re, im, magnitude: re.hypot(im), resonant: (dot - dot.round()).abs() <= RESONANCE_TOL })
}

#[cfg(test)]
mod tests;
