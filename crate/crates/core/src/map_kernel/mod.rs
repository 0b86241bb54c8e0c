//! Quasi-integrable exact symplectic maps in action-angle variables.
//!
//! A [`MapModel`] is an integrable twist `(I, phi) -> (I, phi + omega(I))`
//! plus an `eps`-sized perturbation given either explicitly, through kicks
//! `a(I, phi)` and `b(I, phi)`, or through a periodic generating term
//! `s(Ibar, phi)`:
//!
//! ```text
//! explicit:    Ibar = I + eps a(I, phi)            phibar = phi + omega(I) + eps b(I, phi)
//! generating:  Ibar = I - eps ds/dphi(Ibar, phi)   phibar = phi + omega(Ibar) + eps ds/dIbar(Ibar, phi)
//! ```
//!
//! Angles are carried as lifts. Periodic functions only ever see the angle
//! reduced mod 1.

pub mod catalog;
pub mod implicit;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
pub use implicit::{implicit_solve, implicit_solve_traced, PicardOutcome, PicardSettings};

/// Lifted action-angle state. Angles are in full turns and never reduced.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub action: Vec<f64>,
    pub angle: Vec<f64>,
}

impl PhasePoint {
    pub fn new(action: Vec<f64>, angle: Vec<f64>) -> Self {
        assert_eq!(action.len(), angle.len(), "action and angle dimensions differ");
        Self { action, angle }
    }

    pub fn dim(&self) -> usize {
        self.action.len()
    }

    /// Flattened `[I_1..I_d, phi_1..phi_d]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dim());
        v.extend_from_slice(&self.action);
        v.extend_from_slice(&self.angle);
        v
    }

    pub fn from_flat(x: &[f64]) -> Self {
        assert!(x.len() % 2 == 0, "flat phase vector must have even length");
        let d = x.len() / 2;
        Self { action: x[..d].to_vec(), angle: x[d..].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.action.iter().chain(&self.angle).all(|v| v.is_finite())
    }

    /// Angles reduced to `[0, 1)`.
    pub fn reduced(&self) -> Self {
        Self { action: self.action.clone(), angle: self.angle.iter().map(|&a| reduce_angle(a)).collect() }
    }
}

#[inline]
pub fn reduce_angle(a: f64) -> f64 {
    let r = a - a.floor();
    if r >= 1.0 { 0.0 } else { r }
}

/// Action ball, analyticity parameters and sup-norm bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub center: Vec<f64>,
    /// Radius of the action ball `B_R` (sup norm).
    pub radius: f64,
    pub sigma: f64,
    pub r: f64,
    pub nu: f64,
    /// `d * ||h0''||`
    pub nu2: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub norm_omega_prime: f64,
    pub norm_s: f64,
    pub norm_h0pp: f64,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.radius, self.sigma, self.r, self.nu, self.nu2];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("domain radius, sigma, r, nu, nu2 must be positive"));
        }
        let nonneg = [self.norm_a, self.norm_b, self.norm_omega_prime, self.norm_s, self.norm_h0pp];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("domain norms must be nonnegative"));
        }
        if self.nu > self.nu2 {
            return Err(invalid("nu must not exceed nu2"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `dist(I, B_R) <= sigma` in the sup norm.
    pub fn in_extended_ball(&self, action: &[f64]) -> bool {
        let lim = self.radius + self.sigma;
        action.iter().zip(&self.center).all(|(a, c)| (a - c).abs() <= lim)
    }

    pub fn in_ball(&self, action: &[f64]) -> bool {
        action.iter().zip(&self.center).all(|(a, c)| (a - c).abs() <= self.radius)
    }

    /// `C1 = ||a||`
    pub fn c1(&self) -> f64 {
        self.norm_a
    }

    /// `C2 = ||omega'|| ||a|| / 2 + ||b||`
    pub fn c2(&self) -> f64 {
        0.5 * self.norm_omega_prime * self.norm_a + self.norm_b
    }

    /// `delta = min(1, r) / 2`
    pub fn default_delta(&self) -> f64 {
        0.5 * self.r.min(1.0)
    }
}

/// The integrable part `h0` with frequency map `omega = h0'`.
pub trait Integrable: Send + Sync {
    fn dim(&self) -> usize;
    fn energy(&self, action: &[f64]) -> f64;
    fn frequency(&self, action: &[f64], out: &mut [f64]);
    fn hessian(&self, action: &[f64]) -> DMatrix<f64>;
}

/// Explicit kicks `a`, `b`. Angles arrive reduced mod 1.
pub trait ExplicitPerturbation: Send + Sync {
    fn action_kick(&self, action: &[f64], angle: &[f64], out: &mut [f64]);
    fn angle_kick(&self, action: &[f64], angle: &[f64], out: &mut [f64]);
}

/// Periodic generating term `s(Ibar, phi)`. Angles arrive reduced mod 1.
pub trait GeneratingTerm: Send + Sync {
    fn value(&self, action: &[f64], angle: &[f64]) -> f64;
    fn grad_angle(&self, action: &[f64], angle: &[f64], out: &mut [f64]);
    fn grad_action(&self, action: &[f64], angle: &[f64], out: &mut [f64]);
}

#[derive(Clone)]
pub enum Perturbation {
    Explicit(Arc<dyn ExplicitPerturbation>),
    Generating(Arc<dyn GeneratingTerm>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapForm {
    Explicit,
    Generating,
}

/// A map acting on flattened phase vectors `[I, phi]` of length `2d`.
pub trait PhaseMap: Send + Sync {
    /// `d`, the number of degrees of freedom.
    fn half_dim(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn apply_inverse(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::NotInvertible)
    }
}

impl<T: PhaseMap + ?Sized> PhaseMap for &T {
    fn half_dim(&self) -> usize {
        (**self).half_dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
    fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply_inverse(x)
    }
}

impl<T: PhaseMap + ?Sized> PhaseMap for Box<T> {
    fn half_dim(&self) -> usize {
        (**self).half_dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
    fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply_inverse(x)
    }
}

impl<T: PhaseMap + ?Sized> PhaseMap for Arc<T> {
    fn half_dim(&self) -> usize {
        (**self).half_dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
    fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply_inverse(x)
    }
}

/// Reference point for relative stepping: actions are tracked as `I - I*`
/// and angles as `phi_k - k omega*`.
#[derive(Debug, Clone)]
pub(crate) struct Anchor {
    pub action: Vec<f64>,
    pub frequency: Vec<f64>,
    /// Period `n` of `omega*` (`n omega*` integral), or 0 when `omega* = 0`.
    pub period: usize,
}

impl Anchor {
    pub fn origin(d: usize) -> Self {
        Self { action: vec![0.0; d], frequency: vec![0.0; d], period: 0 }
    }

    /// Angle reduced mod 1 for relative angle `rel` at step phase `k`.
    #[inline]
    fn true_angle(&self, rel: &[f64], k: usize, out: &mut [f64]) {
        let phase = if self.period == 0 { 0 } else { k % self.period };
        for i in 0..rel.len() {
            out[i] = reduce_angle(rel[i] + phase as f64 * self.frequency[i]);
        }
    }
}

#[derive(Clone)]
pub struct MapModel {
    name: String,
    eps: f64,
    integrable: Arc<dyn Integrable>,
    perturbation: Perturbation,
    domain: DomainSpec,
    solver: PicardSettings,
}

impl fmt::Debug for MapModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapModel")
            .field("name", &self.name)
            .field("d", &self.dim())
            .field("form", &self.form())
            .field("eps", &self.eps)
            .field("domain", &self.domain)
            .finish()
    }
}

impl MapModel {
    pub fn new(
        name: impl Into<String>,
        eps: f64,
        integrable: Arc<dyn Integrable>,
        perturbation: Perturbation,
        domain: DomainSpec,
    ) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(invalid("eps must be finite and nonnegative"));
        }
        domain.validate()?;
        if integrable.dim() != domain.dim() || integrable.dim() == 0 {
            return Err(invalid("integrable part and domain dimensions differ"));
        }
        Ok(Self { name: name.into(), eps, integrable, perturbation, domain, solver: PicardSettings::default() })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(invalid("eps must be finite and nonnegative"));
        }
        Ok(Self { eps, ..self.clone() })
    }

    pub fn with_domain(&self, domain: DomainSpec) -> Result<Self> {
        domain.validate()?;
        if domain.dim() != self.dim() {
            return Err(invalid("domain dimension mismatch"));
        }
        Ok(Self { domain, ..self.clone() })
    }

    pub fn with_solver(mut self, solver: PicardSettings) -> Self {
        self.solver = solver;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.integrable.dim()
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn form(&self) -> MapForm {
        match self.perturbation {
            Perturbation::Explicit(_) => MapForm::Explicit,
            Perturbation::Generating(_) => MapForm::Generating,
        }
    }

    pub fn integrable(&self) -> &dyn Integrable {
        self.integrable.as_ref()
    }

    pub fn generating_term(&self) -> Option<&dyn GeneratingTerm> {
        match &self.perturbation {
            Perturbation::Generating(s) => Some(s.as_ref()),
            Perturbation::Explicit(_) => None,
        }
    }

    pub fn energy(&self, action: &[f64]) -> f64 {
        self.integrable.energy(action)
    }

    pub fn frequency(&self, action: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.integrable.frequency(action, &mut out);
        out
    }

    pub fn hessian(&self, action: &[f64]) -> DMatrix<f64> {
        self.integrable.hessian(action)
    }

    /// `s(Ibar, phi)` with the angle reduced internally.
    pub fn generating_value(&self, action: &[f64], angle: &[f64]) -> Result<f64> {
        let s = self.generating_term().ok_or(Error::FormMismatch)?;
        let red: Vec<f64> = angle.iter().map(|&a| reduce_angle(a)).collect();
        Ok(s.value(action, &red))
    }

    fn check_action(&self, action: &[f64]) -> Result<()> {
        if !self.domain.in_extended_ball(action) || action.iter().any(|a| !a.is_finite()) {
            return Err(Error::DomainEscape {
                action: action.to_vec(),
                limit: self.domain.radius + self.domain.sigma,
            });
        }
        Ok(())
    }

    /// One application of the map.
    pub fn step(&self, x: &PhasePoint) -> Result<PhasePoint> {
        if x.dim() != self.dim() {
            return Err(invalid("phase point dimension mismatch"));
        }
        let anchor = Anchor::origin(self.dim());
        let mut delta = x.action.clone();
        let mut angle = x.angle.clone();
        self.step_relative(&anchor, &mut delta, &mut angle, 0)?;
        Ok(PhasePoint { action: delta, angle })
    }

    /// Inverse of [`MapModel::step`].
    pub fn step_inverse(&self, x: &PhasePoint) -> Result<PhasePoint> {
        if x.dim() != self.dim() {
            return Err(invalid("phase point dimension mismatch"));
        }
        let anchor = Anchor::origin(self.dim());
        let mut delta = x.action.clone();
        let mut angle = x.angle.clone();
        self.step_inverse_relative(&anchor, &mut delta, &mut angle, 1)?;
        Ok(PhasePoint { action: delta, angle })
    }

    /// `F^k(x0)` for `k = 0..=n`, angles lifted.
    pub fn iterate(&self, x0: &PhasePoint, n: usize) -> Result<Vec<PhasePoint>> {
        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(x0.clone());
        let mut x = x0.clone();
        for k in 0..n {
            x = self.step(&x).map_err(|e| e.at_step(k))?;
            orbit.push(x.clone());
        }
        Ok(orbit)
    }

    /// The lift `(I_n, phi_n - n omega*)` of `F^n`.
    pub fn shifted_lift(&self, x0: &PhasePoint, n: usize, omega_star: &[f64]) -> Result<PhasePoint> {
        let anchor = resonant_anchor(omega_star, n)?;
        let anchor = Anchor { action: vec![0.0; self.dim()], ..anchor };
        let mut delta = x0.action.clone();
        let mut angle = x0.angle.clone();
        for k in 0..n {
            self.step_relative(&anchor, &mut delta, &mut angle, k).map_err(|e| e.at_step(k))?;
        }
        Ok(PhasePoint { action: delta, angle })
    }

    /// One step in anchored coordinates. `delta = I - I*`, `angle = phi_k - k omega*`.
    pub(crate) fn step_relative(&self, anchor: &Anchor, delta: &mut [f64], angle: &mut [f64], k: usize) -> Result<()> {
        let d = self.dim();
        let mut phi = vec![0.0; d];
        anchor.true_angle(angle, k, &mut phi);
        let mut action: Vec<f64> = (0..d).map(|i| anchor.action[i] + delta[i]).collect();
        self.check_action(&action)?;
        let eps = self.eps;
        let mut freq = vec![0.0; d];
        match &self.perturbation {
            Perturbation::Explicit(p) => {
                let mut kick = vec![0.0; d];
                self.integrable.frequency(&action, &mut freq);
                for i in 0..d {
                    angle[i] += freq[i] - anchor.frequency[i];
                }
                if eps != 0.0 {
                    p.angle_kick(&action, &phi, &mut kick);
                    for i in 0..d {
                        angle[i] += eps * kick[i];
                    }
                    p.action_kick(&action, &phi, &mut kick);
                    for i in 0..d {
                        delta[i] += eps * kick[i];
                    }
                }
            }
            Perturbation::Generating(s) => {
                if eps != 0.0 {
                    let base = &anchor.action;
                    let mut probe = vec![0.0; d];
                    let new_delta = implicit_solve(
                        |y, out| {
                            for i in 0..d {
                                probe[i] = base[i] + y[i];
                            }
                            s.grad_angle(&probe, &phi, out);
                            for o in out.iter_mut() {
                                *o *= -eps;
                            }
                        },
                        delta,
                        self.domain.sigma,
                        self.solver.tol,
                        self.solver.max_iter,
                    )?;
                    delta.copy_from_slice(&new_delta);
                }
                for i in 0..d {
                    action[i] = anchor.action[i] + delta[i];
                }
                self.check_action(&action)?;
                self.integrable.frequency(&action, &mut freq);
                for i in 0..d {
                    angle[i] += freq[i] - anchor.frequency[i];
                }
                if eps != 0.0 {
                    let mut grad = vec![0.0; d];
                    s.grad_action(&action, &phi, &mut grad);
                    for i in 0..d {
                        angle[i] += eps * grad[i];
                    }
                }
            }
        }
        for i in 0..d {
            action[i] = anchor.action[i] + delta[i];
        }
        self.check_action(&action)?;
        if angle.iter().any(|a| !a.is_finite()) {
            return Err(invalid("non-finite angle produced by map step"));
        }
        Ok(())
    }

    /// Inverse step; `k` is the phase index of the point being inverted.
    pub(crate) fn step_inverse_relative(
        &self,
        anchor: &Anchor,
        delta: &mut [f64],
        angle: &mut [f64],
        k: usize,
    ) -> Result<()> {
        let d = self.dim();
        let eps = self.eps;
        let prev = if anchor.period == 0 { 0 } else { k % anchor.period + anchor.period - 1 };
        let action_bar: Vec<f64> = (0..d).map(|i| anchor.action[i] + delta[i]).collect();
        self.check_action(&action_bar)?;
        let mut freq = vec![0.0; d];
        let mut phi = vec![0.0; d];
        match &self.perturbation {
            Perturbation::Generating(s) => {
                // phi = phibar - omega(Ibar) - eps ds/dIbar(Ibar, phi), then I = Ibar + eps ds/dphi(Ibar, phi)
                self.integrable.frequency(&action_bar, &mut freq);
                let y0: Vec<f64> = (0..d).map(|i| angle[i] - (freq[i] - anchor.frequency[i])).collect();
                let rel = if eps != 0.0 {
                    let mut red = vec![0.0; d];
                    implicit_solve(
                        |y, out| {
                            anchor.true_angle(y, prev, &mut red);
                            s.grad_action(&action_bar, &red, out);
                            for o in out.iter_mut() {
                                *o *= -eps;
                            }
                        },
                        &y0,
                        0.5,
                        self.solver.tol,
                        self.solver.max_iter,
                    )?
                } else {
                    y0
                };
                angle.copy_from_slice(&rel);
                if eps != 0.0 {
                    anchor.true_angle(angle, prev, &mut phi);
                    let mut grad = vec![0.0; d];
                    s.grad_angle(&action_bar, &phi, &mut grad);
                    for i in 0..d {
                        delta[i] += eps * grad[i];
                    }
                }
            }
            Perturbation::Explicit(p) => {
                // Outer Picard on the action; inner solve for the angle at fixed action.
                let target_angle = angle.to_vec();
                let base = &anchor.action;
                let solve_angle = |dl: &[f64]| -> Result<Vec<f64>> {
                    let act: Vec<f64> = (0..d).map(|i| base[i] + dl[i]).collect();
                    let mut fr = vec![0.0; d];
                    self.integrable.frequency(&act, &mut fr);
                    let y0: Vec<f64> = (0..d).map(|i| target_angle[i] - (fr[i] - anchor.frequency[i])).collect();
                    if eps == 0.0 {
                        return Ok(y0);
                    }
                    let mut red = vec![0.0; d];
                    implicit_solve(
                        |y, out| {
                            anchor.true_angle(y, prev, &mut red);
                            p.angle_kick(&act, &red, out);
                            for o in out.iter_mut() {
                                *o *= -eps;
                            }
                        },
                        &y0,
                        0.5,
                        self.solver.tol,
                        self.solver.max_iter,
                    )
                };
                let new_delta = if eps == 0.0 {
                    delta.to_vec()
                } else {
                    let mut inner_err = None;
                    let mut act = vec![0.0; d];
                    let mut red = vec![0.0; d];
                    let res = implicit_solve(
                        |y, out| match solve_angle(y) {
                            Ok(a) => {
                                for i in 0..d {
                                    act[i] = base[i] + y[i];
                                }
                                anchor.true_angle(&a, prev, &mut red);
                                p.action_kick(&act, &red, out);
                                for o in out.iter_mut() {
                                    *o *= -eps;
                                }
                            }
                            Err(e) => {
                                inner_err.get_or_insert(e);
                                out.fill(f64::NAN);
                            }
                        },
                        delta,
                        self.domain.sigma,
                        self.solver.tol,
                        self.solver.max_iter,
                    );
                    if let Some(e) = inner_err {
                        return Err(e);
                    }
                    res?
                };
                let rel = solve_angle(&new_delta)?;
                delta.copy_from_slice(&new_delta);
                angle.copy_from_slice(&rel);
            }
        }
        let action: Vec<f64> = (0..d).map(|i| anchor.action[i] + delta[i]).collect();
        self.check_action(&action)?;
        Ok(())
    }
}

impl PhaseMap for MapModel {
    fn half_dim(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.step(&PhasePoint::from_flat(x)).map(|p| p.to_flat())
    }

    fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.step_inverse(&PhasePoint::from_flat(x)).map(|p| p.to_flat())
    }
}

/// Tolerance on `n omega*` being integral.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Builds the anchor for a resonant frequency, checking `n omega*` in `Z^d`.
pub(crate) fn resonant_anchor(omega_star: &[f64], n: usize) -> Result<Anchor> {
    if n == 0 {
        return Err(invalid("period n must be positive"));
    }
    let defect = omega_star
        .iter()
        .map(|w| {
            let t = n as f64 * w;
            (t - t.round()).abs()
        })
        .fold(0.0_f64, f64::max);
    if !(defect <= RESONANCE_TOL) {
        return Err(Error::NotResonant { defect });
    }
    Ok(Anchor { action: vec![0.0; omega_star.len()], frequency: omega_star.to_vec(), period: n })
}

/// Closure-backed integrable part for user maps.
pub struct FnIntegrable<E, W, H> {
    pub d: usize,
    pub energy: E,
    pub frequency: W,
    pub hessian: H,
}

impl<E, W, H> Integrable for FnIntegrable<E, W, H>
where
    E: Fn(&[f64]) -> f64 + Send + Sync,
    W: Fn(&[f64], &mut [f64]) + Send + Sync,
    H: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.d
    }
    fn energy(&self, action: &[f64]) -> f64 {
        (self.energy)(action)
    }
    fn frequency(&self, action: &[f64], out: &mut [f64]) {
        (self.frequency)(action, out)
    }
    fn hessian(&self, action: &[f64]) -> DMatrix<f64> {
        (self.hessian)(action)
    }
}

/// Closure-backed generating term for user maps.
pub struct FnGenerating<S, GA, GI> {
    pub value: S,
    pub grad_angle: GA,
    pub grad_action: GI,
}

impl<S, GA, GI> GeneratingTerm for FnGenerating<S, GA, GI>
where
    S: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
    GA: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync,
    GI: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn value(&self, action: &[f64], angle: &[f64]) -> f64 {
        (self.value)(action, angle)
    }
    fn grad_angle(&self, action: &[f64], angle: &[f64], out: &mut [f64]) {
        (self.grad_angle)(action, angle, out)
    }
    fn grad_action(&self, action: &[f64], angle: &[f64], out: &mut [f64]) {
        (self.grad_action)(action, angle, out)
    }
}

/// Closure-backed explicit kicks for user maps.
pub struct FnExplicit<A, B> {
    pub action_kick: A,
    pub angle_kick: B,
}

impl<A, B> ExplicitPerturbation for FnExplicit<A, B>
where
    A: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync,
    B: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn action_kick(&self, action: &[f64], angle: &[f64], out: &mut [f64]) {
        (self.action_kick)(action, angle, out)
    }
    fn angle_kick(&self, action: &[f64], angle: &[f64], out: &mut [f64]) {
        (self.angle_kick)(action, angle, out)
    }
}

/// A phase map given by a closure, optionally with its inverse.
pub struct FnPhaseMap<F> {
    d: usize,
    forward: F,
    inverse: Option<Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>>,
}

impl<F> FnPhaseMap<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    pub fn new(d: usize, forward: F) -> Self {
        Self { d, forward, inverse: None }
    }

    pub fn with_inverse(mut self, inverse: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.inverse = Some(Box::new(inverse));
        self
    }
}

impl<F> PhaseMap for FnPhaseMap<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    fn half_dim(&self) -> usize {
        self.d
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.forward)(x)
    }
    fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.inverse {
            Some(inv) => inv(x),
            None => Err(Error::NotInvertible),
        }
    }
}

/// Flattened orbit `x_0 .. x_m` of any phase map.
pub fn forward_orbit(map: &dyn PhaseMap, x0: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(x0.to_vec());
    for k in 0..m {
        let next = map.apply(&out[k]).map_err(|e| e.at_step(k))?;
        out.push(next);
    }
    Ok(out)
}

/// Flattened backward orbit `x_0, x_-1, .., x_-m`.
pub fn backward_orbit(map: &dyn PhaseMap, x0: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(x0.to_vec());
    for k in 0..m {
        let prev = map.apply_inverse(&out[k]).map_err(|e| e.at_step(k))?;
        out.push(prev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
