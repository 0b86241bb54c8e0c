//! Built-in maps with closed-form norms.
//!
//! All catalog maps use `h0 = |I|^2 / 2`, so `omega(I) = I`, `h0'' = Id`
//! and `nu = 1`. For the generating-form entries the equivalent explicit
//! kicks satisfy `b = a = -ds/dphi`, hence `||b|| = ||a||`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{DomainSpec, ExplicitPerturbation, GeneratingTerm, Integrable, MapModel, Perturbation};
use crate::error::{invalid, Result};

pub const CATALOG_NAMES: [&str; 4] = ["twist", "standard", "froeschle2", "nonexact"];

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// `h0 = |I|^2 / 2` in `d` dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub d: usize,
}

impl Integrable for Quadratic {
    fn dim(&self) -> usize {
        self.d
    }
    fn energy(&self, action: &[f64]) -> f64 {
        0.5 * action.iter().map(|x| x * x).sum::<f64>()
    }
    fn frequency(&self, action: &[f64], out: &mut [f64]) {
        out.copy_from_slice(action);
    }
    fn hessian(&self, _action: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.d, self.d)
    }
}

/// Constant explicit kicks `a = a0`, `b = b0`.
#[derive(Debug, Clone)]
pub struct ConstantKick {
    pub action_kick: Vec<f64>,
    pub angle_kick: Vec<f64>,
}

impl ExplicitPerturbation for ConstantKick {
    fn action_kick(&self, _action: &[f64], _angle: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.action_kick);
    }
    fn angle_kick(&self, _action: &[f64], _angle: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.angle_kick);
    }
}

/// `s = -cos(2 pi phi) / (4 pi^2)`
#[derive(Debug, Clone, Copy)]
pub struct StandardPotential;

impl GeneratingTerm for StandardPotential {
    fn value(&self, _action: &[f64], angle: &[f64]) -> f64 {
        -(TWO_PI * angle[0]).cos() / FOUR_PI_SQ
    }
    fn grad_angle(&self, _action: &[f64], angle: &[f64], out: &mut [f64]) {
        out[0] = (TWO_PI * angle[0]).sin() / TWO_PI;
    }
    fn grad_action(&self, _action: &[f64], _angle: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
}

/// `s = -[cos 2pi phi1 + cos 2pi phi2 + eta cos 2pi (phi1 + phi2)] / (4 pi^2)`
#[derive(Debug, Clone, Copy)]
pub struct FroeschlePotential {
    pub eta: f64,
}

impl GeneratingTerm for FroeschlePotential {
    fn value(&self, _action: &[f64], angle: &[f64]) -> f64 {
        let (x, y) = (TWO_PI * angle[0], TWO_PI * angle[1]);
        -(x.cos() + y.cos() + self.eta * (x + y).cos()) / FOUR_PI_SQ
    }
    fn grad_angle(&self, _action: &[f64], angle: &[f64], out: &mut [f64]) {
        let (x, y) = (TWO_PI * angle[0], TWO_PI * angle[1]);
        let mixed = self.eta * (x + y).sin();
        out[0] = (x.sin() + mixed) / TWO_PI;
        out[1] = (y.sin() + mixed) / TWO_PI;
    }
    fn grad_action(&self, _action: &[f64], _angle: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

fn quadratic_domain(d: usize, norm_ab: f64, norm_s: f64) -> DomainSpec {
    DomainSpec {
        center: vec![0.0; d],
        radius: 1.0,
        sigma: 1.0,
        r: 1.0,
        nu: 1.0,
        nu2: d as f64,
        norm_a: norm_ab,
        norm_b: norm_ab,
        norm_omega_prime: 1.0,
        norm_s,
        norm_h0pp: 1.0,
    }
}

/// Integrable twist `(I, phi) -> (I, phi + I)`; `eps` has no effect.
pub fn twist(eps: f64) -> Result<MapModel> {
    let kick = ConstantKick { action_kick: vec![0.0], angle_kick: vec![0.0] };
    MapModel::new(
        "twist",
        eps,
        Arc::new(Quadratic { d: 1 }),
        Perturbation::Explicit(Arc::new(kick)),
        quadratic_domain(1, 0.0, 0.0),
    )
}

/// Chirikov standard map in generating form.
pub fn standard(eps: f64) -> Result<MapModel> {
    MapModel::new(
        "standard",
        eps,
        Arc::new(Quadratic { d: 1 }),
        Perturbation::Generating(Arc::new(StandardPotential)),
        quadratic_domain(1, 1.0 / TWO_PI, 1.0 / FOUR_PI_SQ),
    )
}

/// Two coupled standard maps with coupling `eta`.
pub fn froeschle2(eps: f64, eta: f64) -> Result<MapModel> {
    if !eta.is_finite() {
        return Err(invalid("eta must be finite"));
    }
    MapModel::new(
        "froeschle2",
        eps,
        Arc::new(Quadratic { d: 2 }),
        Perturbation::Generating(Arc::new(FroeschlePotential { eta })),
        quadratic_domain(2, (1.0 + eta.abs()) / TWO_PI, (2.0 + eta.abs()) / FOUR_PI_SQ),
    )
}

/// `Ibar = I + eps`, `phibar = phi + I`: symplectic but not exact.
pub fn nonexact(eps: f64) -> Result<MapModel> {
    let kick = ConstantKick { action_kick: vec![1.0], angle_kick: vec![0.0] };
    MapModel::new(
        "nonexact",
        eps,
        Arc::new(Quadratic { d: 1 }),
        Perturbation::Explicit(Arc::new(kick)),
        quadratic_domain(1, 1.0, 0.0),
    )
}

/// Looks up a catalog map. `froeschle2` reads `eta` (default 0); `radius`
/// and `sigma` optionally override the action ball.
pub fn by_name(name: &str, params: &BTreeMap<String, f64>, eps: f64) -> Result<MapModel> {
    let allowed: &[&str] = match name {
        "froeschle2" => &["eta", "radius", "sigma"],
        "twist" | "standard" | "nonexact" => &["radius", "sigma"],
        other => return Err(invalid(format!("unknown catalog map '{other}'"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(invalid(format!("unknown parameter '{k}' for map '{name}'")));
    }
    let model = match name {
        "twist" => twist(eps)?,
        "standard" => standard(eps)?,
        "froeschle2" => froeschle2(eps, params.get("eta").copied().unwrap_or(0.0))?,
        _ => nonexact(eps)?,
    };
    let mut domain = model.domain().clone();
    if let Some(&r) = params.get("radius") {
        domain.radius = r;
    }
    if let Some(&s) = params.get("sigma") {
        domain.sigma = s;
    }
    model.with_domain(domain)
}
