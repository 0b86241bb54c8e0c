//! Experiment configuration in TOML.
//!
//! Every table rejects unknown keys. A file may carry blocks for several
//! commands; each command reads its own block and fails validation when it
//! is missing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use discavg_core::interpolation::Scheme;
use discavg_core::resonance::{covering_params, resonant_action, BlockScaling, ResonanceSite, ScaledBlock};
use discavg_core::{catalog, MapModel, PhaseMap};

use crate::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// RNG seed for randomized seed selection; `--seed` overrides it.
    pub seed: Option<u64>,
    pub map: MapSection,
    pub site: Option<SiteSection>,
    pub output: Option<OutputSection>,
    pub interp: Option<InterpSection>,
    pub embed: Option<EmbedSection>,
    pub energy: Option<EnergySection>,
    pub resonance: Option<ResonanceSection>,
    pub nucleus: Option<NucleusSection>,
    pub stability: Option<StabilitySection>,
    pub gen_recover: Option<GenRecoverSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub name: String,
    pub eps: EpsSpec,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// A single value or a list of values swept in order.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(f64),
    Grid(Vec<f64>),
}

impl EpsSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsSpec::Value(v) => vec![*v],
            EpsSpec::Grid(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingName {
    Nucleus,
    Lochak,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSection {
    pub n: usize,
    pub omega_star: Vec<f64>,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingName,
    /// Covering parameter for the Lochak radius `rho_n`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_scaling() -> ScalingName {
    ScalingName::Nucleus
}

fn default_gamma() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Newton,
    Gauss,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Newton => Scheme::Newton,
            SchemeName::Gauss => Scheme::Gauss,
        }
    }
}

fn default_scheme() -> SchemeName {
    SchemeName::Newton
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpSection {
    pub orders: Vec<usize>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    pub points: Vec<Vec<f64>>,
}

/// Orders to sweep: an explicit list, or the optimal order per map.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    List(Vec<usize>),
    Named(OrderName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderName {
    Optimal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSection {
    pub orders: OrderSpec,
    pub grid_n: usize,
    /// Half-width of the action box in working coordinates.
    pub radius: f64,
    /// Defaults to the catalog `min(1, r) / 2`.
    pub delta: Option<f64>,
    #[serde(default = "default_flow_tol")]
    pub flow_tol: f64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
}

fn default_flow_tol() -> f64 {
    discavg_core::hamiltonian::DEFAULT_FLOW_TOL
}

fn default_quad_tol() -> f64 {
    discavg_core::numerics::DEFAULT_QUAD_TOL
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    pub orders: Vec<usize>,
    pub blocks: usize,
    /// Starts on a `grid_n^(2d)` grid of the box `|J| <= radius`.
    pub grid_n: Option<usize>,
    pub radius: Option<f64>,
    /// Explicit starts, used instead of the grid.
    pub starts: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    /// Frequencies to approximate with budget `big_n`.
    pub frequencies: Option<Vec<Vec<f64>>>,
    pub big_n: Option<f64>,
    /// Actions to cover, using `N = N_eps`.
    pub actions: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusSection {
    pub blocks: usize,
    #[serde(default)]
    pub sample_every: usize,
    /// Explicit `[J, phi]` starts.
    pub starts: Option<Vec<Vec<f64>>>,
    /// Actions on `start_grid` points of `[-r0_hat, r0_hat]` per axis,
    /// scaled into the ball, times `start_grid` angles per axis.
    pub start_grid: Option<usize>,
    #[serde(default)]
    pub modes: Vec<Vec<i64>>,
    #[serde(default = "default_quad_n")]
    pub quad_n: usize,
}

fn default_quad_n() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub horizon: usize,
    pub seeds: usize,
    /// Seed actions are uniform in `[lo, hi]^d`.
    pub lo: f64,
    pub hi: f64,
    /// Fixed confinement radius. Without it the radius comes from a pilot.
    pub radius: Option<f64>,
    pub pilot: Option<PilotSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSection {
    pub seeds: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenRecoverSection {
    /// `[pbar, q]` where the recovered function is zero.
    pub base: Vec<f64>,
    pub queries: Vec<Vec<f64>>,
    /// Actions of the loops `t -> (p, t e_l)` used for the loop-action check.
    #[serde(default)]
    pub loops: Vec<Vec<f64>>,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
}

fn validation(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(validation(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_points(name: &str, points: &[Vec<f64>], len: usize) -> Result<(), Failure> {
    if points.is_empty() {
        return Err(validation(format!("{name} must not be empty")));
    }
    if let Some(p) = points.iter().find(|p| p.len() != len || p.iter().any(|x| !x.is_finite())) {
        return Err(validation(format!("{name}: point {p:?} must have {len} finite entries")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, String), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
        Ok((Self::from_toml(&text)?, text))
    }

    /// Catalog model for every `eps` in the sweep.
    pub fn models(&self) -> Result<Vec<MapModel>, Failure> {
        let eps = self.map.eps.values();
        if eps.is_empty() {
            return Err(validation("map.eps grid must not be empty"));
        }
        eps.iter()
            .map(|&e| catalog::by_name(&self.map.name, &self.map.params, e).map_err(|err| validation(err.to_string())))
            .collect()
    }

    pub fn seed(&self, cli_seed: Option<u64>) -> Result<u64, Failure> {
        cli_seed.or(self.seed).ok_or_else(|| validation("a seed is required for randomized selection (config `seed` or --seed)"))
    }

    /// The resonance site of `[site]`, with `I*` solved on `model`.
    pub fn site(&self, model: &MapModel) -> Result<Option<ResonanceSite>, Failure> {
        let Some(s) = &self.site else { return Ok(None) };
        if s.omega_star.len() != model.dim() {
            return Err(validation("site.omega_star length must match the map dimension"));
        }
        positive("site.gamma", s.gamma)?;
        let i_star = resonant_action(model, &s.omega_star, &s.omega_star).map_err(|e| validation(format!("site: {e}")))?;
        let rho_n = if model.eps() > 0.0 {
            covering_params(model, model.eps(), s.gamma).map_err(|e| validation(e.to_string()))?.rho_n(s.n.max(1))
        } else {
            s.gamma / s.n.max(1) as f64
        };
        let site = ResonanceSite { n: s.n, omega_star: s.omega_star.clone(), i_star, rho_n };
        site.validate(model).map_err(|e| validation(format!("site: {e}")))?;
        Ok(Some(site))
    }

    /// The map the command works on: the scaled block at `[site]`, or the
    /// catalog map itself.
    pub fn working_map(&self, model: &MapModel) -> Result<Box<dyn PhaseMap>, Failure> {
        match self.site(model)? {
            None => Ok(Box::new(model.clone())),
            Some(site) => {
                let scaling = match self.site.as_ref().map(|s| s.scaling) {
                    Some(ScalingName::Lochak) => BlockScaling::Lochak,
                    _ => BlockScaling::Nucleus,
                };
                let block = ScaledBlock::new(model, &site, scaling).map_err(|e| validation(format!("site: {e}")))?;
                Ok(Box::new(block))
            }
        }
    }

    /// Checks the block a command needs; runs before any output is created.
    pub fn validate_for(&self, command: crate::Command) -> Result<(), Failure> {
        use crate::Command;
        let models = self.models()?;
        let d = models[0].dim();
        for m in &models {
            self.working_map(m)?;
        }
        let missing = |block: &str| validation(format!("config has no [{block}] block"));
        match command {
            Command::Interp => {
                let s = self.interp.as_ref().ok_or_else(|| missing("interp"))?;
                if s.orders.is_empty() {
                    return Err(validation("interp.orders must not be empty"));
                }
                check_points("interp.points", &s.points, 2 * d)?;
            }
            Command::EmbedError => {
                let s = self.embed.as_ref().ok_or_else(|| missing("embed"))?;
                if s.grid_n < 2 {
                    return Err(validation("embed.grid_n must be at least 2"));
                }
                positive("embed.radius", s.radius)?;
                positive("embed.flow_tol", s.flow_tol)?;
                if let Some(delta) = s.delta {
                    positive("embed.delta", delta)?;
                }
                if let OrderSpec::List(l) = &s.orders {
                    if l.is_empty() || models.len() > 1 && l.len() > 1 {
                        return Err(validation("embed.orders: give orders for one eps, or \"optimal\" for an eps grid"));
                    }
                }
            }
            Command::Energy => {
                let s = self.energy.as_ref().ok_or_else(|| missing("energy"))?;
                positive("energy.quad_tol", s.quad_tol)?;
                if s.orders.is_empty() || s.blocks == 0 {
                    return Err(validation("energy needs orders and blocks >= 1"));
                }
                match (&s.starts, s.grid_n, s.radius) {
                    (Some(p), None, None) => check_points("energy.starts", p, 2 * d)?,
                    (None, Some(n), Some(r)) if n >= 2 => positive("energy.radius", r)?,
                    _ => return Err(validation("energy needs either starts, or grid_n >= 2 with radius")),
                }
            }
            Command::Resonance => {
                let s = self.resonance.as_ref().ok_or_else(|| missing("resonance"))?;
                positive("resonance.gamma", s.gamma)?;
                match (&s.frequencies, s.big_n, &s.actions) {
                    (Some(w), Some(n), None) => {
                        check_points("resonance.frequencies", w, d)?;
                        positive("resonance.big_n", n)?;
                    }
                    (None, None, Some(a)) => check_points("resonance.actions", a, d)?,
                    _ => return Err(validation("resonance needs frequencies with big_n, or actions")),
                }
                if models.iter().any(|m| !(m.eps() > 0.0)) {
                    return Err(validation("resonance needs eps > 0 for rho_n"));
                }
            }
            Command::Nucleus => {
                let s = self.nucleus.as_ref().ok_or_else(|| missing("nucleus"))?;
                if self.site.is_none() {
                    return Err(missing("site"));
                }
                match (&s.starts, s.start_grid) {
                    (Some(p), None) => check_points("nucleus.starts", p, 2 * d)?,
                    (None, Some(n)) if n >= 2 => {}
                    _ => return Err(validation("nucleus needs either starts or start_grid >= 2")),
                }
                if s.modes.iter().any(|j| j.len() != d) {
                    return Err(validation("nucleus.modes entries must have d components"));
                }
                if s.quad_n < 2 {
                    return Err(validation("nucleus.quad_n must be at least 2"));
                }
                if models.iter().any(|m| !(m.eps() > 0.0)) {
                    return Err(validation("nucleus needs eps > 0"));
                }
            }
            Command::Stability => {
                let s = self.stability.as_ref().ok_or_else(|| missing("stability"))?;
                if self.site.is_some() {
                    return Err(validation("stability iterates the catalog map; remove [site]"));
                }
                if s.seeds == 0 || s.horizon == 0 {
                    return Err(validation("stability needs seeds >= 1 and horizon >= 1"));
                }
                if !(s.hi > s.lo) {
                    return Err(validation("stability needs lo < hi"));
                }
                match (s.radius, &s.pilot) {
                    (Some(r), None) => positive("stability.radius", r)?,
                    (None, Some(p)) => {
                        positive("stability.pilot.gamma", p.gamma)?;
                        if p.seeds == 0 {
                            return Err(validation("stability.pilot.seeds must be at least 1"));
                        }
                    }
                    _ => return Err(validation("stability needs exactly one of radius or [stability.pilot]")),
                }
            }
            Command::GenRecover => {
                let s = self.gen_recover.as_ref().ok_or_else(|| missing("gen_recover"))?;
                positive("gen_recover.quad_tol", s.quad_tol)?;
                check_points("gen_recover.base", std::slice::from_ref(&s.base), 2 * d)?;
                check_points("gen_recover.queries", &s.queries, 2 * d)?;
                if !s.loops.is_empty() {
                    check_points("gen_recover.loops", &s.loops, d)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "seed = 3\n[map]\nname = \"standard\"\neps = 1e-4\n";

    #[test]
    fn parses_scalar_and_grid_eps() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.map.eps.values(), vec![1e-4]);
        let c = ExperimentConfig::from_toml("[map]\nname = \"twist\"\neps = [0.1, 0.2]\n").unwrap();
        assert_eq!(c.map.eps.values(), vec![0.1, 0.2]);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_eps() {
        assert!(ExperimentConfig::from_toml(&format!("{BASE}colour = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml("[map]\nname = \"standard\"\n").is_err());
        let bad = format!("{BASE}[stability]\nhorizon = 10\nseeds = 2\nlo = 0.0\nhi = 1.0\nradius = 1.0\nextra = 2\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn orders_accept_list_or_optimal() {
        let c = ExperimentConfig::from_toml(&format!("{BASE}[embed]\norders = \"optimal\"\ngrid_n = 3\nradius = 1.0\n")).unwrap();
        assert_eq!(c.embed.unwrap().orders, OrderSpec::Named(OrderName::Optimal));
        let c = ExperimentConfig::from_toml(&format!("{BASE}[embed]\norders = [1, 2]\ngrid_n = 3\nradius = 1.0\n")).unwrap();
        assert_eq!(c.embed.unwrap().orders, OrderSpec::List(vec![1, 2]));
    }

    #[test]
    fn validation_requires_the_command_block() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert!(matches!(c.validate_for(crate::Command::Stability), Err(Failure::Validation(_))));
    }

    #[test]
    fn site_solves_resonant_action() {
        let text = format!("{BASE}[site]\nn = 2\nomega_star = [0.5]\n");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let m = &c.models().unwrap()[0];
        let site = c.site(m).unwrap().unwrap();
        assert!((site.i_star[0] - 0.5).abs() < 1e-12);
        assert!((site.rho_n - 2.0 * 1e-4f64.powf(0.25) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn seed_resolution() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.seed(None).unwrap(), 3);
        assert_eq!(c.seed(Some(9)).unwrap(), 9);
        let c = ExperimentConfig::from_toml("[map]\nname = \"standard\"\neps = 0.0\n").unwrap();
        assert!(c.seed(None).is_err());
    }
}
