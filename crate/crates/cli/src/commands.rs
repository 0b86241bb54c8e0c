//! The experiment commands. Each writes its CSV tables into the output
//! directory and reports the files and the number of rows that failed.

use std::path::{Path, PathBuf};

use discavg_core::experiments::{
    calibrate_radius, energy_drift_ensemble, error_law_vs_eps, error_law_vs_order, random_seeds, resonant_pilot_seeds,
    stability_scan, LawReport, StabilityRecord,
};
use discavg_core::hamiltonian::{loop_action, recover_generating, EmbeddingSettings, PhaseBox};
use discavg_core::interpolation::{interpolating_vf, Scheme};
use discavg_core::nucleus::{resonant_fourier_check, trapped_ensemble, NucleusModel};
use discavg_core::resonance::{covering_params, dirichlet, locate_site, resonant_action};
use discavg_core::{MapModel, PhaseMap, PhasePoint};

use crate::config::{ExperimentConfig, OrderSpec};
use crate::output::{indexed, status, Cell, Table};
use crate::{numerical, Failure};

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Rows whose status column carries an error.
    pub failed_rows: usize,
    /// Extra `key = value` lines for the manifest.
    pub notes: Vec<(String, String)>,
}

fn header(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn floats(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|&x| Cell::Float(x)).collect()
}

fn empties(n: usize) -> Vec<Cell> {
    vec![Cell::Empty; n]
}

/// Region in working coordinates: `|J| <= radius` around 0 for a scaled
/// block, around the ball center for the catalog map.
fn region(cfg: &ExperimentConfig, model: &MapModel, radius: f64) -> PhaseBox {
    let center = if cfg.site.is_some() { vec![0.0; model.dim()] } else { model.domain().center.clone() };
    PhaseBox::action_ball(&center, radius)
}

pub fn interp(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, Failure> {
    let s = cfg.interp.as_ref().expect("validated");
    let models = cfg.models()?;
    let n = 2 * models[0].dim();
    let scheme: Scheme = s.scheme.into();
    let path = out.join("interp.csv");
    let mut t = Table::create(
        &path,
        &header(&[&names(&["eps", "point", "m"]), &indexed("x", n), &indexed("field", n), &names(&["status"])]),
    )?;
    let mut failed = 0;
    for model in &models {
        let map = cfg.working_map(model)?;
        for (pi, x) in s.points.iter().enumerate() {
            for &m in &s.orders {
                let r = interpolating_vf(map.as_ref(), x, m, scheme);
                let mut row = vec![model.eps().into(), pi.into(), m.into()];
                row.extend(floats(x));
                match &r {
                    Ok(v) => row.extend(floats(v)),
                    Err(_) => {
                        failed += 1;
                        row.extend(empties(n));
                    }
                }
                row.push(status(&r));
                t.row(row)?;
            }
        }
    }
    Ok(Outcome { files: vec![t.finish()?], failed_rows: failed, notes: Vec::new() })
}

/// Writes the points of an error-law sweep and its fit.
pub fn write_law(report: &LawReport, eps_of_point: &[f64], out: &Path, stem: &str) -> Result<Vec<PathBuf>, Failure> {
    let path = out.join(format!("{stem}.csv"));
    let mut t = Table::create(
        &path,
        &names(&[
            "eps",
            "eps_hat",
            "m",
            "max_error",
            "max_field",
            "bound",
            "delta",
            "admissible",
            "within_bound",
            "points",
            "failed_points",
            "floor",
            "floored",
            "ratio_to_previous",
        ]),
    )?;
    for (i, p) in report.points.iter().enumerate() {
        let r = &p.report;
        let ratio = if i == 0 { Cell::Empty } else { report.ratios[i - 1].into() };
        t.row(vec![
            eps_of_point[i].into(),
            r.eps_hat.into(),
            r.m.into(),
            r.max_error.into(),
            r.max_field.into(),
            r.bound.into(),
            r.delta.into(),
            r.admissible.into(),
            r.within_bound.into(),
            r.points.into(),
            r.failed_points.into(),
            p.floor.into(),
            p.floored.into(),
            ratio,
        ])?;
    }
    let fit_path = out.join(format!("{stem}_fit.csv"));
    let mut f = Table::create(&fit_path, &names(&["mode", "slope", "intercept", "r_squared", "used", "floored"]))?;
    let mode = match report.mode {
        discavg_core::experiments::LawMode::VsOrder => "vs_order",
        discavg_core::experiments::LawMode::VsEps => "vs_inverse_eps_hat",
    };
    let floored = report.points.iter().filter(|p| p.floored).count();
    match &report.fit {
        Some(fit) => f.row(vec![
            mode.into(),
            fit.slope.into(),
            fit.intercept.into(),
            fit.r_squared.into(),
            fit.used.into(),
            fit.floored.into(),
        ])?,
        None => f.row(vec![mode.into(), Cell::Empty, Cell::Empty, Cell::Empty, 0usize.into(), floored.into()])?,
    }
    Ok(vec![t.finish()?, f.finish()?])
}

pub fn embed_error(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, Failure> {
    let s = cfg.embed.as_ref().expect("validated");
    let models = cfg.models()?;
    let box_ = region(cfg, &models[0], s.radius);
    let delta = s.delta.unwrap_or_else(|| models[0].domain().default_delta());
    let settings = EmbeddingSettings { scheme: s.scheme.into(), delta, flow_tol: s.flow_tol };
    let (report, eps_of_point) = match &s.orders {
        OrderSpec::List(orders) => {
            let map = cfg.working_map(&models[0])?;
            let r = error_law_vs_order(map.as_ref(), orders, &box_, s.grid_n, settings).map_err(numerical)?;
            (r, vec![models[0].eps(); orders.len()])
        }
        OrderSpec::Named(_) => {
            let eps: Vec<f64> = models.iter().map(|m| m.eps()).collect();
            let family = |e: f64| -> discavg_core::Result<Box<dyn PhaseMap>> {
                let m = models.iter().find(|m| m.eps() == e).expect("eps from the grid");
                cfg.working_map(m).map_err(|f| discavg_core::Error::InvalidArgument(f.to_string()))
            };
            let r = error_law_vs_eps(family, &eps, &box_, s.grid_n, settings).map_err(numerical)?;
            (r, eps)
        }
    };
    let files = write_law(&report, &eps_of_point, out, "embed_error")?;
    let notes = vec![("delta".to_string(), delta.to_string())];
    Ok(Outcome { files, failed_rows: 0, notes })
}

pub fn energy(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, Failure> {
    let s = cfg.energy.as_ref().expect("validated");
    let models = cfg.models()?;
    let d = models[0].dim();
    let path = out.join("energy.csv");
    let mut rows = Table::create(&path, &names(&["eps", "m", "start", "k", "h", "increment"]))?;
    let sum_path = out.join("energy_summary.csv");
    let mut summary = Table::create(
        &sum_path,
        &header(&[&names(&["eps", "m", "start"]), &indexed("x", 2 * d), &names(&["max_increment", "telescoped", "direct_total"])]),
    )?;
    for model in &models {
        let map = cfg.working_map(model)?;
        let starts = match (&s.starts, s.grid_n, s.radius) {
            (Some(p), _, _) => p.clone(),
            (None, Some(n), Some(r)) => region(cfg, model, r).grid(n).map_err(numerical)?,
            _ => unreachable!("validated"),
        };
        for &m in &s.orders {
            let ens = energy_drift_ensemble(map.as_ref(), m, s.scheme.into(), &starts, s.blocks, s.quad_tol)
                .map_err(numerical)?;
            for (si, (rep, x0)) in ens.reports.iter().zip(&starts).enumerate() {
                for (k, h) in rep.values.iter().enumerate() {
                    let inc = if k == 0 { Cell::Empty } else { rep.increments[k - 1].into() };
                    rows.row(vec![model.eps().into(), m.into(), si.into(), k.into(), (*h).into(), inc])?;
                }
                let mut row = vec![model.eps().into(), m.into(), si.into()];
                row.extend(floats(x0));
                row.extend([rep.max_increment.into(), rep.telescoped.into(), rep.direct_total().into()]);
                summary.row(row)?;
            }
            let mut row = vec![model.eps().into(), m.into(), Cell::Empty];
            row.extend(empties(2 * d));
            row.extend([ens.max_increment.into(), Cell::Empty, Cell::Empty]);
            summary.row(row)?;
        }
    }
    Ok(Outcome { files: vec![rows.finish()?, summary.finish()?], failed_rows: 0, notes: Vec::new() })
}

pub fn resonance(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, Failure> {
    let s = cfg.resonance.as_ref().expect("validated");
    let models = cfg.models()?;
    let d = models[0].dim();
    let path = out.join("resonance.csv");
    let mut t = Table::create(
        &path,
        &header(&[
            &names(&["eps", "row", "n"]),
            &indexed("omega_star", d),
            &indexed("I_star", d),
            &names(&["rho_n", "dirichlet_error", "status"]),
        ]),
    )?;
    let mut failed = 0;
    for model in &models {
        let params = covering_params(model, model.eps(), s.gamma).map_err(numerical)?;
        let inputs = s.frequencies.as_ref().or(s.actions.as_ref()).expect("validated");
        for (i, input) in inputs.iter().enumerate() {
            let found = if s.frequencies.is_some() {
                dirichlet(input, s.big_n.expect("validated")).and_then(|a| {
                    let i_star = resonant_action(model, &a.omega_star, &a.omega_star)?;
                    Ok((a.n, a.omega_star, i_star, a.error))
                })
            } else {
                locate_site(model, input, &params).map(|(site, a)| (site.n, site.omega_star, site.i_star, a.error))
            };
            let mut row = vec![model.eps().into(), i.into()];
            match &found {
                Ok((n, w, i_star, err)) => {
                    row.push((*n).into());
                    row.extend(floats(w));
                    row.extend(floats(i_star));
                    row.extend([params.rho_n(*n).into(), (*err).into()]);
                }
                Err(_) => {
                    failed += 1;
                    row.extend(empties(3 + 2 * d));
                }
            }
            row.push(status(&found));
            t.row(row)?;
        }
    }
    Ok(Outcome { files: vec![t.finish()?], failed_rows: failed, notes: Vec::new() })
}

/// `[J, phi]` starts with `J` on `n` points of `[-r, r]` per axis scaled into
/// the ball `|J| <= r`, and `n` angles `k / n` per axis.
pub fn nucleus_start_grid(d: usize, n: usize, r: f64) -> Vec<Vec<f64>> {
    let shrink = r / (d as f64).sqrt();
    let total = n.pow(2 * d as u32);
    (0..total)
        .map(|idx| {
            let mut rest = idx;
            (0..2 * d)
                .map(|l| {
                    let k = rest % n;
                    rest /= n;
                    if l < d {
                        shrink * (2.0 * k as f64 / (n - 1) as f64 - 1.0)
                    } else {
                        k as f64 / n as f64
                    }
                })
                .collect()
        })
        .collect()
}

pub fn nucleus(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, Failure> {
    let s = cfg.nucleus.as_ref().expect("validated");
    let models = cfg.models()?;
    let d = models[0].dim();
    let orbit_path = out.join("nucleus.csv");
    let mut orbits = Table::create(
        &orbit_path,
        &header(&[&names(&["eps", "orbit", "k"]), &indexed("J", d), &names(&["E", "exited", "status"])]),
    )?;
    let sum_path = out.join("nucleus_summary.csv");
    let mut summary = Table::create(
        &sum_path,
        &header(&[
            &names(&["eps", "orbit"]),
            &indexed("x", 2 * d),
            &names(&["steps", "exit_index", "max_radius", "max_excursion", "max_step_drift", "max_drift", "status"]),
        ]),
    )?;
    let fourier_path = out.join("fourier.csv");
    let mut fourier = Table::create(
        &fourier_path,
        &header(&[&names(&["eps"]), &indexed("mode", d), &names(&["re", "im", "magnitude", "resonant", "status"])]),
    )?;
    let mut failed = 0;
    let mut notes = Vec::new();
    for model in &models {
        let site = cfg.site(model)?.expect("validated");
        let nm = NucleusModel::new(model, &site).map_err(|e| Failure::Validation(format!("nucleus: {e}")))?;
        let radii = nm.radii();
        notes.push((format!("radii[eps={:e}]", model.eps()), format!("r0_hat={} r1={} r_star={}", radii.r0_hat, radii.r1, radii.r_star)));
        let starts = match (&s.starts, s.start_grid) {
            (Some(p), _) => p.clone(),
            (None, Some(n)) => nucleus_start_grid(d, n, radii.r0_hat),
            _ => unreachable!("validated"),
        };
        let runs = trapped_ensemble(&nm, &starts, s.blocks, s.sample_every);
        for (oi, (run, x0)) in runs.iter().zip(&starts).enumerate() {
            let mut row = vec![model.eps().into(), oi.into()];
            row.extend(floats(x0));
            match run {
                Ok(r) => {
                    for sample in &r.samples {
                        let mut o = vec![model.eps().into(), oi.into(), sample.k.into()];
                        o.extend(floats(&sample.j));
                        o.extend([sample.energy.into(), sample.exited.into(), "ok".into()]);
                        orbits.row(o)?;
                    }
                    let rec = &r.record;
                    row.extend([
                        rec.steps.into(),
                        rec.exit_index.into(),
                        r.max_radius.into(),
                        rec.max_excursion.into(),
                        rec.max_step_drift.into(),
                        rec.max_drift.into(),
                    ]);
                }
                Err(e) => {
                    failed += 1;
                    let mut o = vec![model.eps().into(), oi.into(), Cell::Empty];
                    o.extend(empties(d + 2));
                    o.push(e.to_string().into());
                    orbits.row(o)?;
                    row.extend(empties(6));
                }
            }
            row.push(status(run));
            summary.row(row)?;
        }
        for j in &s.modes {
            let c = resonant_fourier_check(&nm, j, s.quad_n);
            let mut row = vec![model.eps().into()];
            row.extend(j.iter().map(|&a| Cell::Int(a)));
            match &c {
                Ok(c) => row.extend([c.re.into(), c.im.into(), c.magnitude.into(), c.resonant.into()]),
                Err(_) => {
                    failed += 1;
                    row.extend(empties(4));
                }
            }
            row.push(status(&c));
            fourier.row(row)?;
        }
    }
    Ok(Outcome { files: vec![orbits.finish()?, summary.finish()?, fourier.finish()?], failed_rows: failed, notes })
}

fn stability_header(d: usize) -> Vec<String> {
    header(&[
        &names(&["eps", "seed"]),
        &indexed("I", d),
        &indexed("phi", d),
        &names(&["max_excursion", "action_spread", "steps", "exit_index", "escaped", "status"]),
    ])
}

/// Appends one row per record; returns how many records failed.
pub fn write_stability_rows(t: &mut Table, eps: f64, records: &[StabilityRecord]) -> Result<usize, Failure> {
    let mut failed = 0;
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![eps.into(), i.into()];
        row.extend(floats(&r.initial));
        row.extend([r.max_excursion.into(), r.action_spread.into(), r.steps.into(), r.exit_index.into(), r.escaped().into()]);
        match &r.failure {
            Some(f) => {
                failed += 1;
                row.push(f.clone().into());
            }
            None => row.push("ok".into()),
        }
        t.row(row)?;
    }
    Ok(failed)
}

pub fn stability(cfg: &ExperimentConfig, out: &Path, cli_seed: Option<u64>) -> Result<Outcome, Failure> {
    let s = cfg.stability.as_ref().expect("validated");
    let models = cfg.models()?;
    let d = models[0].dim();
    let seed = cfg.seed(cli_seed)?;
    let seeds: Vec<PhasePoint> = random_seeds(d, s.lo, s.hi, s.seeds, seed);
    let path = out.join("stability.csv");
    let mut t = Table::create(&path, &stability_header(d))?;
    let mut pilot_table = None;
    let mut calibration = None;
    if s.pilot.is_some() {
        pilot_table = Some(Table::create(&out.join("pilot.csv"), &stability_header(d))?);
        calibration = Some(Table::create(
            &out.join("calibration.csv"),
            &names(&["eps", "c1", "exponent", "radius", "pilot_max_excursion"]),
        )?);
    }
    let mut failed = 0;
    let mut notes = vec![("seed".to_string(), seed.to_string())];
    for model in &models {
        let radius = match (&s.pilot, s.radius) {
            (Some(p), _) => {
                let pilot_seeds = resonant_pilot_seeds(model, s.lo, s.hi, p.seeds, p.gamma).map_err(numerical)?;
                let cal = calibrate_radius(model, &pilot_seeds, s.horizon).map_err(numerical)?;
                write_stability_rows(pilot_table.as_mut().expect("pilot table"), model.eps(), &cal.pilot)?;
                let worst = cal.pilot.iter().fold(0.0_f64, |a, r| a.max(r.max_excursion));
                calibration.as_mut().expect("calibration table").row(vec![
                    model.eps().into(),
                    cal.c1.into(),
                    cal.exponent.into(),
                    cal.radius.into(),
                    worst.into(),
                ])?;
                cal.radius
            }
            (None, Some(r)) => r,
            _ => unreachable!("validated"),
        };
        notes.push((format!("radius[eps={:e}]", model.eps()), radius.to_string()));
        let records = stability_scan(model, &seeds, s.horizon, radius);
        failed += write_stability_rows(&mut t, model.eps(), &records)?;
    }
    let mut files = vec![t.finish()?];
    if let Some(p) = pilot_table {
        files.push(p.finish()?);
    }
    if let Some(c) = calibration {
        files.push(c.finish()?);
    }
    Ok(Outcome { files, failed_rows: failed, notes })
}

/// `h0(pbar) + eps s(pbar, q)` for generating-form catalog maps.
pub fn catalog_generating(model: &MapModel, x: &[f64]) -> Option<f64> {
    let d = model.dim();
    let s = model.generating_value(&x[..d], &x[d..]).ok()?;
    Some(model.energy(&x[..d]) + model.eps() * s)
}

pub fn gen_recover(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, Failure> {
    let s = cfg.gen_recover.as_ref().expect("validated");
    let models = cfg.models()?;
    let d = models[0].dim();
    let path = out.join("gen_recover.csv");
    let mut t = Table::create(
        &path,
        &header(&[
            &names(&["eps", "query"]),
            &indexed("pbar", d),
            &indexed("q", d),
            &names(&["recovered", "catalog", "abs_diff", "status"]),
        ]),
    )?;
    let loop_path = out.join("loops.csv");
    let mut loops = Table::create(
        &loop_path,
        &header(&[&names(&["eps", "loop", "angle"]), &indexed("p", d), &names(&["action", "image_action", "difference", "status"])]),
    )?;
    let mut failed = 0;
    for model in &models {
        let map = cfg.working_map(model)?;
        // the catalog comparison only applies in the map's own coordinates
        let plain = cfg.site.is_none();
        let base_value = if plain { catalog_generating(model, &s.base) } else { None };
        for (qi, q) in s.queries.iter().enumerate() {
            let r = recover_generating(map.as_ref(), &s.base, q, s.quad_tol);
            let mut row = vec![model.eps().into(), qi.into()];
            row.extend(floats(q));
            let cat = match (plain, base_value) {
                (true, Some(b)) => catalog_generating(model, q).map(|v| v - b),
                _ => None,
            };
            match &r {
                Ok(v) => row.extend([(*v).into(), cat.into(), cat.map(|c| (v - c).abs()).into()]),
                Err(_) => {
                    failed += 1;
                    row.extend(empties(3));
                }
            }
            row.push(status(&r));
            t.row(row)?;
        }
        for (li, p) in s.loops.iter().enumerate() {
            for angle in 0..d {
                let p = p.clone();
                let gamma = move |t: f64| {
                    let mut x = p.clone();
                    x.extend((0..d).map(|l| if l == angle { t } else { 0.0 }));
                    x
                };
                let r = loop_action(map.as_ref(), gamma, s.quad_tol);
                let mut row = vec![model.eps().into(), li.into(), angle.into()];
                row.extend(floats(&s.loops[li]));
                match &r {
                    Ok((a, b)) => row.extend([(*a).into(), (*b).into(), (b - a).into()]),
                    Err(_) => {
                        failed += 1;
                        row.extend(empties(3));
                    }
                }
                row.push(status(&r));
                loops.row(row)?;
            }
        }
    }
    Ok(Outcome { files: vec![t.finish()?, loops.finish()?], failed_rows: failed, notes: Vec::new() })
}
