//! Configuration-driven experiment runner.
//!
//! Each command reads one TOML config, writes CSV tables and a
//! `run_manifest.txt` into the output directory, and maps its outcome to an
//! exit code: 0 on success, 2 when the config does not validate (nothing is
//! written), 3 on a numerical failure or when any row carries an error
//! (outputs written so far are kept). `verify` runs one acceptance criterion
//! and exits 1 when it is not met.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use config::ExperimentConfig;
use output::Manifest;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Failure {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
        }
    }
}

pub(crate) fn numerical(e: discavg_core::Error) -> Failure {
    Failure::Numerical(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Interp,
    EmbedError,
    Energy,
    Resonance,
    Nucleus,
    Stability,
    GenRecover,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Interp => "interp",
            Command::EmbedError => "embed-error",
            Command::Energy => "energy",
            Command::Resonance => "resonance",
            Command::Nucleus => "nucleus",
            Command::Stability => "stability",
            Command::GenRecover => "gen-recover",
        }
    }
}

/// Flags shared by the experiment commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
}

/// Runs `command` and returns the process exit code, reporting to stderr.
pub fn run(command: Command, opts: &RunOptions) -> i32 {
    match run_inner(command, opts) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("discavg {}: {f}", command.name());
            f.exit_code()
        }
    }
}

fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PathBuf, Failure> {
    opts.out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()))
        .ok_or_else(|| Failure::Validation("no output directory (config [output] dir or --out)".into()))
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

fn run_inner(command: Command, opts: &RunOptions) -> Result<i32, Failure> {
    let (cfg, text) = ExperimentConfig::load(&opts.config)?;
    cfg.validate_for(command)?;
    if command == Command::Stability {
        cfg.seed(opts.seed)?;
    }
    let out = output_dir(&cfg, opts)?;
    create_dir(&out)?;
    let start = Instant::now();
    let result = match command {
        Command::Interp => commands::interp(&cfg, &out),
        Command::EmbedError => commands::embed_error(&cfg, &out),
        Command::Energy => commands::energy(&cfg, &out),
        Command::Resonance => commands::resonance(&cfg, &out),
        Command::Nucleus => commands::nucleus(&cfg, &out),
        Command::Stability => commands::stability(&cfg, &out, opts.seed),
        Command::GenRecover => commands::gen_recover(&cfg, &out),
    };
    let mut manifest = Manifest::new();
    manifest.set("command", command.name());
    manifest.set("version", env!("CARGO_PKG_VERSION"));
    manifest.set("config", opts.config.display());
    manifest.set("workers", opts.workers);
    for model in cfg.models()? {
        let dom = model.domain();
        manifest.set(
            &format!("norms[eps={:e}]", model.eps()),
            format!(
                "nu={} nu2={} norm_a={} norm_b={} norm_s={} norm_omega_prime={} norm_h0pp={} radius={} sigma={} r={}",
                dom.nu,
                dom.nu2,
                dom.norm_a,
                dom.norm_b,
                dom.norm_s,
                dom.norm_omega_prime,
                dom.norm_h0pp,
                dom.radius,
                dom.sigma,
                dom.r
            ),
        );
    }
    let code = match &result {
        Ok(o) => {
            for (k, v) in &o.notes {
                manifest.set(k, v);
            }
            for f in &o.files {
                manifest.set("output", f.display());
            }
            manifest.set("failed_rows", o.failed_rows);
            if o.failed_rows > 0 {
                eprintln!("discavg {}: {} rows failed, see the status column", command.name(), o.failed_rows);
                3
            } else {
                0
            }
        }
        Err(f) => {
            manifest.set("failure", f);
            f.exit_code()
        }
    };
    manifest.set("exit_code", code);
    manifest.set("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    manifest.config_text = Some(text);
    manifest.write(&out)?;
    if let Err(f) = result {
        eprintln!("discavg {}: {f}", command.name());
    }
    Ok(code)
}

/// Runs acceptance criterion `id`, writing its tables into `out`.
/// Exit 0 when every check passes, 1 when one fails.
pub fn verify(id: u32, out: &Path, workers: usize) -> i32 {
    let run = || -> Result<i32, Failure> {
        create_dir(out)?;
        let start = Instant::now();
        let report = criteria::run(id, out)?;
        let elapsed = start.elapsed().as_secs_f64();
        let path = report.write(out)?;
        let mut manifest = Manifest::new();
        manifest.set("command", "verify");
        manifest.set("criterion", id);
        manifest.set("version", env!("CARGO_PKG_VERSION"));
        manifest.set("workers", workers);
        manifest.set("output", path.display());
        for f in &report.files {
            manifest.set("output", f.display());
        }
        for n in &report.notes {
            manifest.set("note", n);
        }
        let in_budget = elapsed <= report.budget_s;
        manifest.set("budget_s", report.budget_s);
        manifest.set("wall_time_s", format!("{elapsed:.3}"));
        manifest.set("within_budget", in_budget);
        manifest.write(out)?;
        for c in &report.checks {
            println!(
                "criterion {id:2} {} {}: measured {:e} {} {:e}",
                if c.pass() { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.relation.symbol(),
                c.limit
            );
        }
        for n in &report.notes {
            println!("criterion {id:2} note {n}");
        }
        let pass = report.passed() && in_budget;
        println!(
            "criterion {id:2} {} {} ({elapsed:.1} s of {} s)",
            if pass { "PASS" } else { "FAIL" },
            report.title,
            report.budget_s
        );
        Ok(if pass { 0 } else { 1 })
    };
    match run() {
        Ok(code) => code,
        Err(f) => {
            eprintln!("discavg verify: {f}");
            f.exit_code()
        }
    }
}
