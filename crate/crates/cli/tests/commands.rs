use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn discavg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_discavg"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> i32 {
    let status = discavg().args(args).output().expect("spawn discavg").status;
    status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Rows of a CSV file as string fields, header first.
fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

#[test]
fn stability_on_unperturbed_twist() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("stability_twist.toml");
    assert_eq!(run(&["stability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let rows = read_csv(&out.join("stability.csv"));
    assert_eq!(rows.len(), 21);
    assert!(column(&rows, "max_excursion").iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    assert!(column(&rows, "escaped").iter().all(|v| v == "0"));
    let manifest = fs::read_to_string(out.join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("norms[eps=0e0]") && manifest.contains("wall_time_s") && manifest.contains("[config]"));
}

#[test]
fn resonance_of_golden_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("resonance_golden.toml");
    assert_eq!(run(&["resonance", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]), 0);
    let rows = read_csv(&dir.path().join("resonance.csv"));
    assert_eq!(column(&rows, "n"), vec!["3"]);
    let w: f64 = column(&rows, "omega_star0")[0].parse().unwrap();
    assert!((w - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn missing_eps_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n[map]\nname = \"twist\"\n[stability]\nhorizon = 10\nseeds = 2\nlo = 0.0\nhi = 1.0\nradius = 1.0\n");
    let out = dir.path().join("out");
    assert_eq!(run(&["stability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert!(!out.exists());
}

#[test]
fn unknown_keys_and_missing_seed_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let base = "[map]\nname = \"twist\"\neps = 0.0\n[stability]\nhorizon = 10\nseeds = 2\nlo = 0.0\nhi = 1.0\nradius = 1.0\n";
    let cfg = write_config(dir.path(), &format!("{base}colour = 3\n"));
    assert_eq!(run(&["stability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    let cfg = write_config(dir.path(), base);
    assert_eq!(run(&["stability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert!(!out.exists());
    assert_eq!(run(&["stability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]), 0);
}

#[test]
fn row_errors_exit_3_and_keep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[map]\nname = \"standard\"\neps = 0.05\n[interp]\norders = [1, 2]\nscheme = \"gauss\"\npoints = [[0.2, 0.37]]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["interp", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 3);
    let rows = read_csv(&out.join("interp.csv"));
    let status = column(&rows, "status");
    assert!(status[0].contains("even order"));
    assert_eq!(status[1], "ok");
    assert!(out.join("run_manifest.txt").exists());
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("nucleus.toml");
    let mut bodies = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(workers);
        let code = run(&["nucleus", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(code, 0);
        let files = ["nucleus.csv", "nucleus_summary.csv", "fourier.csv"];
        bodies.push(files.map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn example_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    let quick = [
        ("interp.toml", "interp"),
        ("interp_newton.toml", "interp"),
        ("embed_orders.toml", "embed-error"),
        ("energy.toml", "energy"),
        ("resonance_cover.toml", "resonance"),
        ("nucleus_froeschle.toml", "nucleus"),
        ("gen_recover.toml", "gen-recover"),
    ];
    for (file, command) in quick {
        let out = dir.path().join(file);
        let cfg = configs().join(file);
        assert_eq!(run(&[command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0, "{file}");
    }
    let rows = read_csv(&dir.path().join("gen_recover.toml").join("gen_recover.csv"));
    assert!(column(&rows, "abs_diff").iter().all(|v| v.parse::<f64>().unwrap() <= 1e-8));
}

#[test]
fn verify_rejects_unknown_criterion() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--criterion", "99", "--out", dir.path().to_str().unwrap()]), 2);
}
