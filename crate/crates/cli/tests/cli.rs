use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke-effdim"))
        .args(args)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .env("DICKE_CACHE_DIR", dir.join("cache"))
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn effdim_matches_the_reference_value() {
    let dir = TempDir::new().unwrap();
    let s = summary(&run(dir.path(), &["effdim", "--epsilon=-0.5", "--draws", "1e6", "--seed", "5"]));
    let value = s["value"].as_f64().unwrap();
    assert!((value / 4201.0 - 1.0).abs() < 0.02, "{value}");
    assert!(s["stderr"].as_f64().unwrap() > 0.0);
    let nu = s["nu"].as_f64().unwrap();
    let sigma = s["sigma_bar"].as_f64().unwrap();
    assert!((value - (2.0 * std::f64::consts::PI).sqrt() * nu * sigma).abs() < 1e-6 * value);

    let meta = read_json(&dir.path().join("out/effdim.json"));
    assert_eq!(meta["arguments"]["seed"], 5);
    assert_eq!(meta["arguments"]["draws"], 1_000_000);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["git_describe"].is_string());
}

#[test]
fn shell_writes_every_point_and_both_means() {
    let dir = TempDir::new().unwrap();
    let s = summary(&run(dir.path(), &["shell", "--epsilon", "-0.5", "--j", "100"]));
    let harmonic = s["sigma_harmonic"]["value"].as_f64().unwrap();
    let arithmetic = s["sigma_arithmetic"]["value"].as_f64().unwrap();
    assert!((harmonic - 0.1389).abs() < 0.002, "{harmonic}");
    assert!((arithmetic - 0.1563).abs() < 0.002, "{arithmetic}");
    let csv = std::fs::read_to_string(dir.path().join("out/shell.csv")).unwrap();
    assert_eq!(csv.lines().count(), s["n_points"].as_u64().unwrap() as usize + 1);
    assert_eq!(csv.lines().next(), Some("q,p,Q,P,w"));
}

#[test]
fn same_seed_gives_identical_tables() {
    let (a, b, other) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["pr-sweep", "--j", "6", "--draws", "2000", "--states", "5", "--widths", "0.3,0.8"];
    for dir in [&a, &b] {
        summary(&run(dir.path(), &args));
    }
    summary(&run(other.path(), &[&args[..], &["--seed", "2"]].concat()));
    let read = |d: &TempDir| std::fs::read(d.path().join("out/pr_sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&other));
    // the second run reads the spectrum from the cache
    assert!(std::fs::read_dir(a.path().join("cache")).unwrap().count() > 0);
}

#[test]
fn worker_count_does_not_change_results() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["sigma-map", "--epsilon=-0.6", "--draws", "30000"];
    summary(&run(a.path(), &[&args[..], &["--workers", "1"]].concat()));
    summary(&run(b.path(), &[&args[..], &["--workers", "3"]].concat()));
    let read = |d: &TempDir| std::fs::read(d.path().join("out/sigma_map.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn user_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["effdim", "--bogus"][..],
        &["effdim"],
        &["effdim", "--epsilon", "-0.5", "--draws", "1.5"],
        &["effdim", "--epsilon", "-3"],
        &["effdim", "--epsilon", "-0.5", "--workers", "0"],
        &["shell", "--epsilon", "-0.5", "--method", "grid"],
        &["dimensionality", "--states", "0", "--sigmas", "0.1,-1"],
        &["profile", "--level", "3", "--epsilon", "-0.5"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn unconverged_spectrum_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["spectrum", "--j", "4", "--n-max", "6", "--eps-max", "0.6"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# shell settings\nepsilon = -0.5\ndraws = 1e4\nseed = 3\n").unwrap();
    let conf = conf.to_str().unwrap();
    let from_file = summary(&run(dir.path(), &["effdim", "--config", conf]));
    let explicit = summary(&run(dir.path(), &["effdim", "--epsilon=-0.5", "--draws", "10000", "--seed", "3"]));
    assert_eq!(from_file, explicit);
    let overridden = summary(&run(dir.path(), &["effdim", "--config", conf, "--seed", "4"]));
    assert_ne!(overridden["value"], explicit["value"]);

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "flavour = strange\n").unwrap();
    assert_eq!(run(dir.path(), &["effdim", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["effdim", "--config", "/nonexistent.conf"]).status.code(), Some(1));
}

#[test]
fn quantum_commands_run_on_a_small_system() {
    let dir = TempDir::new().unwrap();
    let spec = summary(&run(dir.path(), &["spectrum", "--j", "6"]));
    assert!(spec["converged_max_energy"].as_f64().unwrap() >= 0.6);
    let csv = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), spec["n_levels"].as_u64().unwrap() as usize + 1);

    let prof = summary(&run(
        dir.path(),
        &["profile", "--j", "6", "--epsilon=-0.5", "--points", "15", "--draws", "2000"],
    ));
    assert_eq!(prof["peaks_at_eigenenergy"], true);

    let dims = summary(&run(
        dir.path(),
        &["dimensionality", "--j", "6", "--states", "5", "--draws", "2000", "--sigmas", "0.01,0.1"],
    ));
    assert_eq!(dims["empirical"], true);
    let table = std::fs::read_to_string(dir.path().join("out/dimensionality.csv")).unwrap();
    for line in table.lines().skip(1) {
        assert!(line.split(',').all(|f| f.parse::<f64>().is_ok()), "{line}");
    }

    let eig = summary(&run(dir.path(), &["eigdim", "--j", "6", "--draws", "1000", "--stride", "4"]));
    assert!(eig["n_states"].as_u64().unwrap() > 0);
}

#[test]
fn sigma_histogram_is_a_density() {
    let dir = TempDir::new().unwrap();
    summary(&run(dir.path(), &["sigma-map", "--epsilon=-0.5", "--draws", "5000", "--bins", "20"]));
    let hist = std::fs::read_to_string(dir.path().join("out/sigma_hist.csv")).unwrap();
    let total: f64 = hist
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1] - f[0]) * f[2]
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}
