use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fdcr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdcr"))
        .current_dir(dir)
        .args(args)
        .env_remove("FDCR_SIM_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fdcr(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Rows of a CSV as maps from column name to field.
fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("fdcr.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn default_run_writes_one_metrics_row() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["run", "--slots", "5000", "--out", "o"]);
    let rows = read_csv(&tmp.path().join("o/metrics.csv"));
    assert_eq!(rows.len(), 1);
    let c: f64 = rows[0]["C"].parse().unwrap();
    let r: f64 = rows[0]["rate"].parse().unwrap();
    assert!(c > 0.0 && c <= r);
    assert!(tmp.path().join("o/manifest.json").exists());
    assert!(!tmp.path().join("o/trace.csv").exists());
}

#[test]
fn trace_has_one_row_per_slot() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["--trace", "run", "--slots", "300", "--out", "o"],
    );
    assert_eq!(read_csv(&tmp.path().join("o/trace.csv")).len(), 300);
}

#[test]
fn single_point_grid_gives_one_row_per_curve() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sweep]\np_min_db = 20\np_max_db = 20\npoints = 1\nchi_sq = [0.01]\n",
    );
    ok(
        tmp.path(),
        &["--config", &cfg, "sweep", "--slots", "2000", "--out", "o"],
    );
    let rows = read_csv(&tmp.path().join("o/sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["local_opt"], "0");
}

#[test]
fn sweep_flags_one_optimum_per_rsi_limited_curve() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[sweep]\nchi_sq = [0.1, 0.01, 0.001, 0.0]\n");
    ok(
        tmp.path(),
        &["--config", &cfg, "sweep", "--slots", "3000", "--out", "o"],
    );
    let rows = read_csv(&tmp.path().join("o/sweep.csv"));
    for (curve, expected) in [
        ("chi_sq=0.1", 1),
        ("chi_sq=0.01", 1),
        ("chi_sq=0.001", 1),
        ("chi_sq=0", 0),
    ] {
        let flagged = rows
            .iter()
            .filter(|r| r["curve"] == curve && r["local_opt"] == "1")
            .count();
        assert_eq!(flagged, expected, "{curve}");
    }
}

#[test]
fn lone_su_never_collides_with_another_su() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[protocol]\nmode = \"dsa\"\nn_sus = 1\n");
    ok(
        tmp.path(),
        &["--config", &cfg, "dsa", "--slots", "5000", "--out", "o"],
    );
    let summary = read_csv(&tmp.path().join("o/dsa_summary.csv"));
    let row = summary
        .iter()
        .find(|r| r["metric"] == "su_su_collision_slots")
        .unwrap();
    assert_eq!(row["hd"], "0");
    assert_eq!(row["fd"], "0");
}

#[test]
fn full_duplex_shortens_contention_collisions() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["dsa", "--slots", "20000", "--out", "o"]);
    let summary = read_csv(&tmp.path().join("o/dsa_summary.csv"));
    let row = summary
        .iter()
        .find(|r| r["metric"] == "mean_collision_duration")
        .unwrap();
    let hd: f64 = row["hd"].parse().unwrap();
    let fd: f64 = row["fd"].parse().unwrap();
    assert!(fd < hd, "fd {fd} hd {hd}");
}

#[test]
fn compare_reports_the_best_tau() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[compare]\ntx_power_db = [10, 30]\n");
    ok(
        tmp.path(),
        &["--config", &cfg, "compare", "--slots", "5000", "--out", "o"],
    );
    let summary = read_csv(&tmp.path().join("o/compare.csv"));
    let taus = read_csv(&tmp.path().join("o/compare_tau.csv"));
    assert_eq!(summary.len(), 2);
    for row in &summary {
        let best = taus
            .iter()
            .filter(|t| t["tx_power"] == row["tx_power"])
            .max_by(|a, b| {
                let a: f64 = a["C_lbt"].parse().unwrap();
                let b: f64 = b["C_lbt"].parse().unwrap();
                a.total_cmp(&b)
            })
            .unwrap();
        assert_eq!(best["tau"], row["best_tau"]);
        assert_eq!(best["C_lbt"], row["C_lbt_best"]);
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "[radio]\nnoise_power = -1\n");
    assert_eq!(
        fdcr(tmp.path(), &["--config", &bad, "run"]).status.code(),
        Some(2)
    );
    let unknown = write_config(tmp.path(), "[radio]\nbogus = 1\n");
    assert_eq!(
        fdcr(tmp.path(), &["--config", &unknown, "run"])
            .status
            .code(),
        Some(2)
    );
    let both = write_config(tmp.path(), "[radio]\ntx_power = 10\ntx_power_db = 10\n");
    assert_eq!(
        fdcr(tmp.path(), &["--config", &both, "run"]).status.code(),
        Some(2)
    );
    assert_eq!(
        fdcr(tmp.path(), &["run", "--slots", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn environment_overrides_file_and_flags_override_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[sim]\nseed = 5\n");
    let run = |extra: &[&str], env: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fdcr"));
        cmd.current_dir(tmp.path())
            .args(["--config", &cfg, "run", "--slots", "500", "--out", out])
            .args(extra);
        if let Some(seed) = env {
            cmd.env("FDCR_SIM_SEED", seed);
        }
        assert!(cmd.output().unwrap().status.success());
        let m: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(tmp.path().join(out).join("manifest.json")).unwrap(),
        )
        .unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&[], None, "a"), 5);
    assert_eq!(run(&[], Some("6"), "b"), 6);
    assert_eq!(run(&["--seed", "7"], Some("6"), "c"), 7);
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["sweep", "--slots", "1000", "--out", "a"]);
    ok(
        tmp.path(),
        &["replay", "--manifest", "a/manifest.json", "--out", "b"],
    );
    for f in ["sweep.csv", "sweep_optima.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap()
        );
    }
    let path = tmp.path().join("a/manifest.json");
    let mut m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    m["outputs"][0]["sha256"] = serde_json::Value::String("0".repeat(64));
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let out = fdcr(
        tmp.path(),
        &["replay", "--manifest", "a/manifest.json", "--out", "c"],
    );
    assert_eq!(out.status.code(), Some(4));
}
