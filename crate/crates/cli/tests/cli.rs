use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bvpm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvpm")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn run_dir(out: &Path, sub: &str) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(&format!("{sub}-")))
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

/// Data rows of a run CSV, keyed by header.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="), "{}", path.display());
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\nstdout {}\nstderr {}", o.status, String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_potential_solve_reproduces_the_poisson_extension() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bvpm(tmp.path(), &["--grid", "64x64", "solve", "--set", r#"potential={"kind":"bounded","c":0}"#]);
    ok(&o);
    let (h, rows) = table(&run_dir(tmp.path(), "solve").join("field.csv"));
    let (u, k, d) = (col(&h, "u"), col(&h, "poisson"), col(&h, "delta"));
    let mut worst = 0.0f64;
    for r in rows.iter().filter(|r| r[d].parse::<f64>().unwrap() >= 0.05) {
        worst = worst.max((r[u].parse::<f64>().unwrap() - r[k].parse::<f64>().unwrap()).abs());
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn hardy_solve_has_decreasing_centre_values() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&bvpm(tmp.path(), &["--grid", "64x64", "solve", "--set", r#"potential={"kind":"distance_power","c":2,"alpha":2}"#]));
    let (h, rows) = table(&run_dir(tmp.path(), "solve").join("u_k_x0.csv"));
    let u: Vec<f64> = rows.iter().map(|r| r[col(&h, "u_k_x0")].parse().unwrap()).collect();
    assert!(u.windows(2).all(|w| w[1] < w[0]), "{u:?}");
    assert_eq!(rows.last().unwrap()[0], "inf");
}

#[test]
fn config_errors_exit_with_code_2_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bvpm(tmp.path(), &["solve", "--set", "solver.tol=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver.tol"));
    let o = bvpm(tmp.path(), &["solve", "--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"potential": {"kind": "distance_power", "c": 1}}"#).unwrap();
    let o = bvpm(tmp.path(), &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("potential"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn identical_configs_give_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--grid", "48x64", "capacity", "--set", "capacity.random_arcs=5"];
    ok(&bvpm(a.path(), &args));
    ok(&bvpm(b.path(), &args));
    let (da, db) = (run_dir(a.path(), "capacity"), run_dir(b.path(), "capacity"));
    assert_eq!(da.file_name(), db.file_name());
    let ma: Value = serde_json::from_slice(&fs::read(da.join("manifest.json")).unwrap()).unwrap();
    let mb: Value = serde_json::from_slice(&fs::read(db.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["files"], mb["files"]);
    for f in ma["files"].as_array().unwrap() {
        let name = f["name"].as_str().unwrap();
        assert_eq!(fs::read(da.join(name)).unwrap(), fs::read(db.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn manifest_indexes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&bvpm(tmp.path(), &["--grid", "48x64", "capacity", "--set", r#"capacity.arcs=["0:1", [2, 2.5]]"#]));
    let d = run_dir(tmp.path(), "capacity");
    let m: Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
    let names: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    for want in ["config.json", "capacity.csv", "duality_gap.csv", "witness_measure.csv", "summary.json"] {
        assert!(names.contains(&want), "{names:?}");
    }
    for f in m["files"].as_array().unwrap() {
        let len = fs::metadata(d.join(f["name"].as_str().unwrap())).unwrap().len();
        assert_eq!(len, f["bytes"].as_u64().unwrap());
        assert!(len > 0);
    }
    assert!(m["config_sha256"].as_str().unwrap().len() == 64);
    let s: Value = serde_json::from_slice(&fs::read(d.join("summary.json")).unwrap()).unwrap();
    assert!(s["gap"].as_f64().unwrap().abs() <= 1e-8);
    assert_eq!(s["witness_measure_csv"], "witness_measure.csv");
    let (h, rows) = table(&d.join("duality_gap.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[col(&h, "abs_gap")].parse::<f64>().unwrap() <= 1e-8));
}

#[test]
fn criteria_verdicts_over_the_exponent_family() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&bvpm(tmp.path(), &["--grid", "64x64", "criteria"]));
    let (h, rows) = table(&run_dir(tmp.path(), "criteria").join("criteria.csv"));
    for r in &rows {
        let alpha: f64 = r[col(&h, "alpha")].parse().unwrap();
        let divergent = alpha >= 2.0;
        for c in ["distance_moment", "kernel_integral", "a_y_verdict", "cone_verdict"] {
            assert_eq!(r[col(&h, c)].starts_with("divergent"), divergent, "alpha {alpha} {c}: {}", r[col(&h, c)]);
        }
        assert_eq!(r[col(&h, "uniform_tail_vanishes")] == "true", !divergent);
        assert_eq!(r[col(&h, "z_v_nodes")], if divergent { "64" } else { "0" });
    }
    assert_eq!(rows.len(), 4);
}

#[test]
fn zero_potential_kernel_ratio_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&bvpm(tmp.path(), &["--grid", "64x64", "singular-set", "--set", r#"potential={"kind":"bounded","c":0}"#]));
    let d = run_dir(tmp.path(), "singular-set");
    let (h, rows) = table(&d.join("kernel_ratio.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| (r[col(&h, "ratio")].parse::<f64>().unwrap() - 1.0).abs() < 1e-12));
    let s: Value = serde_json::from_slice(&fs::read(d.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["z_v_nodes"], serde_json::json!([]));
    assert_eq!(s["sing_nodes"], serde_json::json!([]));
}

#[test]
fn suite_records_criterion_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bvpm(tmp.path(), &["--grid", "64x64", "suite", "--set", "criteria=[1,9]"]);
    ok(&o);
    let d = run_dir(tmp.path(), "suite");
    let m: Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
    let checks = m["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["pass"] == true));
    let (_, rows) = table(&d.join("suite.csv"));
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["1", "9"]);
}
