use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wqed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wqed"))
        .current_dir(dir)
        .env_remove("WQED_JOBS")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--kn", "40", "--jobs", "1"];

fn sweep_in(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    wqed(dir, &args)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn sweep_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep_in(dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let spectrum = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(spectrum[0].join(","), "K,branch_id,class,re_omega,im_omega,re_za,im_za,re_zb,im_zb,abs_za,abs_zb,residual,region");
    assert!(spectrum.len() > 40);
    assert!(spectrum[1..].iter().all(|r| r.len() == 13 && r[11].parse::<f64>().unwrap() < 1e-9));
    let continuum = csv_rows(&dir.path().join("continuum.csv"));
    assert_eq!(continuum[0].join(","), "K,label,lo,hi");
}

#[test]
fn output_is_deterministic_across_job_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&sweep_in(a.path(), &[])), 0);
    let o = wqed(b.path(), &["sweep", "--kn", "40", "--jobs", "3"]);
    assert_eq!(code(&o), 0);
    for name in ["spectrum.csv", "continuum.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&sweep_in(dir.path(), &[])), 0);
    assert_eq!(code(&sweep_in(dir.path(), &["--format", "json"])), 0);
    let csv = csv_rows(&dir.path().join("spectrum.csv"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum.json")).unwrap()).unwrap();
    let json = json.as_array().unwrap();
    assert_eq!(json.len(), csv.len() - 1);
    for (row, obj) in csv[1..].iter().zip(json) {
        assert_eq!(obj["K"].as_f64().unwrap(), row[0].parse::<f64>().unwrap());
        assert_eq!(obj["class"], row[2].as_str());
        assert_eq!(obj["re_omega"].as_f64().unwrap(), row[3].parse::<f64>().unwrap());
        assert_eq!(obj["region"], row[12].as_str());
    }
}

#[test]
fn antibound_rows_can_be_dropped() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&sweep_in(dir.path(), &["--xi", "0.9"])), 0);
    let with = csv_rows(&dir.path().join("spectrum.csv"));
    assert!(with.iter().any(|r| r[2] == "antibound"));
    assert_eq!(code(&sweep_in(dir.path(), &["--xi", "0.9", "--emit-antibound", "false"])), 0);
    let without = csv_rows(&dir.path().join("spectrum.csv"));
    assert!(without.iter().all(|r| r[2] != "antibound"));
    assert!(without.len() < with.len());
}

#[test]
fn chiral_preset_has_one_branch() {
    let dir = tempfile::tempdir().unwrap();
    let o = wqed(dir.path(), &["chiral", "--kn", "60", "--xi", "0.7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("xi = 0:"), "{out}");
    let rows = csv_rows(&dir.path().join("spectrum.csv"));
    assert!(rows[1..].iter().all(|r| r[1] == rows[1][1]));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "phi = 0.25\nxi = 0.9\nkn = 20\nformat = \"json\"\n").unwrap();
    let o = wqed(dir.path(), &["sweep", "--config", "run.toml", "--xi", "0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("phi = 0.25pi, xi = 0.5: 20 K points"), "{out}");
    assert!(dir.path().join("spectrum.json").exists());
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.toml"), "phi = []\n").unwrap();
    fs::write(dir.path().join("typo.toml"), "phii = 0.3\n").unwrap();
    for args in [
        &["sweep", "--xi", "1.5"][..],
        &["sweep", "--phi", "0.2,0.3"],
        &["sweep", "--phi", "0.7"],
        &["ep", "--config", "empty.toml"],
        &["sweep", "--config", "typo.toml"],
        &["sweep", "--config", "missing.toml"],
        &["sweep", "--oracle-n", "10"],
        &["frobnicate"],
    ] {
        let o = wqed(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2, "nothing written");
}

#[test]
fn numerical_failure_exits_3_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep_in(dir.path(), &["--corrupt-dt1", "1.01"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unwritable_output_leaves_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("continuum.csv")).unwrap();
    let o = sweep_in(dir.path(), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["continuum.csv"]);
}

#[test]
fn ep_at_reference_phase() {
    let dir = tempfile::tempdir().unwrap();
    let o = wqed(dir.path(), &["ep", "--phi", "0.3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("ep_curve.csv"));
    assert_eq!(rows[0].join(","), "phi_over_pi,ratio_ep,k_ep_over_pi");
    let ratio: f64 = rows[1][1].parse().unwrap();
    let k: f64 = rows[1][2].parse().unwrap();
    assert!((ratio - 0.236).abs() <= 0.01, "{ratio}");
    assert!((k - 1.8).abs() <= 0.05, "{k}");
}

#[test]
fn asymptotes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = wqed(dir.path(), &["asymptotes", "--kn", "30"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("asymptotes.csv"));
    assert_eq!(rows[0].join(","), "K,branch,re_omega,im_omega");
    assert!(rows.iter().any(|r| r[1] == "omega_minus"));
}

#[test]
fn corrupted_verify_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = wqed(dir.path(), &["verify", "--oracle-n", "100", "--corrupt-dt1", "1.01"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.lines().any(|l| l.starts_with("FAIL") && l.contains("residual gate")), "{table}");
    assert!(table.lines().any(|l| l.starts_with("PASS")));
    assert!(stderr(&o).contains("residual gate"));
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let o = wqed(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("verify"));
}
