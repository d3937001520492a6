use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tensorconc_cli::commands::{doubling_counts, DEFAULT_C0};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tensorconc"));
    c.env_remove("TENSORCONC_OUT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &mut Command) -> (Output, String) {
    let out = cmd.output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    (out, stdout)
}

/// `(quantity, value)` pairs of a two-column text table.
fn table_pairs(stdout: &str) -> Vec<(String, String)> {
    stdout
        .lines()
        .skip(2)
        .filter_map(|l| {
            let (q, v) = l.split_once("  ")?;
            Some((q.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn lookup<'a>(pairs: &'a [(String, String)], key: &str) -> &'a str {
    &pairs.iter().find(|(q, _)| q == key).unwrap_or_else(|| panic!("missing {key}")).1
}

#[test]
fn bound_reports_regime_and_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"schema_version":1,"rates":{"N":1048576,"spectra":[
            {"kind":"identity","d":64},{"kind":"identity","d":16},{"kind":"identity","d":2}]}}"#,
    );
    let (out, stdout) = run(bin().args(["--out"]).arg(dir.path()).args(["bound", "--config"]).arg(&cfg));
    assert!(out.status.success());
    let pairs = table_pairs(&stdout);
    assert_eq!(lookup(&pairs, "t"), "2");
    assert_eq!(lookup(&pairs, "log N"), "13.8629");
    let csv: Vec<(String, String)> =
        csv_rows(&dir.path().join("bound.csv")).into_iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(csv, pairs);
}

#[test]
fn bound_script_e_n_for_identity_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"schema_version":1,"rates":{"N":64,"spectra":[{"kind":"identity","d":8},{"kind":"identity","d":8}]}}"#,
    );
    let (out, stdout) = run(bin().arg("--out").arg(dir.path()).args(["bound", "--config"]).arg(&cfg));
    assert!(out.status.success());
    let pairs = table_pairs(&stdout);
    let n = 64f64;
    let expected = (16.0 / n).sqrt() + (8.0 + n.ln()) / n;
    let shown: f64 = lookup(&pairs, "E_N").parse().unwrap();
    assert!((shown - expected).abs() <= 5e-6 * expected, "{shown} vs {expected}");
    assert_eq!(lookup(&pairs, "E_N"), "0.689983");
    assert_eq!(lookup(&pairs, "theorem21_upper"), "0.689983");
    assert!(pairs.iter().any(|(q, _)| q == "logconcave_bound"));
}

#[test]
fn negative_n_is_a_config_error_naming_n() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"schema_version":1,"rates":{"N":-3,"spectra":[{"kind":"identity","d":8},{"kind":"identity","d":8}]}}"#,
    );
    let out = bin().arg("--out").arg(dir.path()).args(["bound", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rates.N"), "{err}");
}

#[test]
fn wrong_payload_kind_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"schema_version":1,"rates":{"N":64,"spectra":[{"kind":"identity","d":8},{"kind":"identity","d":8}]}}"#,
    );
    let out = bin().arg("--out").arg(dir.path()).args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

const SWEEP: &str = r#"{"schema_version":1,"plan":{"experiment_id":"resume","grid":[16,32,64],
    "ensembles":[{"spectrum":{"kind":"identity","d":3},"family":"gaussian"},
                 {"spectrum":{"kind":"identity","d":2},"family":"scaled_rademacher"},
                 {"spectrum":{"kind":"identity","d":3},"family":"gaussian"}],
    "trials":10,"solver":{"restarts":4},"statistic":{"kind":"deviation_norm"},"master_seed":11}}"#;

#[test]
fn interrupted_sweep_resumes_to_identical_store() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", SWEEP);
    let full = dir.path().join("full");
    let part = dir.path().join("part");
    assert!(bin().arg("--out").arg(&full).args(["sweep", "--config"]).arg(&cfg).output().unwrap().status.success());

    let (out, stdout) = run(bin().arg("--out").arg(&part).args(["sweep", "--stop-after", "15", "--config"]).arg(&cfg));
    assert!(out.status.success());
    assert!(stdout.contains("15 of 30"), "{stdout}");
    assert!(!part.join("resume/summary.csv").exists());

    let again = bin().arg("--out").arg(&part).args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_ne!(again.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--resume"));

    assert!(bin()
        .arg("--out")
        .arg(&part)
        .args(["sweep", "--resume", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status
        .success());
    for f in ["trials.jsonl", "summary.csv", "plan.json", "plot.svg"] {
        assert_eq!(
            fs::read(full.join("resume").join(f)).unwrap(),
            fs::read(part.join("resume").join(f)).unwrap(),
            "{f}"
        );
    }
    let rows = csv_rows(&full.join("resume/summary.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "resume");
    assert_eq!(rows[0][1], "16");
    assert_eq!(rows[0][2], "deviation_norm");
}

#[test]
fn resume_with_changed_plan_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", SWEEP);
    let out = dir.path().join("o");
    assert!(bin()
        .arg("--out")
        .arg(&out)
        .args(["sweep", "--stop-after", "3", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status
        .success());
    let changed = write(dir.path(), "q.json", &SWEEP.replace("\"master_seed\":11", "\"master_seed\":12"));
    let res = bin().arg("--out").arg(&out).args(["sweep", "--resume", "--config"]).arg(&changed).output().unwrap();
    assert_ne!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stderr).contains("hash"));
}

#[test]
fn out_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", SWEEP);
    let env_out = dir.path().join("from-env");
    let status = bin()
        .env("TENSORCONC_OUT", &env_out)
        .args(["--workers", "2", "sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(env_out.join("resume/trials.jsonl").exists());
}

#[test]
fn fit_recovers_maxprod_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"schema_version":1,"plan":{"experiment_id":"mp","grid":[16,64,256,1024,4096,16384],
            "trials":256,"statistic":{"kind":"maxprod_stat","s":2},"master_seed":3}}"#,
    );
    assert!(bin()
        .arg("--out")
        .arg(dir.path())
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status
        .success());
    let store = dir.path().join("mp");
    let (out, stdout) = run(bin().args(["fit", "--statistic", "maxprod_stat", "--store"]).arg(&store));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pairs = table_pairs(&stdout);
    assert_eq!(lookup(&pairs, "abscissa"), "log_log_n");
    let slope: f64 = lookup(&pairs, "slope").parse().unwrap();
    assert!((slope - 1.0).abs() <= 0.15, "slope {slope}");
    let csv: Vec<(String, String)> =
        csv_rows(&store.join("fit.csv")).into_iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(csv, pairs);

    let wrong = bin().args(["fit", "--statistic", "deviation_norm", "--store"]).arg(&store).output().unwrap();
    assert_ne!(wrong.status.code(), Some(0));
}

#[test]
fn simulate_honours_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"schema_version":1,"plan":{"experiment_id":"sim","grid":[32,128],"trials":16,
            "statistic":{"kind":"maxprod_stat","s":1},"master_seed":3}}"#,
    );
    let (a, sa) = run(bin().arg("--out").arg(dir.path()).args(["simulate", "--config"]).arg(&cfg));
    let (_, sb) = run(bin().arg("--out").arg(dir.path()).args(["simulate", "--config"]).arg(&cfg));
    let (_, sc) = run(bin().arg("--out").arg(dir.path()).args(["simulate", "--seed", "4", "--config"]).arg(&cfg));
    assert!(a.status.success());
    assert_eq!(sa, sb);
    assert_ne!(sa, sc);
    assert!(dir.path().join("simulate/sim/summary.csv").exists());
    assert!(dir.path().join("simulate/sim/plot.svg").exists());
}

#[test]
fn verify_table_mirrors_csv_and_exit_code_tracks_failures() {
    let dir = tempfile::tempdir().unwrap();
    let (out, stdout) = run(bin().arg("--out").arg(dir.path()).arg("verify"));
    let rows = csv_rows(&dir.path().join("verify.csv"));
    let table: Vec<&str> = stdout.lines().skip(2).take(rows.len()).collect();
    for (line, row) in table.iter().zip(&rows) {
        let cells: Vec<&str> = line.split("  ").map(str::trim).filter(|c| !c.is_empty()).collect();
        assert_eq!(cells, row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let any_fail = rows.iter().any(|r| r[5] == "FAIL");
    assert_eq!(out.status.code(), Some(if any_fail { 1 } else { 0 }));
    let strict_violations: u64 = DEFAULT_C0.iter().map(|&c| doubling_counts(c).unwrap().strict_violations).sum();
    assert_eq!(any_fail, strict_violations > 0 || rows.iter().any(|r| !r[0].starts_with("j_s") && r[5] == "FAIL"));

    let bad = bin().arg("--out").arg(dir.path()).args(["verify", "--c0", "0"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
