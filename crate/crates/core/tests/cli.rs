mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dynpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynpath"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dynpath(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_params(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("params.toml");
    fs::write(&path, toml::to_string(&common::three_visit()).unwrap()).unwrap();
    path
}

fn column<'a>(table: &'a str, name: &str) -> Vec<&'a str> {
    let mut lines = table.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap()).collect()
}

#[test]
fn simulate_writes_reproducible_cohort() {
    let tmp = tempfile::tempdir().unwrap();
    let params = write_params(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        ok(&[
            "simulate",
            "--params",
            s(&params),
            "--n",
            "100",
            "--seed",
            "1",
            "--out",
            s(out),
        ]);
    }
    for f in ["subjects.csv", "mediators.csv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert_eq!(
        fs::read_to_string(a.join("subjects.csv"))
            .unwrap()
            .lines()
            .count(),
        101
    );
}

#[test]
fn fit_on_missing_directory_names_the_path() {
    let out = dynpath(&["fit", "--data", "no/such/cohort"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no/such/cohort"), "{err}");
}

#[test]
fn effects_kappa_keeps_total_column() {
    let tmp = tempfile::tempdir().unwrap();
    let params = write_params(tmp.path());
    let cohort = tmp.path().join("cohort");
    let fit = tmp.path().join("fit.json");
    ok(&[
        "simulate",
        "--params",
        s(&params),
        "--n",
        "300",
        "--seed",
        "2",
        "--out",
        s(&cohort),
    ]);
    ok(&["fit", "--data", s(&cohort), "--out", s(&fit)]);
    let raw = ok(&["effects", "--fit", s(&fit), "--contrast", "1,0"]);
    let corr = ok(&[
        "effects",
        "--fit",
        s(&fit),
        "--contrast",
        "1,0",
        "--kappa",
        "0.72",
    ]);
    assert_eq!(
        raw.lines().next().unwrap(),
        "time,chde,chie,chte,sde,sie,ste"
    );
    assert_eq!(column(&raw, "chte"), column(&corr, "chte"));
    assert_eq!(column(&corr, "chte"), column(&corr, "chte_corr"));
    assert_ne!(column(&corr, "chie"), column(&corr, "chie_corr"));

    let bad = dynpath(&["effects", "--fit", s(&fit), "--kappa", "1.5"]);
    assert!(!bad.status.success());
    let bad = dynpath(&["effects", "--fit", s(&fit), "--contrast", "1,1"]);
    assert!(!bad.status.success());
}

#[test]
fn bootstrap_and_oracle_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let params = write_params(tmp.path());
    let cohort = tmp.path().join("cohort");
    ok(&[
        "simulate",
        "--params",
        s(&params),
        "--n",
        "300",
        "--seed",
        "3",
        "--out",
        s(&cohort),
    ]);
    let bands = ok(&[
        "bootstrap",
        "--data",
        s(&cohort),
        "--replicates",
        "20",
        "--seed",
        "4",
        "--grid",
        "0.5,1",
    ]);
    assert!(bands.starts_with("time,chde,chde_lower,chde_upper,chie,"));
    assert_eq!(bands.lines().count(), 3);

    let oracle = ok(&[
        "oracle",
        "--params",
        s(&params),
        "--grid",
        "0.5,1,2",
        "--n-mc",
        "2000",
        "--seed",
        "5",
    ]);
    assert!(oracle.starts_with("time,chde,chie,chte,sde,sie,ste,sde_mc,sde_mc_se"));
    assert_eq!(oracle.lines().count(), 4);

    let missing_seed = dynpath(&["bootstrap", "--data", s(&cohort)]);
    assert!(!missing_seed.status.success());
}

#[test]
fn output_may_not_overwrite_input() {
    let tmp = tempfile::tempdir().unwrap();
    let params = write_params(tmp.path());
    let out = dynpath(&[
        "oracle",
        "--params",
        s(&params),
        "--grid",
        "1",
        "--n-mc",
        "100",
        "--seed",
        "1",
        "--out",
        s(&params),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("must differ"));
}

#[test]
fn carry_forward_flag_fills_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("gappy");
    fs::create_dir(&dir).unwrap();
    fs::write(
        dir.join("config.toml"),
        "schedule = [0.0, 1.0]\ncovariates = []\n",
    )
    .unwrap();
    let mut subjects = String::from("id,treatment,followup,event\n");
    let mut mediators = String::from("id,time,value\n");
    for i in 0..20 {
        let followup = 0.5 + i as f64 * 0.2;
        subjects.push_str(&format!(
            "s{i},{},{followup},{}\n",
            i % 2,
            u8::from(i % 3 != 0)
        ));
        mediators.push_str(&format!("s{i},0,{}\n", i as f64 * 0.1));
        if followup >= 1.0 && i != 7 {
            mediators.push_str(&format!("s{i},1,{}\n", i as f64 * 0.2));
        }
    }
    fs::write(dir.join("subjects.csv"), subjects).unwrap();
    fs::write(dir.join("mediators.csv"), mediators).unwrap();

    let strict = dynpath(&["fit", "--data", s(&dir)]);
    assert!(!strict.status.success());
    assert!(String::from_utf8_lossy(&strict.stderr).contains("missing mediator"));
    let out = dynpath(&["fit", "--data", s(&dir), "--carry-forward"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("carried forward 1"));
}
