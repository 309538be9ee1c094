use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modal-codesign"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["synth7"])), 2);
    assert_eq!(code(&run(&["synth6", "--budget", "many"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["decouple", "--model", "no_such_model", "--out", out])), 2);
    assert_eq!(
        code(&run(&["decouple", "--model", "two_mass", "--p-star", "0.1,0.2", "--out", out])),
        2
    );
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"model": "two_mass", "conventional": {"budgett": 10}}"#).unwrap();
    let o = run(&[
        "synth6",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("conventional.budgett"));
}

#[test]
fn decouple_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["decouple", "--model", "mmpa_lite", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("exact at p_star only"));
    for f in ["decoupling.json", "decoupled_frf.csv", "decouple_summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(header(&dir.path().join("decoupled_frf.csv")).starts_with("freq_hz,"));
}

#[test]
fn too_many_flexible_modes_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["decouple", "--model", "two_mass", "--n-flex", "3", "--out", out]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_budget_synthesis_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&[
            "synth6",
            "--model",
            "two_mass",
            "--budget",
            "0",
            "--seed",
            "3",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["results.json", "proposed_channels.csv", "conventional_channels.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
    assert_eq!(
        header(&a.path().join("proposed_channels.csv")),
        "freq_hz,|z1[0]/w1[0]|,|z1[0]/w2[0]|,|z1[0]/w3[0]|,|z1[0]/d[0]|,\
         |z2[0]/w1[0]|,|z2[0]/w2[0]|,|z2[0]/w3[0]|,|z2[0]/d[0]|,\
         |s[0]/w1[0]|,|s[0]/w2[0]|,|s[0]/w3[0]|,|s[0]/d[0]|"
    );
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(v["proposed"]["result"]["evaluations"], 1);
    assert!(v["proposed"]["result"]["params"]["K_RB"].is_array());

    let res = a.path().join("results.json");
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "gridcheck",
        "--params",
        res.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&out.path().join("gridcheck.csv")).split(',').next(),
        Some("p[0]")
    );
    let o = run(&[
        "analyze",
        "--params",
        res.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&out.path().join("uncertainty.csv")),
        "freq_hz,deviation,weight"
    );
}

#[test]
fn unstable_design_fails_gridcheck_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    fs::write(
        &params,
        r#"{"K_RB": [{"gain": -0.3, "f_i": 2.0, "f_z": 3.3, "f_p": 30.0, "f_lp": 60.0, "zeta_lp": 0.7}],
            "L": [[0.0], [0.0], [0.0], [0.0]], "xi": [0.0]}"#,
    )
    .unwrap();
    let o = run(&[
        "gridcheck",
        "--model",
        "two_mass",
        "--params",
        params.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}
