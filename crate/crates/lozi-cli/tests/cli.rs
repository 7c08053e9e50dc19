use std::path::Path;
use std::process::{Command, Output};

use lozi::output::{content_hash, CsvTable};
use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lozi-lab")).args(args).output().expect("binary runs")
}

fn sidecar(path: &Path) -> serde_json::Map<String, Value> {
    match serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap() {
        Value::Object(m) => m,
        v => panic!("not an object: {v}"),
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_passes_on_both_parameter_sets() {
    for (a, b) in [("1.8", "0.35"), ("1.7", "0.5")] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let o = lab(&["verify", "--a", a, "--b", b, "--out", out]);
        assert!(o.status.success(), "({a}, {b}): {}", stderr(&o));
        let meta = sidecar(&dir.path().join("verify.json"));
        assert_eq!(meta["ok"], Value::Bool(true));
        for name in ["attractor.csv", "cones.csv"] {
            let bytes = std::fs::read(dir.path().join(name)).unwrap();
            assert_eq!(meta[&format!("output_hash.{name}")], Value::String(content_hash(&bytes)));
        }
        let cones = CsvTable::from_bytes(&std::fs::read(dir.path().join("cones.csv")).unwrap()).unwrap();
        assert_eq!(cones.header(), ["cone", "side", "dx", "dy", "c"]);
    }
}

#[test]
fn sidecar_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = lab(&["slice-hist", "--steps", "3000", "--runs", "2", "--seed", "5", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = sidecar(&dir.path().join("slice_hist.json"));
    for key in [
        "command",
        "lozi_version",
        "config_toml",
        "input_hash",
        "config.params.a",
        "config.run.steps",
        "seeds.master",
        "seeds.runs",
        "seeds.scheme",
        "output_hash.slice_hist.csv",
        "output_rows.slice_hist.csv",
        "lambda",
        "mu",
        "wall_clock_s",
    ] {
        assert!(meta.contains_key(key), "missing {key}");
    }
    let toml = meta["config_toml"].as_str().unwrap();
    assert_eq!(meta["input_hash"], Value::String(content_hash(toml.as_bytes())));
    assert_eq!(meta["seeds.master"], Value::from(5));
    let t = CsvTable::from_bytes(&std::fs::read(dir.path().join("slice_hist.csv")).unwrap()).unwrap();
    assert_eq!(t.header(), ["bin_center", "mass"]);
    assert!(!t.is_empty());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[params]\na = 1.7\nb = \"0.5\"\n\n[run]\nsteps = 2000\nruns = 2\nseed = 3\n").unwrap();
    let out = dir.path().join("o");
    let o = lab(&["slice-hist", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = sidecar(&out.join("slice_hist.json"));
    assert_eq!(meta["config.params.a"], Value::from(1.7));
    assert_eq!(meta["config.params.b"], Value::from("0.5"));
    assert_eq!(meta["config.run.steps"], Value::from(2000));
    assert_eq!(meta["seeds.master"], Value::from(9));
}

#[test]
fn bad_parameters_are_rejected_by_name_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = lab(&["verify", "--b", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("b > 0"), "{}", stderr(&o));
    let o = lab(&["verify", "--a", "2.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4 - 2a"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[run]\nstepz = 10\n").unwrap();
    let o = lab(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepz"), "{}", stderr(&o));
}

#[test]
fn invalid_estimator_settings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for args in [
        vec!["slice-hist", "--bin", "0"],
        vec!["mixing", "--observable", "nope"],
        vec!["susceptibility", "--field", "nope"],
        vec!["response", "--eps-grid", "-0.01,0.3"],
        vec!["slice-hist", "--runs", "0"],
    ] {
        let o = lab(&[&args[..], &["--out", out]].concat());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!Path::new(out).exists());
}

#[test]
fn estimator_commands_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = ["--steps", "3000", "--runs", "2", "--n-max", "6", "--out", out];
    for (cmd, files) in [
        ("mixing", vec!["mixing.csv", "mixing.json"]),
        ("susceptibility", vec!["susceptibility.csv", "susceptibility_checks.csv", "susceptibility.json"]),
        ("response", vec!["response.csv", "response.json"]),
    ] {
        let mut args = vec![cmd];
        args.extend(common);
        if cmd == "response" {
            args.extend(["--eps-grid", "-0.01,0,0.01"]);
        }
        let o = lab(&args);
        assert!(o.status.code() != Some(2), "{cmd}: {}", stderr(&o));
        for f in files {
            assert!(dir.path().join(f).is_file(), "{cmd}: {f}");
        }
    }
    let r = CsvTable::from_bytes(&std::fs::read(dir.path().join("response.csv")).unwrap()).unwrap();
    assert_eq!(r.header(), ["eps", "true", "true_se", "linear", "deviation", "deviation_se", "envelope"]);
    assert_eq!(r.len(), 3);
    let s = CsvTable::from_bytes(&std::fs::read(dir.path().join("susceptibility.csv")).unwrap()).unwrap();
    assert_eq!(s.len(), 7);
    assert_eq!(s.column("n").unwrap(), ["0", "1", "2", "3", "4", "5", "6"]);
}
