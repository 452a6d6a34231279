use std::path::Path;
use std::process::{Command, Output};

fn rangecap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rangecap"))
        .args(args)
        .current_dir(dir)
        .env_remove("RANGECAP_MAX_MEM")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn green_build_probe_and_two_point_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = rangecap(
        &["green", "build", "--model", "subordinate", "--alpha", "0.8", "--d", "3", "--radius", "6", "--out", "g.grnt"],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(p.join("g.grnt")).unwrap();
    assert_eq!(&bytes[..4], b"GRNT");
    assert!(p.join("g.grnt.manifest.json").exists());

    let o = rangecap(&["green", "probe", "--green", "g.grnt", "--site", "0 0 0", "--site", "1 2 0"], p);
    assert_eq!(o.status.code(), Some(0));
    let vals: Vec<f64> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').nth(1).unwrap().trim().parse().unwrap())
        .collect();
    std::fs::write(p.join("two.txt"), "0 0 0\n1 2 0\n").unwrap();
    let o = rangecap(&["capacity", "exact", "--sites", "two.txt", "--green", "g.grnt"], p);
    assert_eq!(o.status.code(), Some(0));
    let c: f64 = stdout(&o).trim().parse().unwrap();
    assert!((c - 2.0 / (vals[0] + vals[1])).abs() < 1e-10, "{c} vs {vals:?}");

    std::fs::write(p.join("b.txt"), "1 2 0\n5 5 5\n").unwrap();
    let o = rangecap(&["capacity", "check-decomp", "--a", "two.txt", "--b", "b.txt", "--green", "g.grnt"], p);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"passed\": true"));

    let o = rangecap(&["range", "dyadic-check", "--n", "64", "--levels", "2", "--green", "g.grnt"], p);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(rangecap(&["frobnicate"], p).status.code(), Some(2));
    assert_eq!(rangecap(&["capacity", "exact", "--bogus"], p).status.code(), Some(2));
    assert_eq!(rangecap(&["capacity", "exact", "--sites", "missing.txt", "--green", "x"], p).status.code(), Some(2));
    let help = rangecap(&["experiment", "--help"], p);
    assert_eq!(help.status.code(), Some(0));
    for flag in ["--config", "--seed", "--workers", "--out"] {
        assert!(stdout(&help).contains(flag));
    }

    let o = Command::new(env!("CARGO_BIN_EXE_rangecap"))
        .args(["green", "build", "--radius", "16", "--out", "g.grnt"])
        .current_dir(p)
        .env("RANGECAP_MAX_MEM", "1000")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));

    std::fs::write(
        p.join("fail.json"),
        r#"{"model":{"kind":"subordinate","d":3,"alpha":0.8},"grid":[16,32],"paths":20,"seed":1,
            "thresholds":{"return_slope_rel":0.0}}"#,
    )
    .unwrap();
    let o = rangecap(&["experiment", "transience", "--config", "fail.json", "--out", "f"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL return_slope"));

    std::fs::write(p.join("bad.json"), r#"{"model":{"kind":"simple","d":3},"grid":[],"paths":1,"seed":1}"#).unwrap();
    let o = rangecap(&["experiment", "lln", "--config", "bad.json"], p);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("c.json"),
        r#"{"model":{"kind":"subordinate","d":3,"alpha":0.8},"grid":[32,64],"paths":24,"seed":3,
            "table":{"source":"build","radius":6},"thresholds":{"lln_drift":1.0,"ratio_sigma":10.0}}"#,
    )
    .unwrap();
    let run = |out: &str, workers: &str| {
        let o = rangecap(&["experiment", "lln", "--config", "c.json", "--seed", "7", "--workers", workers, "--out", out], p);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    };
    run("a", "1");
    run("b", "1");
    run("c", "3");
    for f in ["report.json", "samples.csv", "qq.csv", "hist.csv", "config.json"] {
        let a = std::fs::read(p.join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(p.join("b").join(f)).unwrap(), "{f}");
        assert_eq!(a, std::fs::read(p.join("c").join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("a/report.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], report["config_hash"]);
    let samples = std::fs::read_to_string(p.join("a/samples.csv")).unwrap();
    assert!(samples.starts_with("series,path_id,n,value,R_n\n"));

    // The stored config re-runs to the same report.
    let o = rangecap(&["experiment", "lln", "--config", "a/config.json", "--out", "d"], p);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(p.join("a/report.json")).unwrap(), std::fs::read(p.join("d/report.json")).unwrap());
}
