use std::path::{Path, PathBuf};
use std::process::Command;

const SMALL: &str = r#"
model = "both"
sequences = ["hahn", "cpmg:4"]
n_configurations = 2
time_points = 21

[bath]
cutoff_nm = 2.5

[[scenarios]]
plus = "5,-4"
minus = "4,-5"
field_mt = 468.65
t_max_s = 0.005
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spinbath-ct")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn coherence_runs_are_byte_identical() {
    let dir = scratch("determinism");
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run(&["coherence", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, fb);
    let summary: serde_json::Value = serde_json::from_slice(&fa.iter().find(|f| f.0 == "summary.json").unwrap().1).unwrap();
    assert_eq!(summary["entries"].as_array().unwrap().len(), 4);

    let c = dir.join("c");
    let o = run(&["coherence", "--config", cfg.to_str().unwrap(), "--seed", "2", "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(files(&c), fa);
}

#[test]
fn exit_codes() {
    let dir = scratch("exit");
    let bad_key = dir.join("bad_key.toml");
    std::fs::write(&bad_key, "no_such_key = 1\n").unwrap();
    let bad_value = dir.join("bad_value.toml");
    std::fs::write(&bad_value, "n_configurations = 0\n").unwrap();
    let out = dir.to_str().unwrap();
    assert_eq!(code(&["levels", "--field", "80", "--out", out]), 0);
    assert_eq!(code(&["coherence", "--config", bad_key.to_str().unwrap(), "--out", out]), 2);
    assert_eq!(code(&["coherence", "--config", bad_value.to_str().unwrap(), "--out", out]), 2);
    assert_eq!(code(&["coherence", "--config", dir.join("missing.toml").to_str().unwrap(), "--out", out]), 4);
    assert_eq!(code(&["fit-correlation", dir.join("missing.csv").to_str().unwrap()]), 4);
    assert_eq!(code(&["find-ct", "--range", "200:300"]), 2);
}

#[test]
fn find_ct_prints_the_clock_field() {
    let o = run(&["find-ct"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("79.9"), "{text}");
}

#[test]
fn extract_then_predict() {
    let dir = scratch("spectroscopy");
    let curve = dir.join("curve.csv");
    let mut rows = String::from("# synthetic\nt_s,abs_L\n");
    for k in 0..=50 {
        let t = k as f64 * 2e-3;
        rows += &format!("{t},{}\n", (-0.5 * 0.25 * 400.0 * t).exp());
    }
    std::fs::write(&curve, rows).unwrap();
    let spec = dir.join("spectrum.csv");
    let o = run(&["spectroscopy", "extract", "--n", "8", "--pe", "0.5", curve.to_str().unwrap(), "-o", spec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&spec).unwrap();
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("omega"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 50);
    assert!(values.iter().all(|v| (v - 400.0).abs() < 1e-6 * 400.0));

    let pred = dir.join("pred.csv");
    let o = run(&[
        "spectroscopy", "predict", "--seq", "cpmg:16", "--pe", "0.5", "--t-max", "0.1", "--points", "11",
        spec.to_str().unwrap(), "-o", pred.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&pred).unwrap().contains("t_s"));
}
