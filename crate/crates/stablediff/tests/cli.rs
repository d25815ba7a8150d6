use std::path::Path;
use std::process::{Command, Output};

use stablediff::io::read_sample;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablediff")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {} / {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn presets_are_listed() {
    let out = run(&["presets"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    let names: Vec<&str> = v["presets"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"kinetic(beta[,c_plus,c_minus])") && names.contains(&"three_halves"));
}

#[test]
fn analyze_kinetic_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["analyze", "--model", "kinetic(7)", "--out", s(dir.path())]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["law"]["regime"], "Diffusive");
    assert!(v["law"]["sigma_sq"].as_f64().unwrap() > 0.0);
    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("analysis.json")).unwrap()).unwrap();
    assert_eq!(file["schema"], 1);

    let v = json(&run(&["analyze", "--model", "kinetic(5)", "--out", s(dir.path())]));
    assert_eq!(v["law"]["regime"], "CriticalDiffusive");

    // with unequal weights the α = 1 centering does not vanish
    let v = json(&run(&["analyze", "--model", "kinetic(2,2,1)", "-f", "id", "--epsilon", "1e-3", "--out", s(dir.path())]));
    assert_eq!(v["law"]["regime"], "CriticalLevy");
    assert!(v["rescaling"]["centering_rate"].as_f64().unwrap().abs() > 0.0);
}

#[test]
fn explicit_claims_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&[
        "analyze", "--model", "kinetic(3)", "--claim-alpha", "4/3", "--claim-f-plus", "0.17677669529663687",
        "--claim-f-minus", "-0.17677669529663687", "--out", s(dir.path()),
    ]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = run(&[
        "analyze", "--model", "kinetic(3)", "--claim-alpha", "1.2", "--claim-f-plus", "1", "--claim-f-minus", "-1",
        "--out", s(dir.path()),
    ]);
    assert_eq!(bad.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(err["schema"], 1);
    assert!(err["error"].as_str().unwrap().contains("Classification"));
}

#[test]
fn simulate_shapes_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "--model", "kinetic(3)", "--epsilon", "1e-2", "--dt", "0.01", "--paths", "40", "--times", "0.5,1", "--seed", "5"];
    for scheme in ["direct", "timechange"] {
        let a = dir.path().join(format!("{scheme}_a"));
        let b = dir.path().join(format!("{scheme}_b"));
        for (d, th) in [(&a, "1"), (&b, "2")] {
            let out = run(&[&base[..], &["--scheme", scheme, "--format", "both", "--threads", th, "--out", s(d)]].concat());
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        }
        let csv = a.join(format!("sample_{scheme}.csv"));
        let sample = read_sample(&csv).unwrap();
        assert_eq!(sample.n_paths(), 40);
        assert_eq!(sample.times, vec![0.5, 1.0]);
        assert_eq!(read_sample(&a.join(format!("sample_{scheme}.bin"))).unwrap(), sample);
        for ext in ["csv", "bin"] {
            let name = format!("sample_{scheme}.{ext}");
            assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
        }
    }
}

#[test]
fn config_file_and_env_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# kinetic run\nmodel = kinetic(3)\nobservable = id\nepsilon = 0.05\ndt = 0.01\n\
             times = 1\nn_paths = 10\nseed = 2\nout_dir = {}\n",
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stablediff"))
        .args(["simulate", "--config", s(&cfg)])
        .env("STABLEDIFF_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_sample(&dir.path().join("out/sample_direct.csv")).unwrap().n_paths(), 10);
    std::fs::write(&cfg, "model = kinetic(3)\ncolour = blue\n").unwrap();
    assert_eq!(run(&["simulate", "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn validate_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // CMS samples against their own law pass
    let out = run(&["stable", "--preset", "three_halves", "--paths", "3000", "--seed", "1", "--out", s(d)]);
    assert!(out.status.success());
    let ok = run(&["validate", "--samples", s(&d.join("sample_cms.csv")), "--out", s(d)]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(d.join("validation.json").exists());
    let cf_csv = std::fs::read_to_string(d.join("validation_cf.csv")).unwrap();
    assert!(cf_csv.starts_with("xi,ecf_re,ecf_im,se_re,se_im,target_re,target_im"));
    assert_eq!(cf_csv.lines().count(), 22);

    // β = 3 samples against the β = 7 law fail
    let sim = run(&[
        "simulate", "--model", "kinetic(3)", "--epsilon", "1e-2", "--dt", "0.01", "--paths", "600", "--seed", "3", "--out", s(d),
    ]);
    assert!(sim.status.success());
    let a7 = d.join("a7");
    assert!(run(&["analyze", "--model", "kinetic(7)", "--out", s(&a7)]).status.success());
    let bad = run(&[
        "validate", "--samples", s(&d.join("sample_direct.csv")), "--analysis", s(&a7.join("analysis.json")), "--out", s(d),
    ]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["pass"], false);
}

#[test]
fn empty_or_missing_samples_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["validate", "--samples", s(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
    let out = run(&["validate", "--samples", s(&dir.path().join("nope.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["simulate", "--model", "kinetic(0.5)"]).status.code(), Some(2));
    assert_eq!(run(&["stable", "--alpha", "2.5", "--a", "1", "--b", "0"]).status.code(), Some(2));
}

#[test]
fn stable_presets_by_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, method) in [("half", "excursion"), ("cauchy", "cms"), ("cauchy", "excursion")] {
        let out = run(&[
            "stable", "--preset", preset, "--method", method, "--paths", "200", "--times", "0.5,1", "--dt", "1e-4",
            "--out", s(dir.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        let sample = read_sample(&dir.path().join(format!("sample_{method}.csv"))).unwrap();
        assert_eq!((sample.n_paths(), sample.times.len()), (200, 2));
        if preset == "half" {
            assert!((v["c"].as_f64().unwrap() - 0.5).abs() < 1e-12);
            assert!(sample.values.iter().all(|r| r[0] >= 0.0 && r[1] >= r[0]));
        }
    }
}
