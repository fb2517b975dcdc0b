use std::path::Path;
use std::process::{Command, Output};

fn fracdamp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdamp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = "n_x = 48\nn_xi = 100\nt_final = 2.0\nk_max = 12\nresolvent_k_max = 10\n";

#[test]
fn simulate_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = fracdamp(&["simulate", "--config", &cfg, "--out", "o"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("o/energy_trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,E,E_dot_audit"));
    let e: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(e.len(), 2001);
    assert!(e.windows(2).all(|w| w[1] < w[0]));

    let m = read_json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["command"], "simulate");
    let zeta = m["derived"]["zeta"].as_f64().unwrap();
    assert!((zeta - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(m["derived"]["bc_branch"], "DirichletLeft");
    assert!(m["derived"]["asymptotic"]["c0"].is_number());
    let artifacts: Vec<&str> = m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for a in &artifacts {
        assert!(dir.path().join("o").join(a).exists(), "{a}");
    }
}

#[test]
fn validate_kernel_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "alpha_frac = 0.75\n");
    let out = fracdamp(
        &["validate-kernel", "--config", &cfg, "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success());
    let r = read_json(&dir.path().join("o/kernel_report.json"));
    assert!(r["max_relative_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["passed"], true);
}

#[test]
fn failing_certification_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_xi = 20\nxi_min = 0.01\nxi_max = 100.0\n");
    let out = fracdamp(
        &["validate-kernel", "--config", &cfg, "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["kind"].is_string());
}

#[test]
fn usage_and_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracdamp(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), SMALL);
    let out = fracdamp(
        &["simulate", "--config", &cfg, "--set", "rho=-1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parameter");

    let bad = write_config(dir.path(), "alpha = 0.5\n");
    let out = fracdamp(&["spectrum", "--config", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for o in ["a", "b"] {
        for cmd in ["simulate", "spectrum", "resolvent"] {
            let out = fracdamp(
                &[
                    cmd,
                    "--config",
                    &cfg,
                    "--out",
                    o,
                    "--set",
                    "model.alpha_frac=0.75",
                ],
                dir.path(),
            );
            assert!(
                out.status.success(),
                "{cmd}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
    for f in [
        "energy_trace.csv",
        "final_state.csv",
        "simulation.json",
        "spectrum.json",
        "resolvent.csv",
        "resolvent_fit.json",
        "manifest.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn empty_sweep_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = fracdamp(
        &[
            "sweep", "--config", &cfg, "--out", "o", "--param", "rho", "--values",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn rho_sweep_is_linear_in_the_damping() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("k_max = 12", "k_max = 30\nalpha_frac = 0.75"),
    );
    let out = fracdamp(
        &[
            "sweep", "--config", &cfg, "--out", "o", "--param", "rho", "--values", "1,2,4",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = read_json(&dir.path().join("o/sweep.json"));
    let re: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["re_lambda_kmax"].as_f64().unwrap())
        .collect();
    assert!((re[1] / re[0] - 2.0).abs() < 0.01, "{re:?}");
    assert!((re[2] / re[0] - 4.0).abs() < 0.04, "{re:?}");
    // a bad value is recorded and the other rows still run
    let out = fracdamp(
        &[
            "sweep", "--config", &cfg, "--out", "p", "--param", "rho", "--values", "-1,1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let v = read_json(&dir.path().join("p/sweep.json"));
    assert!(!v["rows"][0]["errors"].as_array().unwrap().is_empty());
    assert!(v["rows"][1]["re_lambda_kmax"].is_number());
}

#[test]
fn fit_decay_from_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let trace: String = std::iter::once("t,E,E_dot_audit".to_string())
        .chain((0..=400).map(|i| {
            let t = 10.0 + i as f64 * 0.25;
            format!("{t},{},{}", 5.0 * t.powf(-2.5), -12.5 * t.powf(-3.5))
        }))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.path().join("trace.csv"), trace).unwrap();
    let out = fracdamp(
        &[
            "fit-decay",
            "--config",
            &cfg,
            "--out",
            "o",
            "--trace",
            "trace.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = read_json(&dir.path().join("o/decay_fit.json"));
    assert!((v["fit"]["slope"].as_f64().unwrap() + 2.5).abs() < 1e-9);
}
