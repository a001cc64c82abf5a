use std::process::{Command, Output};

const M1: [&str; 8] = ["--nu", "0.3", "--delta", "0.7", "--c1", "0.5", "--c2", "1"];

fn gwi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwi"))
        .args(args)
        .env_remove("GWI_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn with_m1<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(M1.iter()).chain(tail.iter()).copied().collect()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("gwi-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn invalid_c1_fails_with_error_json() {
    let o = gwi(&["model", "check", "--nu", "0.3", "--delta", "0.7", "--c1", "0.9", "--c2", "1"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid_model");
}

#[test]
fn valid_model_check_reports_passing_checks() {
    let out = stdout(&gwi(&with_m1(&["model", "check"], &[])));
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn exact_s1_tail_is_the_immigration_tail() {
    let out = stdout(&gwi(&with_m1(&["exact", "sn", "--n", "1", "--N", "4096", "--no-timestamp"], &[])));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("k,mass,tail_lo,tail_hi"));
    // P(η > k) = Π_{j≤k} (1 − δ/j) for C₂ = 1
    let mut tail = 1.0;
    for (k, line) in lines.take(200).enumerate() {
        if k > 0 {
            tail *= 1.0 - 0.7 / k as f64;
        }
        let hi: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((hi - tail).abs() < 1e-9 * tail.max(1e-3), "k={k}: {hi} vs {tail}");
    }
}

#[test]
fn sweeps_are_reproducible_across_runs_and_workers() {
    let run = |workers: &str| {
        stdout(&gwi(&with_m1(
            &["validate", "theorem1"],
            &["--n", "8", "--k1", "0.1", "--k2", "0.5", "--reps", "2e3", "--seed", "7", "--grid-size", "4",
              "--workers", workers, "--no-timestamp", "--pop-cap", "1e6"],
        )))
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("4"));
    assert!(a.starts_with("x,p_hat,ci_lo,ci_hi,prediction,ratio,exact_lo,exact_hi"));
}

#[test]
fn timestamp_line_is_optional() {
    let args = with_m1(&["predict"], &["--x", "100,1000", "--quantity", "x"]);
    let with = stdout(&gwi(&args));
    assert!(with.starts_with("# generated_unix="));
    let mut quiet = args.clone();
    quiet.push("--no-timestamp");
    let body = stdout(&gwi(&quiet));
    assert_eq!(with.lines().skip(1).collect::<Vec<_>>(), body.lines().collect::<Vec<_>>());
}

#[test]
fn config_file_with_flag_override_and_unknown_keys() {
    let dir = scratch("config");
    let good = dir.join("good.json");
    std::fs::write(&good, r#"{"nu": 0.3, "delta": 0.7, "c1": 0.9, "c2": 1}"#).unwrap();
    let cfg = good.to_str().unwrap();
    assert!(!gwi(&["model", "check", "--config", cfg]).status.success());
    stdout(&gwi(&["model", "check", "--config", cfg, "--c1", "0.5"]));

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"nu": 0.3, "delta": 0.7, "c1": 0.5, "c2": 1, "colour": 3}"#).unwrap();
    let o = gwi(&["model", "check", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn simulate_streams_json_lines() {
    let out = stdout(&gwi(&with_m1(&["simulate", "sn"], &["--n", "4", "--reps", "20", "--seed", "3", "--format", "json"])));
    let recs: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 20);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r["replica"], i);
        assert!(r["aborted"].is_boolean());
    }
    let out = stdout(&gwi(&with_m1(&["simulate", "coupled"], &["--n", "4", "--reps", "5", "--seed", "3", "--format", "json"])));
    for line in out.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        if r["aborted"] == false {
            let (s, s1, s2) = (r["s_n"].as_u64().unwrap(), r["s_n1"].as_u64().unwrap(), r["s_n2"].as_u64().unwrap());
            assert_eq!(s, s1 - s2);
        }
    }
}

#[test]
fn out_path_gets_csv_and_json_summary() {
    let dir = scratch("out");
    let path = dir.join("sweep.csv");
    gwi(&with_m1(
        &["validate", "stationary"],
        &["--x", "100,1000", "--out", path.to_str().unwrap(), "--no-timestamp"],
    ));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
    assert!(summary["exact_sup_error"].as_f64().unwrap() < 0.2);
}

#[test]
fn infeasible_window_is_reported() {
    let o = gwi(&with_m1(&["validate", "theorem1"], &["--n", "64", "--k1", "1.5", "--k2", "1"]));
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "infeasible_window");
}
