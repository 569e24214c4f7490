use std::path::PathBuf;
use std::process::{Command, Output};

fn plab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plab")).args(args).env_remove("PLAB_THREADS").output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_config(name: &str, text: &str) -> String {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_toml_exits_2() {
    let cfg = write_config("bad.toml", "[near-surface\nexpr = ");
    let out = plab(&["near-surface", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_exits_2() {
    let cfg = write_config("unknown.toml", "[near-surface]\nexpr = \"x1^3\"\ndomain = \"1,2\"\nQ = 10\ncolour = 1\n");
    let out = plab(&["near-surface", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn missing_key_and_bad_expression_exit_2() {
    assert_eq!(plab(&["near-surface", "--domain", "1,2", "--Q", "10"]).status.code(), Some(2));
    assert_eq!(plab(&["near-surface", "--expr", "x1^", "--domain", "1,2", "--Q", "10"]).status.code(), Some(2));
    let cfg = write_config("mismatch.toml", "experiment = \"oppenheim\"\n");
    assert_eq!(plab(&["near-surface", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn guard_trip_exits_3() {
    let out = plab(&["near-surface", "--expr", "x1^3", "--domain", "1,2", "--Q", "1000", "--max-work", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("region too large"));
    let out = plab(&[
        "parabola-count",
        "--generator",
        "builtin:jordan3",
        "--box",
        "0.4,2.6;0.4,2.6",
        "--T",
        "1",
        "--beta",
        "2",
        "--bruteforce",
        "true",
        "--guard",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn t_sweep_writes_one_csv_row_per_value() {
    let csv = scratch("sweep.csv");
    let out = plab(&[
        "parabola-count",
        "--generator",
        "builtin:sqrt2-quadric",
        "--box",
        "0.4,2.4;0.4,2.4",
        "--T",
        "50,100,200,400,800",
        "--beta",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,beta,count,volume,predicted,ratio,elapsed_ms,seed");
    assert_eq!(lines.len(), 6);
    for (line, t) in lines[1..].iter().zip(["50", "100", "200", "400", "800"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], t);
        let ratio: f64 = cols[5].parse().unwrap();
        assert!(ratio > 0.9 && ratio < 1.1, "{line}");
    }
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["params"]["T"].as_array().unwrap().len(), 5);
    assert_eq!(report["result"]["runs"].as_array().unwrap().len(), 5);
}

#[test]
fn report_embeds_resolved_config_and_warns_on_quadrics() {
    let out = plab(&["delta-curve", "--expr", "sqrt(3 - x1^2)", "--domain", "-8/5,8/5", "--Q", "4", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cfg = &report["config"];
    assert_eq!(cfg["experiment"], "delta-curve");
    assert_eq!(cfg["mode"], "exact");
    assert_eq!(cfg["params"]["points"], serde_json::json!([1, 2, 4]));
    assert!(cfg.get("threads").is_none());
    let last = &report["result"]["points"][2];
    assert_eq!(last["exact"], serde_json::json!({"a": "28", "b": "-16", "d": 3}));
    assert_eq!(report["warnings"].as_array().unwrap().len(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rational quadric"));
}

#[test]
fn threads_default_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_plab"))
        .args(["invariant-forms", "--generator", "builtin:jordan3"])
        .env("PLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_plab"))
        .args(["invariant-forms", "--generator", "builtin:jordan3"])
        .env("PLAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
