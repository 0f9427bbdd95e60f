use std::path::{Path, PathBuf};
use std::process::Command;

fn caldera() -> Command {
    Command::new(env!("CARGO_BIN_EXE_caldera"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn kprofile_writes_closed_form_values() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", r#"{"weights":[1,1,1],"f":[3,1,2]}"#);
    let out = dir.path().join("k.csv");
    let status = caldera()
        .args(["kprofile", "--kind", "K", "--t-grid", "geometric:1,3,2", "--instance"])
        .arg(&inst)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,value,a0_norm,a1_norm");
    let value = |line: &str| line.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!((value(lines[1]) - 3.0).abs() < 1e-12);
    assert!((value(lines[2]) - 6.0).abs() < 1e-12);
}

#[test]
fn kprofile_d_respects_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let f = vec!["1"; 23].join(",");
    let w = vec!["1"; 23].join(",");
    let inst = write(dir.path(), "i.json", &format!(r#"{{"weights":[{w}],"f":[{f}]}}"#));
    let out = caldera()
        .args(["kprofile", "--kind", "D", "--instance"])
        .arg(&inst)
        .arg("--out")
        .arg(dir.path().join("d.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn construct_operator_example() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", r#"{"weights":[1,1,1],"f":[4,0,0],"g":[2,2,0]}"#);
    let out = dir.path().join("t.json");
    let status = caldera().arg("construct-operator").arg("--instance").arg(&inst).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let v = json(&out);
    let e = &v["entries"];
    assert_eq!(e[0][0].as_f64().unwrap(), 0.5);
    assert_eq!(e[1][0].as_f64().unwrap(), 0.5);
    assert!(v["cert"]["residual"].as_f64().unwrap() <= 1e-12);
    assert!(v["cert"]["norm1"].as_f64().unwrap() <= 1.0 + 1e-12);
}

#[test]
fn lift_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", r#"{"weights":[1,1,1],"f":[2,-1,0.5],"g":[0.5,1,-0.25],"p":2}"#);
    for method in ["holder", "greedy"] {
        let out = dir.path().join(format!("{method}.json"));
        let status = caldera()
            .args(["lift", "--method", method, "--alpha", "auto", "--audit-samples", "500", "--seed", "3", "--instance"])
            .arg(&inst)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "{method}");
        let v = json(&out);
        assert_eq!(v["method"], method);
        assert!(v["passed"].as_bool().unwrap());
        assert!(v["certificates"]["residual_lf_g"].as_f64().unwrap() <= 1e-8);
        assert_eq!(v["L"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn lift_rejects_unordered_pair() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", r#"{"weights":[1,1],"f":[1,0],"g":[5,5],"p":2}"#);
    let out = caldera().arg("lift").arg("--instance").arg(&inst).arg("--out").arg(dir.path().join("l.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K-domination fails"));
}

#[test]
fn campaign_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "seed = 5\ninstance_count = 12\nn_min = 2\nn_max = 6\np_set = [1.5, 3.0]\nsuites = [\"sandwich\", \"lift-greedy\", \"lattice-props\"]\naudit_samples = 100\n",
    );
    let mut reports = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("r{k}.csv"));
        let js = dir.path().join(format!("r{k}.json"));
        let status = caldera()
            .env("CALDERA_THREADS", if k == 0 { "1" } else { "4" })
            .arg("campaign")
            .arg("--config")
            .arg(&cfg)
            .arg("--report")
            .arg(&csv)
            .arg("--json")
            .arg(&js)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        reports.push((std::fs::read(&csv).unwrap(), std::fs::read(&js).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports[0].0.clone()).unwrap();
    assert!(text.starts_with("suite,index,seed,n,p,max_ratio,violations,residual,runtime_ms,status"));
    assert!(text.lines().last().unwrap().starts_with("summary,"));
}

#[test]
fn campaign_with_no_suites_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\ninstance_count = 3\nn_min = 1\nn_max = 2\np_set = []\nsuites = []\n");
    let csv = dir.path().join("r.csv");
    let status = caldera().arg("campaign").arg("--config").arg(&cfg).arg("--report").arg(&csv).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);
}
