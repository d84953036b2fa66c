use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn amdplab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amdplab"))
        .args(args)
        .current_dir(dir)
        .env_remove("AMDPLAB_THREADS")
        .output()
        .unwrap()
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = amdplab(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gen_hard(dir: &Path) {
    let out = amdplab(dir, &["gen-hard", "--n", "2", "--k", "2", "--gamma", "0.8", "--seed", "1", "--out", "h.json", "--truth", "t.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(amdplab(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(amdplab(dir.path(), &["solve", "--bogus"]).status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), "{\"num_states\": 1}").unwrap();
    assert_eq!(amdplab(dir.path(), &["mixing", "--model", "bad.json", "--enumerate"]).status.code(), Some(1));
    assert_eq!(amdplab(dir.path(), &["mixing", "--model", "missing.json", "--enumerate"]).status.code(), Some(1));
    gen_hard(dir.path());
    let out = amdplab(dir.path(), &["gen-hard", "--n", "2", "--k", "2", "--gamma", "0.8", "--eps", "0.5", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mixing_of_hard_instance_is_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    gen_hard(dir.path());
    let v = ok_json(dir.path(), &["mixing", "--model", "h.json", "--enumerate"]);
    let t = v["t_mix"].as_u64().unwrap();
    assert!(t >= 1 && t as f64 <= 8.0 / 0.2);
    assert_eq!(v["policies_checked"].as_u64(), Some(4));
}

#[test]
fn solve_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    gen_hard(dir.path());
    let report = ok_json(
        dir.path(),
        &["solve", "--model", "h.json", "--eps", "0.1", "--tmix", "7", "--samples-per-pair", "2000", "--out", "p.json"],
    );
    assert_eq!(report["samples_per_pair"].as_u64(), Some(2000));
    assert!(dir.path().join("p.json").exists());
    let v = ok_json(dir.path(), &["eval", "--model", "h.json", "--policy", "p.json", "--gamma", "0.9"]);
    let gain = v["gain"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&gain));
    let rescaled = v["rescaled_values"].as_array().unwrap();
    let discounted = v["discounted_values"].as_array().unwrap();
    for (r, d) in rescaled.iter().zip(discounted) {
        assert!((r.as_f64().unwrap() - 0.1 * d.as_f64().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn upper_experiment_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"instance": {"kind": "hard", "n": 2, "k": 2, "gamma_lb": 0.8}, "eps": [0.1], "samples_per_pair": [30], "trials": 3}"#,
    )
    .unwrap();
    let a = amdplab(dir.path(), &["exp-ub", "--config", "c.json"]);
    let b = amdplab(dir.path(), &["--threads", "3", "exp-ub", "--config", "c.json"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("instance_id,trial_seed,"));
}
