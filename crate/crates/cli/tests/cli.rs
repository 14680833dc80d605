mod common;

use std::fs;
use std::process::Output;

use common::*;
use hm_core::estimator::FactoryConfig;
use serde_json::Value;

fn ok(out: Output) -> String {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    hmq().args(args).output().unwrap().status.code().unwrap()
}

fn run_json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(hmq().arg("run").args(args).output().unwrap())).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["run", "--local", "--shots", "0"]), 2);
    assert_eq!(code(&["run", "--no-such-flag"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["figure2b"]), 2);
    assert_eq!(code(&["run", "--local", "--n", "12"]), 4);
    assert_eq!(code(&["run", "--local", "--alpha", "3/4"]), 4);
    assert_eq!(code(&["estimate", "--n-list", "1e6,3"]), 4);
    assert_eq!(code(&["bound", "--epsilon", "0.6"]), 4);
    assert_eq!(code(&["run", "--endpoint", "127.0.0.1:1", "--shots", "2", "--retries", "0"]), 3);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn estimate_errors_name_the_row() {
    let out = hmq().args(["estimate", "--n-list", "1e6,3"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("n = 3"));
}

#[test]
fn local_run_is_schema_valid_and_deterministic() {
    let args = ["--local", "--n", "16", "--shots", "300", "--seed", "9", "--exact", "--jobs", "3"];
    let a = run_json(&args);
    let errors = schema_errors("results.schema.json", &a);
    assert!(errors.is_empty(), "{errors:#?}");
    let b = run_json(&["--local", "--n", "16", "--shots", "300", "--seed", "9", "--exact", "--jobs", "1"]);
    assert_eq!(without_metadata(a.clone()), without_metadata(b));
    assert_eq!(a["completed"], 300);
    let exact = &a["exact"];
    for (k, want) in [("p_correct", 0.25), ("p_wrong", 0.125), ("p_null", 0.625)] {
        assert!((exact[k].as_f64().unwrap() - want).abs() < 1e-9, "{k}");
    }
}

#[test]
fn noisy_run_records_level() {
    let r = run_json(&["--local", "--n", "8", "--shots", "20", "--noise-p", "1e-3"]);
    assert_eq!(r["noise"]["level"], "physical");
    assert!(schema_errors("results.schema.json", &r).is_empty());
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "n = 8\nshots = 40\nlocal = true\nseed = 4\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = run_json(&["--config", c]);
    assert_eq!(from_file["instance"]["n"], 8);
    assert_eq!(from_file["shots"], 40);
    let overridden = run_json(&["--config", c, "--shots", "12"]);
    assert_eq!(overridden["shots"], 12);
    assert_eq!(overridden["instance"]["n"], 8);

    let printed = ok(hmq().args(["run", "--config", c, "--print-config"]).output().unwrap());
    let again = dir.path().join("again.toml");
    fs::write(&again, &printed).unwrap();
    let reprinted = ok(hmq().args(["run", "--config", again.to_str().unwrap(), "--print-config"]).output().unwrap());
    assert_eq!(printed, reprinted);

    fs::write(&cfg, "bogus-key = 1\n").unwrap();
    assert_eq!(code(&["run", "--config", c]), 2);
}

#[test]
fn csv_outputs_have_catalogued_headers() {
    for (name, args) in [
        ("counts", vec!["counts"]),
        ("vote", vec!["vote"]),
        ("vote --infidelity", vec!["vote", "--infidelity"]),
        ("bound", vec!["bound"]),
        ("estimate", vec!["estimate"]),
        ("figure2b", vec!["figure2b", "--exact-n-list", "8"]),
    ] {
        let first = ok(hmq().args(&args).output().unwrap());
        assert_eq!(first.lines().next().unwrap(), csv_header(name), "{name}");
        let second = ok(hmq().args(&args).output().unwrap());
        assert_eq!(first, second, "{name} is not reproducible");
    }
}

#[test]
fn table_anchors() {
    let vote = ok(hmq().args(["vote", "--alpha", "0.25"]).output().unwrap());
    assert_eq!(vote.lines().nth(1).unwrap().split(',').nth(2), Some("5"));

    let bound = ok(hmq().args(["bound", "--n", "1e6", "--alpha", "0.25"]).output().unwrap());
    let row: Vec<f64> = bound.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[3] / 2.10e3 - 1.0).abs() < 0.01);
    assert!((row[4] / 1.25e2 - 1.0).abs() < 0.01);

    let est = ok(hmq().args(["estimate", "--n-list", "1e10,1e11,1e12", "--code", "two-gross", "--p", "1e-4"]).output().unwrap());
    assert_eq!(est.lines().count(), 4);
}

#[test]
fn figure2b_copies() {
    let text = ok(hmq().args(["figure2b", "--exact-n-list", "4,16,64", "--gamma-list", "1,0.5"]).output().unwrap());
    let mut rdr = csv_rows(&text);
    for row in rdr.by_ref() {
        let (n, gamma, copies): (u64, &str, &str) = (row[0].parse().unwrap(), &row[3], &row[7]);
        let width = u64::from(n.trailing_zeros()) + 2;
        if gamma == "1" {
            assert_eq!(copies, "5");
            assert_eq!(row[9], (5 * width).to_string());
        } else {
            assert!(copies.parse::<u64>().unwrap() > 5);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.json");
    let mut r = run_json(&["--local", "--n", "8", "--shots", "10"]);
    r["p_hat"]["correct"]["value"] = 0.2.into();
    r["p_hat"]["wrong"]["value"] = 0.2.into();
    fs::write(&flat, r.to_string()).unwrap();
    let text = ok(hmq().args(["figure2b", "--results", flat.to_str().unwrap(), "--k-max", "50"]).output().unwrap());
    let row = csv_rows(&text).next().unwrap();
    assert_eq!(row[1], "measured");
    assert_eq!(row[7], "unbounded");
}

fn csv_rows(text: &str) -> impl Iterator<Item = Vec<String>> + '_ {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect())
}

#[test]
fn factory_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("factories.json");
    let doc = serde_json::to_value(FactoryConfig::default()).unwrap();
    assert!(schema_errors("factory-config.schema.json", &doc).is_empty());
    fs::write(&path, doc.to_string()).unwrap();
    let p = path.to_str().unwrap();
    let builtin = ok(hmq().args(["estimate", "--code", "two-gross"]).output().unwrap());
    let from_file = ok(hmq().args(["estimate", "--code", "two-gross", "--factory-config", p]).output().unwrap());
    assert_eq!(builtin, from_file);

    fs::write(&path, r#"{"surface": [], "bivariate_bicycle": [], "bb360_module_scale": 1}"#).unwrap();
    assert_eq!(code(&["estimate", "--factory-config", p]), 4);
}

#[test]
fn serve_archives_and_replays_instances() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let s = Server::start(&["--n", "32", "--case", "no", "--seed", "7", "--save-instance", first.to_str().unwrap()]);
    assert!(schema_errors("listening.schema.json", &s.ready).is_empty());
    assert_eq!(s.ready["n"], 32);
    assert_eq!(s.interrupt(), Some(0));
    assert!(schema_errors("instance.schema.json", &load_json(&first)).is_empty());

    let s = Server::start(&["--instance", first.to_str().unwrap(), "--save-instance", second.to_str().unwrap()]);
    assert_eq!(s.ready["n"], 32);
    drop(s);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn port_in_use_fails() {
    let s = Server::start(&["--n", "8"]);
    let port = s.addr.rsplit(':').next().unwrap();
    let out = hmq().args(["serve", "--n", "8", "--port", port]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn networked_run_matches_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sessions.jsonl");
    let s = Server::start(&["--n", "16", "--seed", "2", "--log", log.to_str().unwrap()]);
    let r = run_json(&["--endpoint", &s.addr, "--n", "16", "--seed", "2", "--shots", "150", "--jobs", "4"]);
    assert!(schema_errors("results.schema.json", &r).is_empty());
    assert_eq!(r["mode"], "network");
    assert_eq!(r["completed"], 150);

    let mismatch = hmq().args(["run", "--endpoint", &s.addr, "--n", "32", "--shots", "1"]).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(4));

    let env = hmq().env("HM_STREAM_ENDPOINT", &s.addr).args(["run", "--n", "16", "--seed", "2", "--shots", "5"]).output();
    assert!(env.unwrap().status.success());
    assert_eq!(s.interrupt(), Some(0));

    let lines = log_lines(&log);
    for l in &lines {
        let errors = schema_errors("session-log.schema.json", l);
        assert!(errors.is_empty(), "{errors:?}");
    }
    let results = lines.iter().filter(|l| !l["result"].is_null()).count();
    assert_eq!(results, 155);
    let counts = &r["counts"];
    let served: u64 = ["yes", "no", "null"].iter().map(|k| counts[*k].as_u64().unwrap()).sum();
    assert_eq!(served, 150);
}
