#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use serde_json::Value;

pub fn hmq() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hmq"));
    c.env_remove("HM_STREAM_ENDPOINT");
    c
}

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name)
}

pub fn load_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Validation messages, empty when `doc` conforms to the named schema.
pub fn schema_errors(schema: &str, doc: &Value) -> Vec<String> {
    let validator = jsonschema::validator_for(&load_json(&schema_path(schema))).expect("schema compiles");
    validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}

pub fn csv_header(command: &str) -> String {
    let headers = load_json(&schema_path("csv-headers.json"));
    let cols: Vec<&str> = headers[command].as_array().expect(command).iter().map(|c| c.as_str().unwrap()).collect();
    cols.join(",")
}

/// `hmq serve` on an ephemeral port, interrupted on drop.
pub struct Server {
    pub child: Child,
    pub addr: String,
    pub ready: Value,
}

impl Server {
    pub fn start(args: &[&str]) -> Server {
        let mut child = hmq()
            .arg("serve")
            .args(["--port", "0"])
            .args(args)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("spawn hmq serve");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).expect("listening line");
        let ready: Value = serde_json::from_str(&line).unwrap_or_else(|e| panic!("{line:?}: {e}"));
        let addr = ready["addr"].as_str().expect("addr").to_string();
        Server { child, addr, ready }
    }

    /// Sends SIGINT and waits for the exit code.
    pub fn interrupt(mut self) -> Option<i32> {
        let code = interrupt(&mut self.child);
        std::mem::forget(self);
        code
    }
}

fn interrupt(child: &mut Child) -> Option<i32> {
    let _ = Command::new("kill").args(["-INT", &child.id().to_string()]).status();
    child.wait().ok().and_then(|s| s.code())
}

impl Drop for Server {
    fn drop(&mut self) {
        interrupt(&mut self.child);
    }
}

/// Session log lines, parsed.
pub fn log_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{l:?}: {e}")))
        .collect()
}

pub fn without_metadata(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("metadata");
    v
}
