#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_branchsim");

/// Writes `body` (plus an `output` line pointing into `dir`) as a config file.
pub fn config(dir: &Path, name: &str, body: &str) -> (PathBuf, PathBuf) {
    let out = dir.join(format!("{name}-out"));
    let path = dir.join(format!("{name}.cfg"));
    std::fs::write(&path, format!("{body}\noutput = {}\n", out.display())).unwrap();
    (path, out)
}

pub fn branchsim(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("BRANCHSIM_THREADS", t),
        None => cmd.env_remove("BRANCHSIM_THREADS"),
    };
    cmd.output().unwrap()
}

pub fn run(cfg: &Path, threads: Option<&str>) -> Output {
    branchsim(&["run", cfg.to_str().unwrap()], threads)
}

pub fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

pub fn residual(s: &serde_json::Value, key: &str) -> f64 {
    s["residuals"][key].as_f64().unwrap_or_else(|| panic!("missing residual {key}"))
}

pub fn headline(s: &serde_json::Value, key: &str) -> f64 {
    s["headline"][key].as_f64().unwrap_or_else(|| panic!("missing headline {key}"))
}

/// Data rows of a CSV file as `header -> column` lookups.
pub fn csv_column(path: &Path, column: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap_or_else(|| panic!("no column {column}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

pub fn schema_validator() -> jsonschema::Validator {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../../schema/summary.schema.json")).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}
