//! Artifact writers. Numbers are written with 17 significant digits and LF
//! line endings so identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const TRAJECTORY_HEADER: &str = "t,norm,lambda,Lambda,px,energy,coherence,qCoM";
pub const BRANCHES_HEADER: &str = "t,max_off_diag,spread_rate,density,nu_c";

/// Fixed-width scientific notation; `nan` marks a column the scenario does not define.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    num(x.unwrap_or(f64::NAN))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub px: Option<f64>,
    pub energy: f64,
    pub coherence: Option<f64>,
    pub qcom: Option<f64>,
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::with_capacity(200 * (rows.len() + 1));
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.norm),
            num(r.lambda),
            num(r.big_lambda),
            opt(r.px),
            num(r.energy),
            opt(r.coherence),
            opt(r.qcom)
        );
    }
    s
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BranchRow {
    pub t: f64,
    pub max_off_diag: f64,
    pub spread_rate: f64,
    pub density: f64,
    pub nu_c: usize,
}

pub fn branches_csv(rows: &[BranchRow]) -> String {
    let mut s = String::from(BRANCHES_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", num(r.t), num(r.max_off_diag), num(r.spread_rate), num(r.density), r.nu_c);
    }
    s
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub phases_dense: Option<bool>,
    pub phases_spread: Option<bool>,
    pub off_diagonal_flagged: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub name: String,
    pub max_abs_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub passed: bool,
}

/// Resolved random model parameters, so a run can be checked independently.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    pub couplings: Vec<f64>,
    pub bath_theta: Vec<f64>,
    pub pointer_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub t_final: f64,
    pub dt: f64,
    pub residuals: BTreeMap<String, f64>,
    pub nu_c: Option<usize>,
    pub max_off_diag: Option<f64>,
    pub validity: Validity,
    /// Scalar metrics that `sweep` tabulates.
    pub headline: BTreeMap<String, f64>,
    pub model: ModelEcho,
    pub oracles: Vec<OracleEntry>,
}

impl Summary {
    pub fn new(scenario: &str, seed: u64, t_final: f64, dt: f64) -> Self {
        Summary {
            scenario: scenario.to_string(),
            seed,
            samples: 0,
            t_final,
            dt,
            residuals: BTreeMap::new(),
            nu_c: None,
            max_off_diag: None,
            validity: Validity::default(),
            headline: BTreeMap::new(),
            model: ModelEcho::default(),
            oracles: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::write(dir.join(name), contents)
}
