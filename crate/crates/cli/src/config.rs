//! Flat `key = value` scenario configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear at
//! most once; unknown keys are rejected with the offending line number.

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use branchsim_core::branches::{WeightMode, DEFAULT_OFFDIAG_THRESHOLD};
use branchsim_core::exactprop::Method;
use branchsim_core::hamiltonian::Boundary;
use branchsim_core::hilbert::DEFAULT_MAX_JOINT_DIM;

use crate::error::{CliError, ConfigError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Dephasing,
    Grid2Body,
    ClassicalLimit,
    BranchStudy,
    Check,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Dephasing => "dephasing",
            Scenario::Grid2Body => "grid2body",
            Scenario::ClassicalLimit => "classical-limit",
            Scenario::BranchStudy => "branch-study",
            Scenario::Check => "check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    Harmonic,
    Free,
    Linear,
}

/// Pointer eigenvalues of the branch-study system: `nu - c` or `(nu - c)^2 / N`
/// with `c` the central index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointerProfile {
    Linear,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchBasis {
    Pointer,
    Energy,
}

/// Resolved configuration; every field has a default.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub output: PathBuf,
    pub hbar: f64,
    pub t_final: f64,
    pub dt: f64,
    pub method: Method,
    pub max_joint_dim: usize,
    // qubit models
    pub k: usize,
    pub g_scale: f64,
    pub couplings: Option<Vec<f64>>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub system_x: f64,
    pub system_z: f64,
    pub system_theta: f64,
    pub drive_rate: f64,
    // grids
    /// Points per particle grid; resolved per scenario when unset.
    pub grid_points: Option<usize>,
    pub length: f64,
    pub boundary: Boundary,
    pub mass: f64,
    pub mass_b: f64,
    pub softening: f64,
    pub q_product: f64,
    pub potential: Potential,
    pub omega: f64,
    pub force: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub x0_b: f64,
    pub p0_b: f64,
    // branches
    pub branches: usize,
    pub pointer: PointerProfile,
    pub basis: BranchBasis,
    pub weight_mode: WeightMode,
    pub window: usize,
    pub offdiag_threshold: f64,
    /// Also write the per-sample branch diagnostics to `branches.csv`.
    pub write_branches: bool,
    // check
    pub filter: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Dephasing,
            seed: 0,
            output: PathBuf::from("out"),
            hbar: 1.0,
            t_final: 1.0,
            dt: 1e-3,
            method: Method::Krylov,
            max_joint_dim: DEFAULT_MAX_JOINT_DIM,
            k: 2,
            g_scale: 1.0,
            couplings: None,
            theta_min: std::f64::consts::FRAC_PI_6,
            theta_max: std::f64::consts::FRAC_PI_3,
            system_x: 0.5,
            system_z: 0.0,
            system_theta: 0.0,
            drive_rate: 0.0,
            grid_points: None,
            length: 20.0,
            boundary: Boundary::HardWall,
            mass: 1.0,
            mass_b: 1.0,
            softening: 0.25,
            q_product: 1.0,
            potential: Potential::Harmonic,
            omega: 1.0,
            force: 0.2,
            x0: 1.0,
            p0: 0.0,
            sigma: std::f64::consts::FRAC_1_SQRT_2,
            x0_b: -1.0,
            p0_b: 0.0,
            branches: 8,
            pointer: PointerProfile::Linear,
            basis: BranchBasis::Pointer,
            weight_mode: WeightMode::ModSquared,
            window: 5,
            offdiag_threshold: DEFAULT_OFFDIAG_THRESHOLD,
            write_branches: false,
            filter: None,
        }
    }
}

/// Keys that `sweep` may vary.
pub const SWEEPABLE: [&str; 4] = ["K", "g_scale", "dt", "branches"];

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got {v:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("value must be finite, got {v:?}"))
    }
}

fn parse_positive(v: &str) -> Result<f64, String> {
    let x = parse_f64(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("value must be positive, got {v:?}"))
    }
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got {v:?}"))
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| parse_f64(s.trim())).collect()
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got {body:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(ConfigError::at(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
            seen.push((key.to_string(), line));
            cfg.set(key, value).map_err(|m| ConfigError::at(line, m))?;
        }
        cfg.validate().map_err(ConfigError::global)?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(ConfigError::global(format!("cannot read {}: {e}", path.display()))))?;
        Ok(Self::parse(&text)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "scenario" => {
                self.scenario = match value {
                    "dephasing" => Scenario::Dephasing,
                    "grid2body" => Scenario::Grid2Body,
                    "classical-limit" => Scenario::ClassicalLimit,
                    "branch-study" => Scenario::BranchStudy,
                    "check" => Scenario::Check,
                    _ => return Err(format!("unknown scenario {value:?}")),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| format!("expected an unsigned integer, got {value:?}"))?,
            "output" => {
                if value.is_empty() {
                    return Err("output directory must not be empty".into());
                }
                self.output = PathBuf::from(value)
            }
            "hbar" => self.hbar = parse_positive(value)?,
            "T" => self.t_final = parse_positive(value)?,
            "dt" => self.dt = parse_positive(value)?,
            "method" => {
                self.method = match value {
                    "krylov" => Method::Krylov,
                    "split" => Method::SplitSecondOrder,
                    _ => return Err(format!("unknown method {value:?} (krylov, split)")),
                }
            }
            "max_joint_dim" => self.max_joint_dim = parse_usize(value)?,
            "K" => self.k = parse_usize(value)?,
            "g_scale" => self.g_scale = parse_f64(value)?,
            "couplings" => self.couplings = Some(parse_list(value)?),
            "theta_min" => self.theta_min = parse_f64(value)?,
            "theta_max" => self.theta_max = parse_f64(value)?,
            "system_x" => self.system_x = parse_f64(value)?,
            "system_z" => self.system_z = parse_f64(value)?,
            "system_theta" => self.system_theta = parse_f64(value)?,
            "drive_rate" => self.drive_rate = parse_f64(value)?,
            "grid_points" => self.grid_points = Some(parse_usize(value)?),
            "length" => self.length = parse_positive(value)?,
            "boundary" => {
                self.boundary = match value {
                    "hardwall" => Boundary::HardWall,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(format!("unknown boundary {value:?} (hardwall, periodic)")),
                }
            }
            "mass" => self.mass = parse_positive(value)?,
            "mass_b" => self.mass_b = parse_positive(value)?,
            "softening" => self.softening = parse_positive(value)?,
            "q_product" => self.q_product = parse_f64(value)?,
            "potential" => {
                self.potential = match value {
                    "harmonic" => Potential::Harmonic,
                    "free" => Potential::Free,
                    "linear" => Potential::Linear,
                    _ => return Err(format!("unknown potential {value:?} (harmonic, free, linear)")),
                }
            }
            "omega" => self.omega = parse_f64(value)?,
            "force" => self.force = parse_f64(value)?,
            "x0" => self.x0 = parse_f64(value)?,
            "p0" => self.p0 = parse_f64(value)?,
            "sigma" => self.sigma = parse_positive(value)?,
            "x0_b" => self.x0_b = parse_f64(value)?,
            "p0_b" => self.p0_b = parse_f64(value)?,
            "branches" => self.branches = parse_usize(value)?,
            "pointer" => {
                self.pointer = match value {
                    "linear" => PointerProfile::Linear,
                    "quadratic" => PointerProfile::Quadratic,
                    _ => return Err(format!("unknown pointer profile {value:?} (linear, quadratic)")),
                }
            }
            "basis" => {
                self.basis = match value {
                    "pointer" => BranchBasis::Pointer,
                    "energy" => BranchBasis::Energy,
                    _ => return Err(format!("unknown basis {value:?} (pointer, energy)")),
                }
            }
            "weight_mode" => {
                self.weight_mode = match value {
                    "mod-squared" => WeightMode::ModSquared,
                    "amplitude" => WeightMode::Amplitude,
                    _ => return Err(format!("unknown weight mode {value:?} (mod-squared, amplitude)")),
                }
            }
            "window" => self.window = parse_usize(value)?,
            "offdiag_threshold" => self.offdiag_threshold = parse_positive(value)?,
            "write_branches" => {
                self.write_branches = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("expected true or false, got {value:?}")),
                }
            }
            "filter" => self.filter = (!value.is_empty()).then(|| value.to_string()),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Grid size in effect: 48 points per particle for two-body runs (joint
    /// dimension 2304), 256 otherwise.
    pub fn points(&self) -> usize {
        self.grid_points.unwrap_or(match self.scenario {
            Scenario::Grid2Body => 48,
            _ => 256,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.scenario == Scenario::Check {
            return Ok(());
        }
        if self.dt >= self.t_final {
            return Err(format!("dt = {} must be smaller than T = {}", self.dt, self.t_final));
        }
        if self.max_joint_dim == 0 {
            return Err("max_joint_dim must be positive".into());
        }
        match self.scenario {
            Scenario::Dephasing | Scenario::BranchStudy => {
                if self.k == 0 && self.couplings.is_none() {
                    return Err("K must be at least 1".into());
                }
                if let Some(c) = &self.couplings {
                    if c.len() != self.k {
                        return Err(format!("couplings lists {} values but K = {}", c.len(), self.k));
                    }
                }
                if self.theta_min > self.theta_max {
                    return Err("theta_min must not exceed theta_max".into());
                }
                if self.scenario == Scenario::BranchStudy && self.branches < 2 {
                    return Err("branch-study needs at least 2 branches".into());
                }
                if self.window == 0 {
                    return Err("window must be positive".into());
                }
            }
            Scenario::Grid2Body | Scenario::ClassicalLimit => {
                if self.points() < 3 {
                    return Err("grids need at least 3 points".into());
                }
            }
            Scenario::Check => {}
        }
        Ok(())
    }

    /// Resolved configuration in canonical `key = value` form, parseable by [`ScenarioConfig::parse`].
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario", &self.scenario.name());
        kv("seed", &self.seed);
        kv("output", &self.output.display());
        kv("hbar", &self.hbar);
        kv("T", &self.t_final);
        kv("dt", &self.dt);
        kv("method", &match self.method {
            Method::Krylov => "krylov",
            Method::SplitSecondOrder => "split",
        });
        kv("max_joint_dim", &self.max_joint_dim);
        kv("K", &self.k);
        kv("g_scale", &self.g_scale);
        if let Some(c) = &self.couplings {
            kv("couplings", &c.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        }
        kv("theta_min", &self.theta_min);
        kv("theta_max", &self.theta_max);
        kv("system_x", &self.system_x);
        kv("system_z", &self.system_z);
        kv("system_theta", &self.system_theta);
        kv("drive_rate", &self.drive_rate);
        kv("grid_points", &self.points());
        kv("length", &self.length);
        kv("boundary", &match self.boundary {
            Boundary::HardWall => "hardwall",
            Boundary::Periodic => "periodic",
        });
        kv("mass", &self.mass);
        kv("mass_b", &self.mass_b);
        kv("softening", &self.softening);
        kv("q_product", &self.q_product);
        kv("potential", &match self.potential {
            Potential::Harmonic => "harmonic",
            Potential::Free => "free",
            Potential::Linear => "linear",
        });
        kv("omega", &self.omega);
        kv("force", &self.force);
        kv("x0", &self.x0);
        kv("p0", &self.p0);
        kv("sigma", &self.sigma);
        kv("x0_b", &self.x0_b);
        kv("p0_b", &self.p0_b);
        kv("branches", &self.branches);
        kv("pointer", &match self.pointer {
            PointerProfile::Linear => "linear",
            PointerProfile::Quadratic => "quadratic",
        });
        kv("basis", &match self.basis {
            BranchBasis::Pointer => "pointer",
            BranchBasis::Energy => "energy",
        });
        kv("weight_mode", &match self.weight_mode {
            WeightMode::ModSquared => "mod-squared",
            WeightMode::Amplitude => "amplitude",
        });
        kv("window", &self.window);
        kv("offdiag_threshold", &self.offdiag_threshold);
        kv("write_branches", &self.write_branches);
        if let Some(f) = &self.filter {
            kv("filter", f);
        }
        s
    }
}
