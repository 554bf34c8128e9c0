//! Scenario files: which operation to run, on which graph, with which seed.

use std::path::{Path, PathBuf};

use contact_core::process::PastEvent;
use contact_core::GraphSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::checks::Fault;
use crate::estimators::Observable;
use crate::events::Cylinder;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Read { path: String, msg: String },
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub graph: GraphSpec,
    pub lambda: f64,
    pub operation: String,
    #[serde(default)]
    pub params: Value,
    pub reps: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn one() -> f64 {
    1.0
}
fn zero_vertex() -> Vec<usize> {
    vec![0]
}
fn floor() -> f64 {
    1e-3
}
fn five() -> f64 {
    5.0
}
fn two() -> f64 {
    2.0
}

/// Parameters shared by operations on the stationary law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryOpts {
    #[serde(default = "zero_vertex")]
    pub delta: Vec<usize>,
    pub burn_in: f64,
    /// Pilot size for the doubled-truncation check; 0 skips it.
    #[serde(default)]
    pub truncation_pilot: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    SurvivalProb {
        #[serde(default)]
        x: usize,
        horizon: f64,
    },
    LambdaC {
        horizon: f64,
        bracket: (f64, f64),
        #[serde(default)]
        tolerance: Option<f64>,
        #[serde(default)]
        threshold: Option<f64>,
    },
    Beta {
        n_list: Vec<u32>,
        #[serde(default)]
        horizon_per_site: Option<f64>,
        #[serde(default)]
        horizon_offset: Option<f64>,
        #[serde(default = "floor")]
        floor: f64,
    },
    TauTail {
        #[serde(default)]
        x: usize,
        t_grid: Vec<f64>,
        horizon: f64,
        fit_range: (f64, f64),
    },
    AlphaMixing {
        #[serde(flatten)]
        stationary: StationaryOpts,
        run_length: f64,
        t_grid: Vec<f64>,
        dt: f64,
        batches: usize,
    },
    PhiMixing {
        #[serde(flatten)]
        stationary: StationaryOpts,
        t_grid: Vec<f64>,
        /// Default pasts: all healthy and all infected on `delta` over
        /// `[-past_window, 0]`.
        #[serde(default = "one")]
        past_window: f64,
        #[serde(default)]
        pasts: Option<Vec<PastEvent>>,
        #[serde(default = "floor")]
        floor: f64,
    },
    Rho {
        #[serde(flatten)]
        stationary: StationaryOpts,
        #[serde(default)]
        slot: usize,
        t_grid: Vec<f64>,
    },
    ShapeMixing {
        #[serde(default)]
        y: usize,
        theta: f64,
        t_grid: Vec<f64>,
        horizon: f64,
        burn_in: f64,
        #[serde(default = "floor")]
        floor: f64,
        #[serde(default = "one")]
        safety: f64,
    },
    Cutoff {
        n_list: Vec<u32>,
        epsilon: f64,
        r: u32,
        /// Estimated first (with `beta_reps` replicates) when absent.
        #[serde(default)]
        beta_hat: Option<f64>,
        #[serde(default)]
        beta_reps: Option<u64>,
        burn_in: f64,
        #[serde(default)]
        safety: Option<f64>,
    },
    Clt {
        #[serde(flatten)]
        stationary: StationaryOpts,
        observable: Observable,
        t: f64,
        long_run: f64,
        batches: usize,
    },
    RateFunction {
        #[serde(flatten)]
        stationary: StationaryOpts,
        observable: Observable,
        grid: Vec<f64>,
        horizons: Vec<f64>,
        #[serde(default)]
        half_width: Option<f64>,
        #[serde(default)]
        min_hits: Option<u64>,
    },
    CompleteConvergence {
        #[serde(default = "zero_vertex")]
        initial: Vec<usize>,
        window: Vec<usize>,
        t_grid: Vec<f64>,
        horizon: f64,
        burn_in: f64,
        #[serde(default)]
        stationary_reps: Option<u64>,
    },
    Front {
        radius: u32,
        horizon: f64,
        step: f64,
    },
    Trajectory {
        #[serde(default = "zero_vertex")]
        initial: Vec<usize>,
        /// Every vertex when absent.
        #[serde(default)]
        record: Option<Vec<usize>>,
        horizon: f64,
    },
    CheckMonotone {
        #[serde(default = "five")]
        horizon: f64,
        #[serde(default)]
        fault: Fault,
    },
    CheckAdditivity {
        #[serde(default = "five")]
        horizon: f64,
        #[serde(default)]
        fault: Fault,
    },
    CheckDualityIdentity {
        #[serde(default = "two")]
        t: f64,
        #[serde(default)]
        fault: Fault,
    },
    CheckSelfDuality {
        delta: Vec<usize>,
        target: Vec<usize>,
        t: f64,
    },
    CheckPositiveAssociation {
        #[serde(flatten)]
        stationary: StationaryOpts,
        #[serde(default)]
        pairs: Option<Vec<(Cylinder, Cylinder)>>,
    },
    CheckDfkg {
        #[serde(flatten)]
        stationary: StationaryOpts,
        #[serde(default)]
        zero_window: Option<(f64, f64)>,
        #[serde(default)]
        pasts: Option<Vec<PastEvent>>,
        #[serde(default)]
        futures: Option<Vec<Cylinder>>,
        #[serde(default = "floor")]
        floor: f64,
    },
    CheckGenerator {
        t: f64,
        /// Every vertex when absent.
        #[serde(default)]
        initial: Option<Vec<usize>>,
    },
}

pub const OPERATIONS: &[&str] = &[
    "survival_prob",
    "lambda_c",
    "beta",
    "tau_tail",
    "alpha_mixing",
    "phi_mixing",
    "rho",
    "shape_mixing",
    "cutoff",
    "clt",
    "rate_function",
    "complete_convergence",
    "front",
    "trajectory",
    "check_monotone",
    "check_additivity",
    "check_duality_identity",
    "check_self_duality",
    "check_positive_association",
    "check_dfkg",
    "check_generator",
];

impl Operation {
    pub fn is_check(&self) -> bool {
        matches!(
            self,
            Operation::CheckMonotone { .. }
                | Operation::CheckAdditivity { .. }
                | Operation::CheckDualityIdentity { .. }
                | Operation::CheckSelfDuality { .. }
                | Operation::CheckPositiveAssociation { .. }
                | Operation::CheckDfkg { .. }
                | Operation::CheckGenerator { .. }
        )
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.schema != SCHEMA {
            return bad(format!("schema {} is not supported (expected {SCHEMA})", self.schema));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return bad(format!("name `{}` must be a plain non-empty file name", self.name));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !OPERATIONS.contains(&self.operation.as_str()) {
            return bad(format!("unknown operation `{}`; known: {}", self.operation, OPERATIONS.join(", ")));
        }
        self.op()?;
        contact_core::build_graph(&self.graph).map_err(|e| ConfigError::Invalid(format!("graph: {e}")))?;
        Ok(())
    }

    /// The typed operation and its parameters.
    pub fn op(&self) -> Result<Operation, ConfigError> {
        let params = if self.params.is_null() { Value::Object(Default::default()) } else { self.params.clone() };
        let tagged = serde_json::json!({ "operation": self.operation, "params": params });
        serde_json::from_value(tagged).map_err(|e| ConfigError::Invalid(format!("params of `{}`: {e}", self.operation)))
    }
}

/// A list of scenarios, inline or as paths relative to the suite file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub scenarios: Vec<SuiteEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuiteEntry {
    Path(PathBuf),
    Inline(Box<Scenario>),
}

impl Suite {
    pub fn load(path: &Path) -> Result<(Self, Vec<Scenario>), ConfigError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| ConfigError::Read { path: p.display().to_string(), msg: e.to_string() });
        let suite: Suite = serde_json::from_str(&read(path)?).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        if suite.schema != SCHEMA {
            return Err(ConfigError::Invalid(format!("suite schema {} is not supported", suite.schema)));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let mut scenarios = Vec::with_capacity(suite.scenarios.len());
        for entry in &suite.scenarios {
            let s = match entry {
                SuiteEntry::Path(p) => Scenario::load(&base.join(p))?,
                SuiteEntry::Inline(s) => {
                    s.validate()?;
                    (**s).clone()
                }
            };
            if scenarios.iter().any(|o: &Scenario| o.name == s.name) {
                return Err(ConfigError::Invalid(format!("duplicate scenario name `{}`", s.name)));
            }
            scenarios.push(s);
        }
        Ok((suite, scenarios))
    }
}
