//! Configuration: one JSON document per run, overridden by flags.

use std::path::{Path, PathBuf};

use khintchine_core::dani::ApproxFunction;
use khintchine_core::ifs::{builtin, IfsDescription, IfsSystem};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const WORKERS_ENV: &str = "KHINTCHINE_LAB_WORKERS";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub system: Option<SystemSpec>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub parameters: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A builtin name such as `cantor:2`, or a full IFS description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Builtin(String),
    Custom(IfsDescription),
}

impl SystemSpec {
    pub fn build(&self) -> Result<IfsSystem, CliError> {
        match self {
            SystemSpec::Builtin(name) => builtin(name).map_err(|e| CliError::Config(format!("system: {e}"))),
            SystemSpec::Custom(desc) => desc.to_system().map_err(|e| CliError::Config(format!("system: {e}"))),
        }
    }

    pub fn is_cantor(&self) -> bool {
        matches!(self, SystemSpec::Builtin(name) if name.starts_with("cantor:"))
    }
}

/// `power:C:A`, `powerlog:C:A:B[:X0]`, or a full JSON description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PsiSpec {
    Text(String),
    Full(ApproxFunction),
}

impl PsiSpec {
    pub fn build(&self) -> Result<ApproxFunction, CliError> {
        let bad = |msg: String| CliError::Config(format!("psi: {msg}"));
        match self {
            PsiSpec::Full(f) => {
                f.validate().map_err(|e| bad(e.to_string()))?;
                Ok(f.clone())
            }
            PsiSpec::Text(text) => {
                let mut parts = text.split(':');
                let kind = parts.next().unwrap_or_default();
                let nums: Vec<f64> = parts
                    .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("`{p}` is not a number in `{text}`"))))
                    .collect::<Result<_, _>>()?;
                let f = match (kind, nums.as_slice()) {
                    ("power", [c, a]) => ApproxFunction::power(*c, *a),
                    ("powerlog", [c, a, b]) => ApproxFunction::power_log(*c, *a, *b, 1.0),
                    ("powerlog", [c, a, b, x0]) => ApproxFunction::power_log(*c, *a, *b, *x0),
                    _ => return Err(bad(format!("expected power:C:A or powerlog:C:A:B[:X0], got `{text}`"))),
                };
                f.map_err(|e| bad(e.to_string()))
            }
        }
    }
}

/// Merges flag values over file parameters and deserializes the result,
/// rejecting unknown keys.
pub fn merge_parameters<T: DeserializeOwned>(file: &Map<String, Value>, flags: Value) -> Result<T, CliError> {
    let mut merged = file.clone();
    if let Value::Object(m) = flags {
        for (k, v) in m {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("parameters: {e}")))
}

/// Flag, then file, then `KHINTCHINE_LAB_WORKERS`, then the machine's
/// parallelism.
pub fn resolve_workers(flag: Option<usize>, file: Option<usize>) -> Result<usize, CliError> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{WORKERS_ENV}: `{v}` is not a worker count")))?,
        ),
        _ => None,
    };
    let w = flag
        .or(file)
        .or(env)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if w == 0 {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub walks: usize,
    pub steps: usize,
    pub level: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams { walks: 10, steps: 1000, level: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcursionsParams {
    /// Diagonal orbits checked against the growth bound.
    pub orbits: usize,
    pub n_max: usize,
    pub level: f64,
    pub grid_refine: usize,
    /// Random walks pooled for the tail estimate (0 skips it).
    pub walks: usize,
    pub steps: usize,
    pub tail_level: f64,
    pub m: Option<usize>,
    pub delta: Option<f64>,
    /// Used for the default `(m, δ)`; the similarity dimension when absent.
    pub varpi: Option<f64>,
}

impl Default for ExcursionsParams {
    fn default() -> Self {
        ExcursionsParams {
            orbits: 20,
            n_max: 2000,
            level: 1.0,
            grid_refine: 2,
            walks: 200,
            steps: 5000,
            tail_level: 3.0,
            m: None,
            delta: None,
            varpi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DaniParams {
    pub psi: PsiSpec,
    pub d: usize,
    /// The similarity dimension of the system when absent.
    pub alpha: Option<f64>,
    pub t_max: f64,
    pub points: usize,
}

impl Default for DaniParams {
    fn default() -> Self {
        DaniParams { psi: PsiSpec::Text("power:1:1".into()), d: 1, alpha: None, t_max: 40.0, points: 81 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxParams {
    pub point: String,
    pub psi: PsiSpec,
    pub q_max: u64,
    pub cross_check: bool,
    pub tol: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            point: "golden".into(),
            psi: PsiSpec::Text("power:0.44:1".into()),
            q_max: 10_000,
            cross_check: true,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveyParams {
    pub psi: PsiSpec,
    pub points: usize,
    pub q_max: u64,
    pub depth: Option<usize>,
}

impl Default for SurveyParams {
    fn default() -> Self {
        SurveyParams { psi: PsiSpec::Text("power:1:1.5".into()), points: 1000, q_max: 10_000, depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsParams {
    /// Largest codimension; the dimension when absent.
    pub l_max: Option<usize>,
    pub n_min: u32,
    pub n_max: u32,
    pub samples: usize,
    pub search_budget: usize,
}

impl Default for ConstantsParams {
    fn default() -> Self {
        ConstantsParams { l_max: None, n_min: 2, n_max: 8, samples: 100_000, search_budget: 24 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportParams {
    pub runs: Vec<PathBuf>,
}
