//! Experiment configuration files and the problem registry.

use std::fs;
use std::path::{Path, PathBuf};

use proxnewton::config::SolverParams;
use proxnewton::problems::{make_box_ge, make_holder, make_lasso_degenerate, make_nonmonotone_ge, make_quadratic_singular};
use proxnewton::{Algorithm, Config, Error, Problem};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub solver: SolverParams,
    pub output: OutputSpec,
    #[serde(default = "one")]
    pub repeat: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub trace_path: PathBuf,
    pub report_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if cfg.repeat == 0 {
            return Err("repeat must be at least 1".into());
        }
        Ok(cfg)
    }

    pub fn solver_config(&self) -> Result<Config, String> {
        Config::new(&self.solver).map_err(|e| e.to_string())
    }

    /// Builds the problem for run `index` (seed + index) and checks that the
    /// algorithm can run on it.
    pub fn build_problem(&self, index: usize) -> Result<Problem, String> {
        let seed = self.problem.seed + index as u64;
        let problem = build(&self.problem.name, &self.problem.parameters, seed)?;
        if self.algorithm.needs_objective() && problem.as_regularized().is_none() {
            return Err(Error::NoObjective(format!("{} cannot run on {}; use local", self.algorithm.name(), problem.name)).to_string());
        }
        Ok(problem)
    }

    pub fn trace_path(&self, index: usize) -> PathBuf {
        indexed(&self.output.trace_path, index, self.repeat)
    }

    pub fn report_path(&self, index: usize) -> Option<PathBuf> {
        self.output.report_path.as_ref().map(|p| indexed(p, index, self.repeat))
    }
}

/// `dir/name.ext` → `dir/name_i.ext` when there is more than one run.
fn indexed(path: &Path, index: usize, repeat: usize) -> PathBuf {
    if repeat <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index}"),
    };
    path.with_file_name(name)
}

fn params<P: DeserializeOwned>(name: &str, raw: &Map<String, Value>) -> Result<P, String> {
    serde_json::from_value(Value::Object(raw.clone())).map_err(|e| format!("problem `{name}` parameters: {e}"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticParams {
    n: usize,
    rank: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LassoParams {
    m: usize,
    n: usize,
    rank: usize,
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HolderParams {
    n: usize,
    gamma: f64,
    lambda: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxParams {
    n: usize,
    #[serde(default)]
    nonsymmetric: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NonmonotoneParams {
    n: usize,
    eps: f64,
}

pub const PROBLEMS: [&str; 5] = ["quadratic_singular", "lasso_degenerate", "holder", "box_ge", "nonmonotone_ge"];

pub fn build(name: &str, raw: &Map<String, Value>, seed: u64) -> Result<Problem, String> {
    let problem = match name {
        "quadratic_singular" => {
            let p: QuadraticParams = params(name, raw)?;
            make_quadratic_singular(p.n, p.rank, seed)
        }
        "lasso_degenerate" => {
            let p: LassoParams = params(name, raw)?;
            make_lasso_degenerate(p.m, p.n, p.rank, p.lambda, seed)
        }
        "holder" => {
            let p: HolderParams = params(name, raw)?;
            make_holder(p.n, p.gamma, seed, p.lambda)
        }
        "box_ge" => {
            let p: BoxParams = params(name, raw)?;
            make_box_ge(p.n, seed, p.nonsymmetric)
        }
        "nonmonotone_ge" => {
            let p: NonmonotoneParams = params(name, raw)?;
            make_nonmonotone_ge(p.n, p.eps, seed)
        }
        other => return Err(format!("unknown problem `{other}`; expected one of {}", PROBLEMS.join(", "))),
    };
    problem.map_err(|e| e.to_string())
}
