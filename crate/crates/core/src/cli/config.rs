//! The shared JSON configuration file.
//!
//! Top-level keys are `TrainConfig` fields; the optional sections `model`,
//! `eval`, `solver_eval` and `solver` configure the other subcommands. Every
//! key is optional and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analytics::{EvalConfig, SolverEvalConfig};
use crate::model::Size;
use crate::solver::SolverConfig;
use crate::trainer::TrainConfig;
use crate::Variant;

/// Model shape overrides; unset fields come from the size preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub size: Option<Size>,
    pub variant: Option<Variant>,
    pub layers: Option<usize>,
    pub d_model: Option<usize>,
    pub heads: Option<usize>,
    pub ffn_mult: Option<usize>,
    pub dropout: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub train: TrainConfig,
    pub model: ModelSection,
    pub eval: EvalConfig,
    pub solver_eval: SolverEvalConfig,
    pub solver: SolverConfig,
}

const SECTIONS: [&str; 4] = ["model", "eval", "solver_eval", "solver"];

fn section<T: for<'de> Deserialize<'de> + Default>(
    obj: &mut serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Result<T, serde_json::Error> {
    match obj.remove(key) {
        Some(v) => serde_json::from_value(v),
        None => Ok(T::default()),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let serde_json::Value::Object(mut obj) = value else {
            return Err("config must be a JSON object".into());
        };
        let err = |k: &'static str| move |e: serde_json::Error| format!("{k}: {e}");
        let model = section(&mut obj, SECTIONS[0]).map_err(err("model"))?;
        let eval = section(&mut obj, SECTIONS[1]).map_err(err("eval"))?;
        let solver_eval = section(&mut obj, SECTIONS[2]).map_err(err("solver_eval"))?;
        let solver = section(&mut obj, SECTIONS[3]).map_err(err("solver"))?;
        let train = serde_json::from_value(serde_json::Value::Object(obj)).map_err(err("train"))?;
        Ok(Self { train, model, eval, solver_eval, solver })
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}
