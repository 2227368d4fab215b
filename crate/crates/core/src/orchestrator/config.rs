//! Run configuration: one JSON file, relative paths resolved against its
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::complexity::VariablePolicy;
use crate::harness::{CompilerSpec, OracleKind};
use crate::llm::{sha256_hex, ModelConfig};
use crate::rl::Hyperparams;
use crate::validation::Analyzer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Real,
    Sim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Directory of mock replies; when set no network access happens.
    #[serde(default)]
    pub mock_fixtures: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub system_prompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Termination {
    pub budget_secs: Option<f64>,
    pub target: Option<usize>,
    /// Hard cap on LLM queries.
    pub max_steps: u64,
}

impl Default for Termination {
    fn default() -> Self {
        Termination {
            budget_secs: Some(3600.0),
            target: Some(10),
            max_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bug_id: String,
    pub failing_program: PathBuf,
    #[serde(default = "default_oracle")]
    pub oracle: OracleKind,
    pub backend: BackendKind,
    #[serde(default)]
    pub real: Option<CompilerSpec>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub rl: Hyperparams,
    #[serde(default)]
    pub termination: Termination,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Left out of serialized copies so reports do not depend on where they
    /// were written.
    #[serde(default = "default_out", skip_serializing)]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub analyzer: Option<Analyzer>,
    #[serde(default)]
    pub variables: VariablePolicy,
    /// Faulty files, one per line, for scoring the ranking.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_oracle() -> OracleKind {
    OracleKind::WrongCode
}

fn default_alpha() -> f64 {
    0.5
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<RunConfig, RunError> {
        let mut c: RunConfig =
            serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        crate::spectra::check_alpha(self.alpha).map_err(|e| RunError::Config(e.to_string()))?;
        self.rl
            .check()
            .map_err(|e| RunError::Config(e.to_string()))?;
        let t = &self.termination;
        if t.budget_secs.is_none() && t.target.is_none() {
            return bad("set a time budget, a target count or both".into());
        }
        if t.budget_secs.is_some_and(|b| b.is_nan() || b <= 0.0)
            || t.target == Some(0)
            || t.max_steps == 0
        {
            return bad("termination limits must be positive".into());
        }
        match self.backend {
            BackendKind::Real if self.real.is_none() => {
                bad("backend `real` needs a `real` section".into())
            }
            BackendKind::Sim if self.sim.is_none() => {
                bad("backend `sim` needs a `sim` section".into())
            }
            _ => Ok(()),
        }
    }

    /// Identity of everything that influences the run's outcome. The output
    /// directory and the LLM settings are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.llm = LlmConfig::default();
        sha256_hex(&serde_json::to_string(&c).expect("config serializes"))
    }
}
