//! Experiment configuration.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::C4Variant;
use crate::matrixlab::MatrixKind;
use crate::signals::{DsNorm, Magnitude, NoiseKind, Structure};
use crate::solvers::{Model, SolverConfig};
use crate::{Error, Result};

/// Recovery model of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lasso,
    DsReg,
    GroupLasso,
}

impl ModelKind {
    pub fn with_block_size(self, d: usize) -> Model {
        match self {
            ModelKind::Lasso => Model::Lasso,
            ModelKind::DsReg => Model::DsReg,
            ModelKind::GroupLasso => Model::GroupLasso(d),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lasso => "lasso",
            ModelKind::DsReg => "ds_reg",
            ModelKind::GroupLasso => "group_lasso",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(ModelKind::Lasso),
            "ds_reg" => Ok(ModelKind::DsReg),
            "group_lasso" => Ok(ModelKind::GroupLasso),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?}; expected lasso, ds_reg or group_lasso"
            ))),
        }
    }
}

/// The signal part of a config; `n` and the seed come from the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub structure: Structure,
    pub magnitude: Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub epsilon: f64,
    /// Norm of `Aᵀz` fixed to ε for `ds_type` noise.
    #[serde(default)]
    pub ds_norm: DsNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    EqualEpsilon,
}

/// Either a fixed λ or the string `"equal_epsilon"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaChoice {
    Value(f64),
    Rule(LambdaRule),
}

impl Default for LambdaChoice {
    fn default() -> Self {
        LambdaChoice::Rule(LambdaRule::EqualEpsilon)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

fn default_block() -> usize {
    1
}

fn default_attempts() -> usize {
    1000
}

/// A complete experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub m: usize,
    pub n: usize,
    #[serde(default = "default_block")]
    pub d: usize,
    /// Sparsity level the bounds are evaluated at.
    pub k: usize,
    pub matrix_kind: MatrixKind,
    /// Redraw the matrix until μ (gaussian) or μ_B (block_orthonormal) falls
    /// below this value.
    #[serde(default)]
    pub coherence_cap: Option<f64>,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
    pub signal: SignalConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub lambda: LambdaChoice,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub variant: C4Variant,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputPaths,
    /// Fill the `wall_ms` column; off by default so that output is
    /// reproducible byte for byte.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The regularization parameter after resolving `"equal_epsilon"`.
    pub fn lambda(&self) -> f64 {
        match self.lambda {
            LambdaChoice::Value(v) => v,
            LambdaChoice::Rule(LambdaRule::EqualEpsilon) => self.noise.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.m == 0 || self.n == 0 {
            return bad("m and n must be positive".into());
        }
        if self.d == 0 || self.n % self.d != 0 {
            return bad(format!("block size {} does not divide n = {}", self.d, self.n));
        }
        if self.model != ModelKind::GroupLasso && self.d != 1 {
            return bad(format!("model {} requires d = 1", self.model));
        }
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if let Some(cap) = self.coherence_cap {
            if !(cap > 0.0) {
                return bad(format!("coherence_cap must be positive, got {cap}"));
            }
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1".into());
        }
        let eps = self.noise.epsilon;
        if !(eps >= 0.0 && eps.is_finite()) {
            return bad(format!("epsilon must be nonnegative, got {eps}"));
        }
        let paired = match self.noise.kind {
            NoiseKind::None => true,
            NoiseKind::L2Ball => self.model != ModelKind::DsReg,
            NoiseKind::DsType => self.model == ModelKind::DsReg,
        };
        if !paired {
            return bad(format!(
                "model {} cannot be paired with {:?} noise",
                self.model, self.noise.kind
            ));
        }
        let lambda = self.lambda();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {lambda}"));
        }
        if let Structure::BlockSparse { d, .. } = self.signal.structure {
            if d != self.d {
                return bad(format!("signal block size {d} differs from d = {}", self.d));
            }
        }
        self.solver.validate()
    }
}
