//! JSON experiment configuration.
//!
//! A config fully determines a run together with a master seed. Unknown keys
//! are rejected, and every validation error names the dotted key at fault.
//!
//! ```json
//! {
//!   "label": "tng-booth",
//!   "problem": { "type": "booth" },
//!   "cluster": { "workers": 1, "batch_size": 8 },
//!   "optimizer": { "type": "sgd", "step": { "policy": "constant", "eta": 1e-4 } },
//!   "codec": { "type": "ternary" },
//!   "normalization": { "mode": "subtract", "strategy": "last_round_average", "update_period": 16 },
//!   "budget": { "max_bits": 100000 },
//!   "master_seed": 7
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codecs::Codec;
use crate::error::{Error, Result};
use crate::normalization::{NormalizationMode, ReferenceKind, ReferenceStrategy};
use crate::optim::StepSchedule;
use crate::problems::dataset_io::read_dataset;
use crate::problems::logreg::partition;
use crate::problems::{gen_synthetic, LogRegProblem, Problem, Surface, SurfaceProblem};
use crate::vecmath::DEFAULT_QUOTIENT_EPS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub problem: ProblemConfig,
    pub cluster: ClusterConfig,
    pub optimizer: OptimizerConfig,
    pub codec: CodecConfig,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    pub budget: BudgetConfig,
    #[serde(default)]
    pub master_seed: u64,
    /// Seeds for sweeps; a single run uses `master_seed`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    /// Sweep axes: dotted config key → values to substitute.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid: BTreeMap<String, Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Ackley {
        #[serde(default)]
        start: Option<[f64; 2]>,
    },
    Booth {
        #[serde(default)]
        start: Option<[f64; 2]>,
    },
    Rosenbrock {
        #[serde(default)]
        start: Option<[f64; 2]>,
    },
    Logreg {
        n: usize,
        d: usize,
        c_sk: f64,
        c_th: f64,
        lambda2: f64,
        data_seed: u64,
        /// Load the dataset from an exported file instead of regenerating it.
        /// The file header must match the generator parameters above.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dataset_file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub workers: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Charge a 16·D-bit parameter broadcast every round.
    #[serde(default)]
    pub param_broadcast: bool,
}

fn default_batch_size() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Svrg,
    Lbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(rename = "type")]
    pub kind: OptimizerKind,
    pub step: StepSchedule,
    /// SVRG snapshot period in rounds; also drives the `svrg_composite`
    /// reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch_len: Option<usize>,
    /// L-BFGS memory `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodecConfig {
    Ternary,
    Quant { s: u32 },
    Sparse { k: f64 },
    None,
}

impl CodecConfig {
    pub fn codec(&self) -> Codec {
        match *self {
            CodecConfig::Ternary => Codec::Ternary,
            CodecConfig::Quant { s } => Codec::Quant { levels: s },
            CodecConfig::Sparse { k } => Codec::Sparse { k },
            CodecConfig::None => Codec::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Subtract,
    Quotient,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationConfig {
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_strategy")]
    pub strategy: ReferenceKind,
    #[serde(default)]
    pub tau_max: Option<usize>,
    #[serde(default = "default_period")]
    pub update_period: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_mode() -> ModeName {
    ModeName::Subtract
}

fn default_strategy() -> ReferenceKind {
    ReferenceKind::Zero
}

fn default_period() -> usize {
    1
}

fn default_eps() -> f64 {
    DEFAULT_QUOTIENT_EPS
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            strategy: default_strategy(),
            tau_max: None,
            update_period: default_period(),
            eps: default_eps(),
        }
    }
}

impl NormalizationConfig {
    pub fn mode(&self) -> NormalizationMode {
        match self.mode {
            ModeName::Subtract => NormalizationMode::Subtract,
            ModeName::Quotient => NormalizationMode::Quotient { eps: self.eps },
            ModeName::Combined => NormalizationMode::Combined { eps: self.eps },
        }
    }

    pub fn strategy(&self) -> Result<ReferenceStrategy> {
        ReferenceStrategy::new(self.strategy, self.tau_max, self.update_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u64>,
    /// Stop before the first round that would push cumulative bits past this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bits: Option<u64>,
}

/// A resolved single run as written next to its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub artifact_version: String,
    pub seed: u64,
    pub label: String,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.master_seed,
            label: config.display_label(),
            config: config.clone(),
        }
    }
}

/// One point of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// `key=value` pairs joined by commas, in axis order.
    pub id: String,
    pub assignments: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

fn path_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> Error {
    let path = err.path().to_string();
    let key = if path == "." { "<root>".to_string() } else { path };
    Error::config(key, err.into_inner().to_string())
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(path_error)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let config: Self = serde_path_to_error::deserialize(value).map_err(path_error)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config, or the config embedded in a run manifest (whose seed
    /// then becomes the master seed).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::config("<root>", format!("invalid JSON: {e}")))?;
        if value.get("artifact_version").is_some() && value.get("config").is_some() {
            let manifest: RunManifest = serde_path_to_error::deserialize(value).map_err(path_error)?;
            let mut config = manifest.config;
            config.master_seed = manifest.seed;
            config.validate()?;
            return Ok(config);
        }
        Self::from_value(value)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            format!(
                "{}-{}-{}-{}",
                self.problem.name(),
                self.optimizer_name(),
                self.codec.codec().name(),
                self.normalization.strategy.name()
            )
        })
    }

    fn optimizer_name(&self) -> &'static str {
        match self.optimizer.kind {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Svrg => "svrg",
            OptimizerKind::Lbfgs => "lbfgs",
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.master_seed = seed;
        c
    }

    /// Checks every module precondition before anything runs.
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;

        let c = &self.cluster;
        if c.workers == 0 {
            return Err(Error::config("cluster.workers", "must be at least 1"));
        }
        if c.batch_size == 0 {
            return Err(Error::config("cluster.batch_size", "must be at least 1"));
        }
        if let ProblemConfig::Logreg { n, .. } = self.problem {
            let shards = partition(n, c.workers)?;
            let smallest = shards.iter().map(Vec::len).min().unwrap_or(0);
            if c.batch_size > smallest {
                return Err(Error::config(
                    "cluster.batch_size",
                    format!("exceeds the smallest shard ({smallest} samples)"),
                ));
            }
        }

        let o = &self.optimizer;
        o.step.validate()?;
        let needs_snapshot =
            o.kind == OptimizerKind::Svrg || self.normalization.strategy == ReferenceKind::SvrgComposite;
        if needs_snapshot {
            if !self.problem.is_finite_sum() {
                let key = if o.kind == OptimizerKind::Svrg {
                    "optimizer.type"
                } else {
                    "normalization.strategy"
                };
                return Err(Error::config(key, "svrg snapshots need a finite-sum problem (logreg)"));
            }
            match o.epoch_len {
                Some(0) => return Err(Error::config("optimizer.epoch_len", "must be at least 1")),
                None => return Err(Error::config("optimizer.epoch_len", "required for svrg snapshots")),
                _ => {}
            }
        }
        if o.kind == OptimizerKind::Lbfgs {
            match o.memory {
                Some(0) => return Err(Error::config("optimizer.memory", "must be at least 1")),
                None => return Err(Error::config("optimizer.memory", "required for lbfgs")),
                _ => {}
            }
        }

        match self.codec {
            CodecConfig::Quant { s: 0 } => return Err(Error::config("codec.s", "must be at least 1")),
            CodecConfig::Sparse { k } if !(k > 0.0 && k.is_finite()) => {
                return Err(Error::config("codec.k", "must be positive and finite"))
            }
            _ => {}
        }

        let n = &self.normalization;
        n.mode().validate()?;
        n.strategy()?;

        let b = &self.budget;
        if b.max_rounds.is_none() && b.max_bits.is_none() {
            return Err(Error::config("budget", "set max_rounds and/or max_bits"));
        }
        for (axis, values) in &self.grid {
            if values.is_empty() {
                return Err(Error::config(format!("grid.{axis}"), "axis has no values"));
            }
        }
        Ok(())
    }

    /// Cartesian product of the grid axes (in key order). Each cell's config
    /// has the grid and seed list cleared. No grid yields one cell.
    pub fn expand_grid(&self) -> Result<Vec<GridCell>> {
        let mut base = self.clone();
        base.grid.clear();
        base.seeds.clear();
        let base_value = serde_json::to_value(&base).expect("config serializes");

        let mut cells: Vec<Vec<(String, Value)>> = vec![Vec::new()];
        for (axis, values) in &self.grid {
            if values.is_empty() {
                return Err(Error::config(format!("grid.{axis}"), "axis has no values"));
            }
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((axis.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }

        cells
            .into_iter()
            .map(|assignments| {
                let mut value = base_value.clone();
                for (axis, v) in &assignments {
                    set_dotted(&mut value, axis, v.clone())?;
                }
                let config = Self::from_value(value).map_err(|e| match e {
                    Error::Config { key, reason } => {
                        Error::config(key, format!("{reason} (in grid cell {})", cell_id(&assignments)))
                    }
                    other => other,
                })?;
                Ok(GridCell {
                    id: cell_id(&assignments),
                    assignments,
                    config,
                })
            })
            .collect()
    }
}

fn cell_id(assignments: &[(String, Value)]) -> String {
    if assignments.is_empty() {
        return "base".to_string();
    }
    assignments
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn set_dotted(root: &mut Value, path: &str, v: Value) -> Result<()> {
    let key = format!("grid.{path}");
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::config(&key, "empty path"))?;
    let mut node = root;
    for part in parts {
        node = node
            .get_mut(part)
            .ok_or_else(|| Error::config(&key, format!("no config block `{part}`")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Error::config(&key, "parent is not a config block"))?;
    obj.insert(last.to_string(), v);
    Ok(())
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemConfig::Ackley { .. } => "ackley",
            ProblemConfig::Booth { .. } => "booth",
            ProblemConfig::Rosenbrock { .. } => "rosenbrock",
            ProblemConfig::Logreg { .. } => "logreg",
        }
    }

    pub fn is_finite_sum(&self) -> bool {
        matches!(self, ProblemConfig::Logreg { .. })
    }

    fn surface(&self) -> Option<(Surface, Option<[f64; 2]>)> {
        match *self {
            ProblemConfig::Ackley { start } => Some((Surface::Ackley, start)),
            ProblemConfig::Booth { start } => Some((Surface::Booth, start)),
            ProblemConfig::Rosenbrock { start } => Some((Surface::Rosenbrock, start)),
            ProblemConfig::Logreg { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemConfig::Logreg {
                n,
                d,
                c_sk,
                c_th,
                lambda2,
                ..
            } => {
                crate::problems::logreg::validate_generator(*n, *d, *c_sk, *c_th)?;
                if !(*lambda2 >= 0.0 && lambda2.is_finite()) {
                    return Err(Error::config("problem.lambda2", "must be finite and non-negative"));
                }
                Ok(())
            }
            _ => match self.surface() {
                Some((_, Some(start))) if !start.iter().all(|x| x.is_finite()) => {
                    Err(Error::config("problem.start", "must be finite"))
                }
                _ => Ok(()),
            },
        }
    }

    /// Generates (or loads) the data and wraps it as a [`Problem`].
    pub fn build(&self) -> Result<Arc<Problem>> {
        self.validate()?;
        if let Some((surface, start)) = self.surface() {
            let mut p = SurfaceProblem::new(surface);
            if let Some([x, y]) = start {
                p.start = (x, y);
            }
            return Ok(Arc::new(Problem::Surface(p)));
        }
        let ProblemConfig::Logreg {
            n,
            d,
            c_sk,
            c_th,
            lambda2,
            data_seed,
            dataset_file,
        } = self
        else {
            unreachable!("surfaces handled above")
        };
        let dataset = match dataset_file {
            Some(path) => {
                let ds = read_dataset(path)?;
                if (ds.n, ds.d, ds.c_sk.to_bits(), ds.c_th.to_bits(), ds.seed)
                    != (*n, *d, c_sk.to_bits(), c_th.to_bits(), *data_seed)
                {
                    return Err(Error::config(
                        "problem.dataset_file",
                        "file header does not match the configured generator parameters",
                    ));
                }
                ds
            }
            None => gen_synthetic(*n, *d, *c_sk, *c_th, *data_seed)?,
        };
        Ok(Arc::new(Problem::LogReg(LogRegProblem::new(
            Arc::new(dataset),
            *lambda2,
        )?)))
    }
}
