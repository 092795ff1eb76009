use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Axis, HarnessError};
use crate::encoding::EncodingKind;
use crate::executor::SandboxLimits;
use crate::graphgen::GeneratorKind;
use crate::model::{CacheMode, ModelConfig};
use crate::prompting::{ExemplarPolicy, Method};
use crate::tasks::TaskKind;

/// Where graphs come from: sampled from the seed, or read from a dataset
/// file whose graphs carry generator and split provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Test graphs per generator family.
    pub test_count: usize,
    /// Training graphs per family (the exemplar pool).
    pub train_count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// One experiment: every (task, encoding, generator) cell under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tasks: Vec<TaskKind>,
    pub encodings: Vec<EncodingKind>,
    pub generators: Vec<GeneratorKind>,
    /// `zero_shot`, `few_shot`, `cot` or `codegraph`.
    pub method: String,
    #[serde(default)]
    pub shots: usize,
    #[serde(default)]
    pub exemplar_policy: ExemplarPolicy,
    pub model: ModelConfig,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub cache_mode: CacheMode,
    pub cache_path: PathBuf,
    #[serde(default)]
    pub limits: SandboxLimits,
    pub output_dir: PathBuf,
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    #[serde(default)]
    pub axis: Axis,
}

fn default_parallel() -> usize {
    4
}

impl ExperimentConfig {
    /// Reads a TOML config. Relative paths are resolved against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.cache_path);
        resolve(&mut self.output_dir);
        if let Some(p) = self.dataset.path.as_mut() {
            resolve(p);
        }
        if let Some(p) = self.limits.working_dir.as_mut() {
            resolve(p);
        }
    }

    pub fn method(&self) -> Result<Method, HarnessError> {
        Method::from_parts(&self.method, self.shots).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        let method = self.method()?;
        if self.tasks.is_empty() || self.encodings.is_empty() || self.generators.is_empty() {
            return fail("tasks, encodings and generators must each list at least one entry".into());
        }
        if self.dataset.test_count == 0 {
            return fail("dataset.test_count must be at least 1".into());
        }
        if self.dataset.path.is_none() && self.dataset.train_count < method.shots() {
            return fail(format!(
                "dataset.train_count ({}) must be at least the shot count ({})",
                self.dataset.train_count,
                method.shots()
            ));
        }
        if self.parallel == 0 {
            return fail("parallel must be at least 1".into());
        }
        self.model.validate().map_err(HarnessError::Config)?;
        self.limits.validate().map_err(HarnessError::Config)?;
        Ok(())
    }
}
