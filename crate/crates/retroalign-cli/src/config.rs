use std::fs;
use std::path::{Path, PathBuf};

use retroalign::reward::{Delimiters, RewardConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a pipeline run depends on. Loaded from JSON; command-line
/// flags are applied on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    pub stock: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub reward: RewardConfig,
    /// Roots sampled per route by `align`.
    pub fold: usize,
    pub seed: u64,
    /// Slate entries used per target by `vote`.
    pub tta: usize,
    pub delimiters: Delimiters,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: None,
            stock: None,
            output_dir: None,
            reward: RewardConfig::default(),
            fold: 20,
            seed: 0,
            tta: 16,
            delimiters: Delimiters::default(),
            workers: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.reward
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for (name, path) in [
            ("dataset", &self.dataset),
            ("stock", &self.stock),
            ("output_dir", &self.output_dir),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Config(format!("{name} {} does not exist", p.display())));
                }
            }
        }
        if self.fold == 0 {
            return Err(CliError::Config("fold must be at least 1".into()));
        }
        if self.tta == 0 {
            return Err(CliError::Config("tta must be at least 1".into()));
        }
        if self.delimiters.open.is_empty() || self.delimiters.close.is_empty() {
            return Err(CliError::Config("delimiters must be non-empty".into()));
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> Result<&Path, CliError> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::Config("no dataset given".into()))
    }

    /// Runs `f` on a pool of `workers` threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(pool.install(f))
    }
}
