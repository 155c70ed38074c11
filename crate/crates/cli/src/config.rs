use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use surrobid_core::entropy::EntropyConfig;
use surrobid_core::optimizer::{default_n_init, InnerSearchConfig};
use surrobid_core::{KernelHyper, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Surrogate,
    Pattern,
    Ga,
    Random,
    Enumerate,
}

impl Method {
    pub fn needs_seed(self) -> bool {
        matches!(self, Method::Surrogate | Method::Ga | Method::Random)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Surrogate => "surrogate",
            Method::Pattern => "pattern",
            Method::Ga => "ga",
            Method::Random => "random",
            Method::Enumerate => "enumerate",
        };
        f.pad(s)
    }
}

fn default_alpha() -> f64 {
    EntropyConfig::default().alpha
}

fn default_n_max() -> usize {
    100
}

fn default_grid_points() -> usize {
    51
}

/// One JSON run description. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: PathBuf,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub upsilon: Option<Vec<f64>>,
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(default)]
    pub n_init: Option<usize>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub inner: Option<InnerSearchConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub record_timing: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_max: Option<usize>,
    pub alpha: Option<f64>,
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(surrobid_core::Error::from)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.instance.is_relative() {
            cfg.instance = base.join(&cfg.instance);
        }
        if let Some(dir) = cfg.output_dir.as_mut().filter(|d| d.is_relative()) {
            *dir = base.join(&*dir);
        }
        if ov.seed.is_some() {
            cfg.seed = ov.seed;
            cfg.seeds = ov.seed.into_iter().collect();
        }
        if let Some(n) = ov.n_max {
            cfg.n_max = n;
        }
        if let Some(a) = ov.alpha {
            cfg.alpha = a;
        }
        if ov.out.is_some() {
            cfg.output_dir = ov.out.clone();
        }
        if ov.method.is_some() {
            cfg.method = ov.method;
        }
        Ok(cfg)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("surrobid-out"))
    }

    /// Optimizer settings for a `dim`-dimensional problem.
    pub fn optimizer_config(&self, dim: usize, seed: u64) -> Result<OptimizerConfig> {
        let mut cfg = OptimizerConfig::new(dim, self.n_max, seed);
        cfg.n_init = self
            .n_init
            .unwrap_or_else(|| default_n_init(dim).min(self.n_max));
        let upsilon = self.upsilon.clone().unwrap_or_else(|| vec![1.0; dim]);
        let w = self.w.clone().unwrap_or_else(|| vec![1.5; dim]);
        cfg.hyper = KernelHyper::new(upsilon, w)?;
        cfg.entropy = EntropyConfig::new(self.alpha)?;
        if let Some(inner) = &self.inner {
            cfg.inner = inner.clone();
        }
        cfg.record_timing = self.record_timing;
        Ok(cfg)
    }

    pub fn require_seed(&self, method: Method) -> Result<u64> {
        match (self.seed, method.needs_seed()) {
            (Some(s), _) => Ok(s),
            (None, false) => Ok(0),
            (None, true) => bail!(surrobid_core::Error::Usage(format!(
                "method {method} is stochastic: set \"seed\" in the config or pass --seed"
            ))),
        }
    }
}
