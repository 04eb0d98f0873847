use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::ingest::IngestConfig;
use crate::error::{Error, Result};
use crate::fairtest::AuditConfig;
use crate::io::read_json;
use crate::neural::{AdversaryConfig, LogisticConfig, TrainConfig};
use crate::synthgen::{SyntheticRecipe, DEFAULT_KAPPA};

/// One configuration file drives every command; each reads its own section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory, relative to the config file. `--out` overrides it.
    pub out: PathBuf,
    /// Overrides the seeds of every section when set.
    pub seed: Option<u64>,
    /// Dataset CSV; `<out>/data.csv` when absent.
    pub data: Option<PathBuf>,
    pub generate: GenerateSection,
    pub train: TrainSection,
    pub audit: AuditSection,
    pub evaluate: EvaluateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            seed: None,
            data: None,
            generate: GenerateSection::default(),
            train: TrainSection::default(),
            audit: AuditSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub synthetic: SyntheticRecipe,
    /// Convert a raw CSV instead of generating synthetic data.
    pub ingest: Option<IngestConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.15,
            test: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub aux_hidden: Vec<usize>,
    pub optimizer: TrainConfig,
    pub adversary: AdversaryConfig,
    pub logistic: LogisticConfig,
    pub split: SplitFractions,
    /// Also train an adversarially debiased target (same as `--fair`).
    pub fair: bool,
    /// Multiplier on the unbiased reference model's IFS spread.
    pub kappa: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            aux_hidden: vec![32],
            optimizer: TrainConfig::default(),
            adversary: AdversaryConfig::default(),
            logistic: LogisticConfig::default(),
            split: SplitFractions::default(),
            fair: false,
            kappa: DEFAULT_KAPPA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSubset {
    /// Held-out rows from the training split.
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub config: AuditConfig,
    pub rows: RowSubset,
    /// Protected attribute whose `= 0` subgroup the transparency report uses.
    pub attribute: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub mi_neighbors: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            mi_neighbors: crate::eval::DEFAULT_MI_NEIGHBORS,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tests: Option<String>,
    pub fair: bool,
}

/// A config with overrides applied, plus the paths it resolves to.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub data: PathBuf,
    /// Directory relative paths inside the file are resolved against.
    pub base: PathBuf,
}

impl Resolved {
    pub fn models_dir(&self) -> PathBuf {
        self.out_dir.join("models")
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.base.join(p)
        }
    }
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Resolved> {
    let config: RunConfig = read_json(path)?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_owned)
        .unwrap_or_else(|| PathBuf::from("."));
    resolve(config, base, overrides)
}

pub fn resolve(mut config: RunConfig, base: PathBuf, overrides: &Overrides) -> Result<Resolved> {
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    if let Some(seed) = config.seed {
        config.generate.synthetic.seed = seed;
        config.train.optimizer.seed = seed;
    }
    if let Some(list) = &overrides.tests {
        config.audit.config.tests = Some(crate::fairtest::parse_tests(list)?);
    }
    if overrides.fair {
        config.train.fair = true;
    }
    config.train.optimizer.validate()?;
    config.train.adversary.validate()?;
    config.audit.config.validate()?;
    let s = &config.train.split;
    if [s.train, s.val, s.test].iter().any(|f| !(*f >= 0.0)) || s.train <= 0.0 || (s.train + s.val + s.test - 1.0).abs() > 1e-9 {
        return Err(Error::Config(
            "split fractions must be >= 0, train > 0, and sum to 1".into(),
        ));
    }
    if !(config.train.kappa >= 0.0) {
        return Err(Error::Config("kappa must be >= 0".into()));
    }
    let out_dir = match &overrides.out {
        Some(o) => o.clone(),
        None if config.out.is_absolute() => config.out.clone(),
        None => base.join(&config.out),
    };
    let data = match &config.data {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => base.join(d),
        None => out_dir.join("data.csv"),
    };
    Ok(Resolved {
        config,
        out_dir,
        data,
        base,
    })
}
