//! The experiment config file: one flat TOML table. Every key is optional
//! except the data source; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chaosfs::classifier::TrainConfig;
use chaosfs::engine::{EngineConfig, EngineError, Variant};
use chaosfs::evolution::Binarization;

use crate::synth::SyntheticSpec;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizationKind {
    #[default]
    Threshold,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Data file, resolved against the config file's directory.
    pub dataset: Option<PathBuf>,
    pub format: DataFormat,
    /// CSV label column name; the last column when unset.
    pub label_column: Option<String>,
    pub has_header: bool,
    /// Feature count for LIBSVM files; inferred when unset.
    pub libsvm_features: Option<usize>,

    pub synth_samples: Option<usize>,
    pub synth_features: Option<usize>,
    pub synth_informative: Option<usize>,
    pub synth_noise: f64,
    pub synth_seed: u64,

    pub test_fraction: f64,
    pub split_seed: u64,

    pub ps: usize,
    pub lps: usize,
    pub k_islands: usize,
    pub migrations: usize,
    pub generations: usize,
    pub mutation_factor: f64,
    pub crossover_rate: f64,
    pub variant: Variant,
    pub binarization: BinarizationKind,
    pub sigmoid_slope: f64,
    pub logistic_weight: f64,
    pub tent_weight: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub l2: f64,
    pub dedup_by_mask: bool,
    pub reevaluate_on_island: bool,
    pub retrain_for_test: bool,
    pub keep_snapshots: bool,

    pub runs: usize,
    /// Run `r` uses master seed `base_seed + r`.
    pub base_seed: u64,
    pub threads: Option<usize>,
    /// Run the battery's runs concurrently, one engine thread each.
    pub parallel_runs: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        Self {
            dataset: None,
            format: DataFormat::Csv,
            label_column: None,
            has_header: true,
            libsvm_features: None,
            synth_samples: None,
            synth_features: None,
            synth_informative: None,
            synth_noise: 0.1,
            synth_seed: 0,
            test_fraction: 0.25,
            split_seed: 0,
            ps: engine.ps,
            lps: engine.lps,
            k_islands: engine.k_islands,
            migrations: engine.migrations,
            generations: engine.generations,
            mutation_factor: engine.mutation_factor,
            crossover_rate: engine.crossover_rate,
            variant: engine.variant,
            binarization: BinarizationKind::Threshold,
            sigmoid_slope: 10.0,
            logistic_weight: engine.logistic_weight,
            tent_weight: engine.tent_weight,
            learning_rate: engine.lr.learning_rate,
            max_iters: engine.lr.max_iters,
            tolerance: engine.lr.tolerance,
            l2: engine.lr.l2,
            dedup_by_mask: false,
            reevaluate_on_island: false,
            retrain_for_test: false,
            keep_snapshots: false,
            runs: 1,
            base_seed: 0,
            threads: None,
            parallel_runs: false,
            output: PathBuf::from("out"),
        }
    }
}

/// Where the rows come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File { path: PathBuf, format: DataFormat },
    Synthetic(SyntheticSpec),
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads and validates a config file. A relative `dataset` path is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(dataset) = &config.dataset {
            if dataset.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.dataset = Some(base.join(dataset));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.data_source()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(invalid("test_fraction", format!("must lie in (0, 1), got {}", self.test_fraction)));
        }
        if self.runs == 0 {
            return Err(invalid("runs", "must be at least 1"));
        }
        self.engine_config(self.base_seed).validate().map_err(|e| match e {
            EngineError::Config { field, message } => invalid(field, message),
            other => CliError::Config(other.to_string()),
        })
    }

    pub fn data_source(&self) -> Result<DataSource, CliError> {
        let synth_keys = [
            ("synth_samples", self.synth_samples),
            ("synth_features", self.synth_features),
            ("synth_informative", self.synth_informative),
        ];
        match &self.dataset {
            Some(path) => {
                if let Some((key, _)) = synth_keys.iter().find(|(_, v)| v.is_some()) {
                    return Err(invalid(key, "cannot be combined with dataset"));
                }
                Ok(DataSource::File {
                    path: path.clone(),
                    format: self.format,
                })
            }
            None => {
                let [samples, features, informative] = synth_keys.map(|(key, v)| {
                    v.ok_or_else(|| invalid(key, "required when no dataset is given"))
                });
                let spec = SyntheticSpec {
                    n_samples: samples?,
                    n_features: features?,
                    n_informative: informative?,
                    noise: self.synth_noise,
                    seed: self.synth_seed,
                };
                spec.validate()
                    .map_err(|(field, message)| invalid(&format!("synth_{}", field.trim_start_matches("n_")), message))?;
                Ok(DataSource::Synthetic(spec))
            }
        }
    }

    /// The engine config for one run.
    pub fn engine_config(&self, master_seed: u64) -> EngineConfig {
        EngineConfig {
            ps: self.ps,
            lps: self.lps,
            k_islands: self.k_islands,
            migrations: self.migrations,
            generations: self.generations,
            mutation_factor: self.mutation_factor,
            crossover_rate: self.crossover_rate,
            variant: self.variant,
            master_seed,
            threads: self.threads,
            binarization: match self.binarization {
                BinarizationKind::Threshold => Binarization::Threshold,
                BinarizationKind::Sigmoid => Binarization::Sigmoid {
                    slope: self.sigmoid_slope,
                },
            },
            logistic_weight: self.logistic_weight,
            tent_weight: self.tent_weight,
            lr: TrainConfig {
                learning_rate: self.learning_rate,
                max_iters: self.max_iters,
                tolerance: self.tolerance,
                l2: self.l2,
            },
            dedup_by_mask: self.dedup_by_mask,
            reevaluate_on_island: self.reevaluate_on_island,
            retrain_for_test: self.retrain_for_test,
            keep_snapshots: self.keep_snapshots,
        }
    }
}
