use serde::{Deserialize, Serialize};

use super::EngineConfig;
use crate::evolution::{fitness_score, Population};
use crate::mask::FeatureMask;

/// Global best after one migration barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationRecord {
    pub migration_index: usize,
    pub best_fitness: f64,
    pub best_mask: FeatureMask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_snapshot: Option<Population>,
}

/// One member of the final population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub key: u64,
    pub mask: FeatureMask,
    pub fitness: f64,
    pub train_auc: f64,
    pub test_auc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrained_test_auc: Option<f64>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl MemberReport {
    pub fn cardinality(&self) -> usize {
        self.mask.count_ones()
    }
}

/// Where the data came from. Filled in by callers that load files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub source: String,
    pub sha256: String,
    pub n_features: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_fraction: f64,
    pub split_seed: u64,
}

/// Wall-clock seconds. Everything outside this block is a deterministic
/// function of the config and data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub threads: usize,
    pub total: f64,
    pub initialization: f64,
    pub per_migration: Vec<f64>,
    /// `per_island[m][i]`: island `i` during migration round `m`.
    pub per_island: Vec<Vec<f64>>,
    pub test_evaluation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetInfo>,
    pub n_features: usize,
    /// Sorted by fitness, best first.
    pub final_population: Vec<MemberReport>,
    pub migrations: Vec<MigrationRecord>,
    pub lr_trainings: usize,
    pub timings: Timings,
}

impl RunReport {
    /// Fittest final member; the earliest wins ties.
    pub fn best_member(&self) -> Option<&MemberReport> {
        self.final_population
            .iter()
            .reduce(|best, m| if m.fitness > best.fitness { m } else { best })
    }

    pub fn best_fitness_trace(&self) -> Vec<f64> {
        self.migrations.iter().map(|m| m.best_fitness).collect()
    }

    pub fn without_timings(&self) -> RunReport {
        RunReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }

    /// The report's own invariants: a non-decreasing best-fitness trace and
    /// fitness values recomputable from AUC and cardinality.
    pub fn check_invariants(&self) -> Result<(), String> {
        let trace = self.best_fitness_trace();
        if let Some(w) = trace.windows(2).find(|w| w[1] < w[0]) {
            return Err(format!("best fitness dropped from {} to {}", w[0], w[1]));
        }
        for m in &self.final_population {
            let expected = fitness_score(m.train_auc, m.cardinality(), self.n_features)
                .map_err(|e| e.to_string())?;
            if expected != m.fitness {
                return Err(format!(
                    "member {} fitness {} != recomputed {expected}",
                    m.key, m.fitness
                ));
            }
        }
        Ok(())
    }
}
