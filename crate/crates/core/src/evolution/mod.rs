//! Binary differential evolution: the individual record, the fitness
//! function, DE/best/1/bin variation and the per-island generation loop.

mod island;
mod operators;

pub use island::{evaluate, evolve_island, FitnessOracle, LrOracle};
pub use operators::{
    crossover, init_mask, init_population, mutate, mutate_with, pick_donors, repair, Binarization,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, LRModel};
use crate::data::DataError;
pub use crate::mask::FeatureMask;
use crate::mask::MaskError;

/// Smallest population DE/best/1 can work with: the target plus two
/// distinct donors plus one more member.
pub const MIN_POPULATION: usize = 4;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("population of {size} is below the minimum of {MIN_POPULATION}")]
    TooSmall { size: usize },
    #[error("cardinality {cardinality} outside 1..={n_features}")]
    Cardinality { cardinality: usize, n_features: usize },
    #[error("individual {key} has not been evaluated")]
    Unevaluated { key: u64 },
    #[error("forced index {index} out of range for {len} bits")]
    ForcedIndex { index: usize, len: usize },
    #[error("duplicate key {0} in population")]
    DuplicateKey(u64),
    #[error("evaluating individual {key}: {source}")]
    Classifier {
        key: u64,
        #[source]
        source: ClassifierError,
    },
    #[error("evaluating individual {key}: {source}")]
    Data {
        key: u64,
        #[source]
        source: DataError,
    },
}

/// Variation parameters shared by every island.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    /// Scale factor `MF` on the donor difference.
    pub mutation_factor: f64,
    /// Binomial crossover rate `CR`.
    pub crossover_rate: f64,
    #[serde(default)]
    pub binarization: Binarization,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self {
            mutation_factor: 0.2,
            crossover_rate: 0.9,
            binarization: Binarization::Threshold,
        }
    }
}

/// `auc * (1 - cardinality / n_features)`: rewards discrimination and
/// parsimony together. A full feature set always scores 0.
pub fn fitness_score(auc: f64, cardinality: usize, n_features: usize) -> Result<f64, EvolutionError> {
    if cardinality == 0 || cardinality > n_features {
        return Err(EvolutionError::Cardinality {
            cardinality,
            n_features,
        });
    }
    Ok(auc * (1.0 - cardinality as f64 / n_features as f64))
}

/// Result of the train-and-update phase for one mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub model: LRModel,
    pub auc: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub key: u64,
    pub mask: FeatureMask,
    /// Coefficients, AUC and fitness are written together or not at all.
    pub evaluation: Option<Evaluation>,
}

impl Individual {
    pub fn new(key: u64, mask: FeatureMask) -> Self {
        Self {
            key,
            mask,
            evaluation: None,
        }
    }

    pub fn fitness(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.fitness)
    }

    pub fn auc(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.auc)
    }

    pub fn model(&self) -> Option<&LRModel> {
        self.evaluation.as_ref().map(|e| &e.model)
    }

    pub fn is_evaluated(&self) -> bool {
        self.evaluation.is_some()
    }

    pub fn cardinality(&self) -> usize {
        self.mask.count_ones()
    }

    fn require_fitness(&self) -> Result<f64, EvolutionError> {
        self.fitness()
            .ok_or(EvolutionError::Unevaluated { key: self.key })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Individual>,
    n_features: usize,
}

impl Population {
    /// Checks that keys are unique and every mask has `n_features` bits.
    pub fn new(members: Vec<Individual>, n_features: usize) -> Result<Self, EvolutionError> {
        let mut keys: Vec<u64> = members.iter().map(|m| m.key).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(EvolutionError::DuplicateKey(w[0]));
        }
        for m in &members {
            if m.mask.len() != n_features {
                return Err(MaskError::LengthMismatch {
                    left: m.mask.len(),
                    right: n_features,
                }
                .into());
            }
        }
        Ok(Self {
            members,
            n_features,
        })
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn all_evaluated(&self) -> bool {
        self.members.iter().all(Individual::is_evaluated)
    }

    /// Position of the fittest evaluated member; the first one wins ties.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.members.iter().enumerate() {
            if let Some(f) = m.fitness() {
                if best.map_or(true, |(_, bf)| f > bf) {
                    best = Some((i, f));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn best(&self) -> Option<&Individual> {
        self.best_index().map(|i| &self.members[i])
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best().and_then(Individual::fitness)
    }
}

/// Keeps the parent only when it is strictly fitter; ties go to the trial.
pub fn select(parent: Individual, trial: Individual) -> Result<Individual, EvolutionError> {
    let pf = parent.require_fitness()?;
    let tf = trial.require_fitness()?;
    Ok(if pf > tf { parent } else { trial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::TrainConfig;

    fn evaluated(key: u64, fitness: f64) -> Individual {
        Individual {
            key,
            mask: FeatureMask::ones(2),
            evaluation: Some(Evaluation {
                model: LRModel::zeros(2, TrainConfig::default()),
                auc: fitness,
                fitness,
            }),
        }
    }

    #[test]
    fn fitness_examples() {
        assert!((fitness_score(0.8, 200, 1000).unwrap() - 0.64).abs() < 1e-15);
        assert_eq!(fitness_score(0.9, 1000, 1000).unwrap(), 0.0);
        assert!((fitness_score(1.0, 1, 1000).unwrap() - 0.999).abs() < 1e-15);
        assert!(fitness_score(0.5, 0, 10).is_err());
        assert!(fitness_score(0.5, 11, 10).is_err());
    }

    #[test]
    fn selection_rule() {
        assert_eq!(select(evaluated(0, 0.7), evaluated(1, 0.5)).unwrap().key, 0);
        assert_eq!(select(evaluated(0, 0.4), evaluated(1, 0.6)).unwrap().key, 1);
        assert_eq!(select(evaluated(0, 0.5), evaluated(1, 0.5)).unwrap().key, 1);
        let raw = Individual::new(2, FeatureMask::ones(2));
        assert!(matches!(
            select(raw, evaluated(1, 0.5)),
            Err(EvolutionError::Unevaluated { key: 2 })
        ));
    }

    #[test]
    fn population_invariants() {
        let dup = vec![evaluated(1, 0.1), evaluated(1, 0.2)];
        assert!(matches!(Population::new(dup, 2), Err(EvolutionError::DuplicateKey(1))));
        let short = vec![Individual::new(0, FeatureMask::ones(3))];
        assert!(Population::new(short, 2).is_err());
        let pop = Population::new(vec![evaluated(0, 0.3), evaluated(1, 0.9), evaluated(2, 0.9)], 2).unwrap();
        assert_eq!(pop.best_index(), Some(1));
        assert_eq!(pop.best_fitness(), Some(0.9));
    }

    proptest::proptest! {
        #[test]
        fn fitness_range(auc in 0.0f64..=1.0, n in 1usize..500, c in 1usize..500) {
            proptest::prop_assume!(c <= n);
            let f = fitness_score(auc, c, n).unwrap();
            proptest::prop_assert!((0.0..1.0).contains(&f));
            proptest::prop_assert_eq!(f == 0.0, c == n || auc == 0.0);
        }
    }
}
