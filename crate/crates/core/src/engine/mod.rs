//! The island-model driver.
//!
//! One run: initialize and evaluate `ps` individuals, shard the training
//! rows over `k_islands` islands, then for each of `migrations` rounds let
//! every island sample `lps` members, evolve them for `generations`
//! generations on its own shard, and merge everything at a synchronous
//! barrier. Finally each survivor's stored model is scored on the test
//! split.
//!
//! Islands run on a dedicated rayon pool of `threads` workers. All random
//! streams are derived from `master_seed` per island and round, so the
//! report (outside its timing block) does not depend on the thread count.

mod migration;
mod report;
pub mod seeds;

pub use migration::{evaluate_test, migrate};
pub use report::{DatasetInfo, MemberReport, MigrationRecord, RunReport, Timings};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaos::{seed_state, ChaosError, ChaosMapKind, ChaosState, ChaosStream, DEFAULT_LOGISTIC_WEIGHT, DEFAULT_TENT_WEIGHT};
use crate::classifier::{auc, predict_scores, train_lr, ClassifierError, TrainConfig};
use crate::data::{project, shard, DataError, Dataset};
use crate::draw::{DrawSource, UniformDraws};
use crate::evolution::{
    evaluate, evolve_island, init_population, Binarization, EvolutionError, FitnessOracle, LrOracle,
    OperatorParams, Population, MIN_POPULATION,
};
use seeds::{open_unit, stream_rng, stream_seed, Stream};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {field}: {message}")]
    Config { field: &'static str, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Chaos(#[from] ChaosError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("island {island}: {source}")]
    Island {
        island: usize,
        #[source]
        source: EvolutionError,
    },
    #[error("migration pool holds {total} individuals, fewer than ps = {ps}")]
    PopulationTooSmall { total: usize, ps: usize },
    #[error("individual {key} has no trained model")]
    MissingModel { key: u64 },
    #[error("individual {key}: {coefficients} coefficients for {cardinality} selected features")]
    Dimension {
        key: u64,
        coefficients: usize,
        cardinality: usize,
    },
    #[error("test evaluation of individual {key}: {source}")]
    Classifier {
        key: u64,
        #[source]
        source: ClassifierError,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Which algorithm: plain BDE, or CBDE with the logistic or tent map used
/// for both initialization and crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "bde")]
    Bde,
    #[serde(rename = "cbde-lm")]
    CbdeLm,
    #[serde(rename = "cbde-tm")]
    CbdeTm,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Bde, Variant::CbdeLm, Variant::CbdeTm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Bde => "bde",
            Variant::CbdeLm => "cbde-lm",
            Variant::CbdeTm => "cbde-tm",
        }
    }

    /// Display name used in result tables.
    pub fn model_name(&self) -> &'static str {
        match self {
            Variant::Bde => "P-BDE-iS",
            Variant::CbdeLm => "P-CBDE-iS-LM",
            Variant::CbdeTm => "P-CBDE-iS-TM",
        }
    }

    pub fn is_chaotic(&self) -> bool {
        !matches!(self, Variant::Bde)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (expected bde, cbde-lm or cbde-tm)"))
    }
}

fn default_logistic_weight() -> f64 {
    DEFAULT_LOGISTIC_WEIGHT
}

fn default_tent_weight() -> f64 {
    DEFAULT_TENT_WEIGHT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Global population size.
    pub ps: usize,
    /// Local (per-island) population size, `4 <= lps < ps`.
    pub lps: usize,
    pub k_islands: usize,
    /// Number of migration rounds (`mMig`).
    pub migrations: usize,
    /// Generations per island per round (`mGen`).
    pub generations: usize,
    pub mutation_factor: f64,
    pub crossover_rate: f64,
    pub variant: Variant,
    pub master_seed: u64,
    /// Worker threads; `None` uses all cores. Not part of the serialized
    /// echo because it cannot change results.
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub binarization: Binarization,
    #[serde(default = "default_logistic_weight")]
    pub logistic_weight: f64,
    #[serde(default = "default_tent_weight")]
    pub tent_weight: f64,
    #[serde(default)]
    pub lr: TrainConfig,
    /// Keep only distinct masks at migration while enough exist.
    #[serde(default)]
    pub dedup_by_mask: bool,
    /// Drop stored fitness when a member is sampled into an island and
    /// re-train it on that island's shard. Elitism is not guaranteed then.
    #[serde(default)]
    pub reevaluate_on_island: bool,
    /// Also report a test AUC from a model retrained on the full train set.
    #[serde(default)]
    pub retrain_for_test: bool,
    /// Store the whole population in every migration record.
    #[serde(default)]
    pub keep_snapshots: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            ps: 40,
            lps: 10,
            k_islands: 4,
            migrations: 5,
            generations: 10,
            mutation_factor: 0.2,
            crossover_rate: 0.9,
            variant: Variant::CbdeLm,
            master_seed: 0,
            threads: None,
            binarization: Binarization::Threshold,
            logistic_weight: DEFAULT_LOGISTIC_WEIGHT,
            tent_weight: DEFAULT_TENT_WEIGHT,
            lr: TrainConfig::default(),
            dedup_by_mask: false,
            reevaluate_on_island: false,
            retrain_for_test: false,
            keep_snapshots: false,
        }
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> EngineError {
    EngineError::Config {
        field,
        message: message.into(),
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.lps < MIN_POPULATION {
            return Err(invalid("lps", format!("must be at least {MIN_POPULATION}, got {}", self.lps)));
        }
        if self.lps >= self.ps {
            return Err(invalid("lps", format!("must be less than ps ({}), got {}", self.ps, self.lps)));
        }
        if self.k_islands == 0 {
            return Err(invalid("k_islands", "must be at least 1"));
        }
        if self.migrations == 0 {
            return Err(invalid("migrations", "must be at least 1"));
        }
        if !(self.mutation_factor > 0.0 && self.mutation_factor <= 1.0) {
            return Err(invalid("mutation_factor", format!("must lie in (0, 1], got {}", self.mutation_factor)));
        }
        if !(self.crossover_rate > 0.0 && self.crossover_rate <= 1.0) {
            return Err(invalid("crossover_rate", format!("must lie in (0, 1], got {}", self.crossover_rate)));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        if let Binarization::Sigmoid { slope } = self.binarization {
            if !(slope.is_finite() && slope > 0.0) {
                return Err(invalid("binarization", "sigmoid slope must be positive"));
            }
        }
        ChaosMapKind::logistic(self.logistic_weight).map_err(|e| invalid("logistic_weight", e.to_string()))?;
        ChaosMapKind::tent(self.tent_weight).map_err(|e| invalid("tent_weight", e.to_string()))?;
        let lr = &self.lr;
        if !(lr.learning_rate.is_finite() && lr.learning_rate > 0.0) {
            return Err(invalid("lr.learning_rate", "must be positive"));
        }
        if !(lr.tolerance >= 0.0) {
            return Err(invalid("lr.tolerance", "must be non-negative"));
        }
        if !(lr.l2 >= 0.0) {
            return Err(invalid("lr.l2", "must be non-negative"));
        }
        Ok(())
    }

    pub fn operator_params(&self) -> OperatorParams {
        OperatorParams {
            mutation_factor: self.mutation_factor,
            crossover_rate: self.crossover_rate,
            binarization: self.binarization,
        }
    }

    pub fn chaos_kind(&self) -> Option<ChaosMapKind> {
        match self.variant {
            Variant::Bde => None,
            Variant::CbdeLm => Some(ChaosMapKind::Logistic {
                lw: self.logistic_weight,
            }),
            Variant::CbdeTm => Some(ChaosMapKind::Tent { tw: self.tent_weight }),
        }
    }

    /// LR trainings a run performs when members are not re-evaluated on
    /// islands: the initial population plus one per offspring.
    pub fn expected_trainings(&self) -> usize {
        self.ps + self.k_islands * self.migrations * self.generations * self.lps
    }
}

struct IslandOutcome {
    sampled: Vec<usize>,
    population: Population,
    chaos: Option<ChaosState>,
    trainings: usize,
    seconds: f64,
}

fn run_island(
    config: &EngineConfig,
    island: usize,
    round: usize,
    global: &Population,
    shard_data: &Dataset,
    chaos: Option<ChaosState>,
) -> Result<IslandOutcome, EvolutionError> {
    let started = Instant::now();
    let (i, r) = (island as u64, round as u64);
    let mut sample_rng = stream_rng(config.master_seed, Stream::Sample, i, r);
    let mut sampled = rand::seq::index::sample(&mut sample_rng, global.len(), config.lps).into_vec();
    sampled.sort_unstable();
    let members = sampled
        .iter()
        .map(|&idx| {
            let mut m = global.members()[idx].clone();
            if config.reevaluate_on_island {
                m.evaluation = None;
            }
            m
        })
        .collect();

    let oracle = LrOracle::new(shard_data, config.lr);
    let local = evaluate(Population::new(members, global.n_features())?, &oracle)?;

    let mut picks = UniformDraws(stream_rng(config.master_seed, Stream::Picks, i, r));
    let mut chaos_stream = chaos.map(ChaosStream::new);
    let mut uniform_xo;
    let crossover_draws: &mut dyn DrawSource = match chaos_stream.as_mut() {
        Some(stream) => stream,
        None => {
            uniform_xo = UniformDraws(stream_rng(config.master_seed, Stream::Crossover, i, r));
            &mut uniform_xo
        }
    };
    let population = evolve_island(
        local,
        &oracle,
        config.generations,
        &config.operator_params(),
        &mut picks,
        crossover_draws,
    )?;
    Ok(IslandOutcome {
        sampled,
        population,
        chaos: chaos_stream.map(|s| s.state()),
        trainings: oracle.trainings(),
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn evaluate_parallel(pop: Population, oracle: &dyn FitnessOracle) -> Result<Population, EvolutionError> {
    let n = pop.n_features();
    let mut members = pop.into_members();
    members
        .par_iter_mut()
        .filter(|m| !m.is_evaluated())
        .try_for_each(|m| {
            m.evaluation = Some(oracle.assess(m.key, &m.mask)?);
            Ok::<_, EvolutionError>(())
        })?;
    Population::new(members, n)
}

/// Runs the full island model and scores the final population on `test`.
pub fn run(config: &EngineConfig, train: &Dataset, test: &Dataset) -> Result<RunReport, EngineError> {
    config.validate()?;
    if train.n_features() != test.n_features() {
        return Err(DataError::FeatureCountMismatch {
            train: train.n_features(),
            test: test.n_features(),
        }
        .into());
    }
    let threads = config
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
    pool.install(|| run_on_pool(config, train, test, threads))
}

fn run_on_pool(
    config: &EngineConfig,
    train: &Dataset,
    test: &Dataset,
    threads: usize,
) -> Result<RunReport, EngineError> {
    let started = Instant::now();
    let n_features = train.n_features();
    let seed = config.master_seed;
    let chaos_kind = config.chaos_kind();

    let shards = shard(train, config.k_islands, stream_seed(seed, Stream::Shard, 0, 0))?;

    let mut init_rng = stream_rng(seed, Stream::Init, 0, 0);
    let initial = match chaos_kind {
        None => init_population(config.ps, n_features, &mut UniformDraws(init_rng))?,
        Some(kind) => {
            let state = seed_state(kind, open_unit(&mut init_rng))?;
            init_population(config.ps, n_features, &mut ChaosStream::new(state))?
        }
    };
    let full_oracle = LrOracle::new(train, config.lr);
    let mut global = evaluate_parallel(initial, &full_oracle)?;
    let mut lr_trainings = full_oracle.trainings();
    let initialization = started.elapsed().as_secs_f64();

    let mut island_chaos: Vec<Option<ChaosState>> = (0..config.k_islands)
        .map(|i| {
            chaos_kind
                .map(|kind| {
                    let mut rng = stream_rng(seed, Stream::IslandChaos, i as u64, 0);
                    seed_state(kind, open_unit(&mut rng))
                })
                .transpose()
        })
        .collect::<Result<_, _>>()?;

    let mut migrations = Vec::with_capacity(config.migrations);
    let mut per_migration = Vec::with_capacity(config.migrations);
    let mut per_island = Vec::with_capacity(config.migrations);
    for round in 0..config.migrations {
        let round_started = Instant::now();
        let outcomes: Vec<IslandOutcome> = shards
            .par_iter()
            .zip(island_chaos.par_iter())
            .map(|(s, &chaos)| {
                run_island(config, s.island_id, round, &global, &s.data, chaos)
                    .map_err(|source| EngineError::Island {
                        island: s.island_id,
                        source,
                    })
            })
            .collect::<Result<_, _>>()?;

        let mut sampled = vec![false; global.len()];
        for o in &outcomes {
            for &idx in &o.sampled {
                sampled[idx] = true;
            }
        }
        let unsampled: Vec<_> = global
            .members()
            .iter()
            .zip(&sampled)
            .filter(|(_, &s)| !s)
            .map(|(m, _)| m.clone())
            .collect();
        let mut pools = vec![Population::new(unsampled, n_features)?];
        per_island.push(outcomes.iter().map(|o| o.seconds).collect());
        for (slot, o) in island_chaos.iter_mut().zip(outcomes) {
            *slot = o.chaos;
            lr_trainings += o.trainings;
            pools.push(o.population);
        }
        global = migrate(pools, config.ps, config.dedup_by_mask)?;

        let best = global.best().expect("non-empty population");
        migrations.push(MigrationRecord {
            migration_index: round,
            best_fitness: best.fitness().expect("evaluated"),
            best_mask: best.mask.clone(),
            population_snapshot: config.keep_snapshots.then(|| global.clone()),
        });
        per_migration.push(round_started.elapsed().as_secs_f64());
    }

    let test_started = Instant::now();
    let test_aucs = evaluate_test(&global, test)?;
    let retrained: Vec<Option<f64>> = if config.retrain_for_test {
        global
            .members()
            .par_iter()
            .map(|m| retrained_test_auc(config, train, test, m).map(Some))
            .collect::<Result<_, _>>()?
    } else {
        vec![None; global.len()]
    };
    let test_evaluation = test_started.elapsed().as_secs_f64();

    let final_population = global
        .members()
        .iter()
        .zip(test_aucs)
        .zip(retrained)
        .map(|((m, (_, test_auc)), retrained_test_auc)| {
            let e = m.evaluation.as_ref().expect("evaluated");
            MemberReport {
                key: m.key,
                mask: m.mask.clone(),
                fitness: e.fitness,
                train_auc: e.auc,
                test_auc,
                retrained_test_auc,
                coefficients: e.model.coefficients.clone(),
                intercept: e.model.intercept,
            }
        })
        .collect();

    Ok(RunReport {
        config: EngineConfig {
            threads: None,
            ..config.clone()
        },
        dataset: None,
        n_features,
        final_population,
        migrations,
        lr_trainings,
        timings: Timings {
            threads,
            total: started.elapsed().as_secs_f64(),
            initialization,
            per_migration,
            per_island,
            test_evaluation,
        },
    })
}

fn retrained_test_auc(
    config: &EngineConfig,
    train: &Dataset,
    test: &Dataset,
    member: &crate::evolution::Individual,
) -> Result<f64, EngineError> {
    let key = member.key;
    let data_err = |source| EvolutionError::Data { key, source };
    let classifier = |source| EngineError::Classifier { key, source };
    let model = train_lr(&project(train, &member.mask).map_err(data_err)?, &config.lr).map_err(classifier)?;
    let projected = project(test, &member.mask).map_err(data_err)?;
    let scores = predict_scores(&model, &projected).map_err(classifier)?;
    auc(&scores, projected.labels()).map_err(classifier)
}
