use std::sync::atomic::{AtomicUsize, Ordering};

use super::operators::{crossover, mutate_with, pick_donors, repair};
use super::{fitness_score, Evaluation, EvolutionError, Individual, OperatorParams, Population, MIN_POPULATION};
use crate::classifier::{auc, fit_lr, predict_scores, TrainConfig};
use crate::data::{project, Dataset};
use crate::draw::{index_from_draw, DrawSource};
use crate::mask::FeatureMask;

/// Scores a mask. Implementations must be pure functions of the mask so
/// that evaluation order does not matter.
pub trait FitnessOracle: Sync {
    fn n_features(&self) -> usize;
    fn assess(&self, key: u64, mask: &FeatureMask) -> Result<Evaluation, EvolutionError>;
}

/// Train-and-update on one dataset: project by the mask, train LR, score
/// the training rows, combine AUC and cardinality into fitness.
#[derive(Debug)]
pub struct LrOracle<'a> {
    data: &'a Dataset,
    config: TrainConfig,
    trainings: AtomicUsize,
}

impl<'a> LrOracle<'a> {
    pub fn new(data: &'a Dataset, config: TrainConfig) -> Self {
        Self {
            data,
            config,
            trainings: AtomicUsize::new(0),
        }
    }

    /// Number of LR models trained so far.
    pub fn trainings(&self) -> usize {
        self.trainings.load(Ordering::Relaxed)
    }
}

impl FitnessOracle for LrOracle<'_> {
    fn n_features(&self) -> usize {
        self.data.n_features()
    }

    fn assess(&self, key: u64, mask: &FeatureMask) -> Result<Evaluation, EvolutionError> {
        let projected = project(self.data, mask).map_err(|source| EvolutionError::Data { key, source })?;
        let classifier = |source| EvolutionError::Classifier { key, source };
        self.trainings.fetch_add(1, Ordering::Relaxed);
        let model = fit_lr(&projected, &self.config).map_err(classifier)?.model;
        let scores = predict_scores(&model, &projected).map_err(classifier)?;
        let auc = auc(&scores, projected.labels()).map_err(classifier)?;
        let fitness = fitness_score(auc, mask.count_ones(), mask.len())?;
        Ok(Evaluation {
            model,
            auc,
            fitness,
        })
    }
}

/// Evaluates every member that has no evaluation yet; evaluated members are
/// left alone.
pub fn evaluate(pop: Population, oracle: &dyn FitnessOracle) -> Result<Population, EvolutionError> {
    let n = pop.n_features();
    let mut members = pop.into_members();
    for m in members.iter_mut().filter(|m| !m.is_evaluated()) {
        m.evaluation = Some(oracle.assess(m.key, &m.mask)?);
    }
    Population::new(members, n)
}

/// Runs `generations` synchronous DE/best/1/bin generations.
///
/// Per member `i`, in order: two donor draws and one forced-index draw from
/// `picks` (plus one draw per bit from `picks` under sigmoid
/// binarization), then one crossover draw per bit and, only if the trial is
/// empty, one repair draw from `crossover_draws`. All trials are built
/// against the same generation best, evaluated together, then each replaces
/// its parent unless the parent is strictly fitter.
pub fn evolve_island(
    local: Population,
    oracle: &dyn FitnessOracle,
    generations: usize,
    params: &OperatorParams,
    picks: &mut dyn DrawSource,
    crossover_draws: &mut dyn DrawSource,
) -> Result<Population, EvolutionError> {
    if local.len() < MIN_POPULATION {
        return Err(EvolutionError::TooSmall { size: local.len() });
    }
    if let Some(m) = local.members().iter().find(|m| !m.is_evaluated()) {
        return Err(EvolutionError::Unevaluated { key: m.key });
    }
    let n_features = local.n_features();
    let mut pop = local;
    for _ in 0..generations {
        let members = pop.members();
        let best = &members[pop.best_index().expect("evaluated population")].mask;
        let mut trials = Vec::with_capacity(members.len());
        for (i, parent) in members.iter().enumerate() {
            let (s1, s2) = pick_donors(i, members.len(), picks);
            let forced = index_from_draw(picks.next_unit(), n_features);
            let mutant = mutate_with(
                best,
                &members[s1].mask,
                &members[s2].mask,
                params.mutation_factor,
                params.binarization,
                picks,
            )?;
            let trial = crossover(&parent.mask, &mutant, params.crossover_rate, forced, crossover_draws)?;
            trials.push(Individual::new(parent.key, repair(trial, crossover_draws)));
        }
        let offspring = evaluate(Population::new(trials, n_features)?, oracle)?;
        let next = pop
            .into_members()
            .into_iter()
            .zip(offspring.into_members())
            .map(|(parent, trial)| super::select(parent, trial))
            .collect::<Result<Vec<_>, _>>()?;
        pop = Population::new(next, n_features)?;
    }
    Ok(pop)
}
