use std::cmp::Ordering;
use std::collections::HashSet;

use super::EngineError;
use crate::classifier::{auc, predict_scores};
use crate::data::{project, Dataset};
use crate::evolution::{EvolutionError, Individual, Population};

fn rank(a: &Individual, b: &Individual) -> Ordering {
    let fa = a.fitness().unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness().unwrap_or(f64::NEG_INFINITY);
    fb.total_cmp(&fa)
        .then_with(|| a.cardinality().cmp(&b.cardinality()))
        .then_with(|| a.key.cmp(&b.key))
}

/// Pools the given populations, sorts by fitness (descending), then by
/// cardinality and key (ascending), keeps the top `ps` and renumbers keys
/// `0..ps`. Remaining ties keep pool order.
///
/// With `dedup_by_mask`, repeated masks are pushed behind every distinct
/// mask; they are only kept when fewer than `ps` distinct masks exist.
pub fn migrate(
    island_populations: Vec<Population>,
    ps: usize,
    dedup_by_mask: bool,
) -> Result<Population, EngineError> {
    let n_features = island_populations
        .first()
        .map(Population::n_features)
        .unwrap_or_default();
    let mut pool: Vec<Individual> = island_populations
        .into_iter()
        .flat_map(Population::into_members)
        .collect();
    if let Some(m) = pool.iter().find(|m| !m.is_evaluated()) {
        return Err(EvolutionError::Unevaluated { key: m.key }.into());
    }
    if pool.len() < ps {
        return Err(EngineError::PopulationTooSmall {
            total: pool.len(),
            ps,
        });
    }
    pool.sort_by(rank);
    if dedup_by_mask {
        let mut seen = HashSet::new();
        let (unique, repeats): (Vec<_>, Vec<_>) =
            pool.into_iter().partition(|m| seen.insert(m.mask.clone()));
        pool = unique;
        pool.extend(repeats);
    }
    pool.truncate(ps);
    for (key, m) in pool.iter_mut().enumerate() {
        m.key = key as u64;
    }
    Ok(Population::new(pool, n_features)?)
}

/// Scores every member's stored model on the test rows selected by its
/// mask. No retraining.
pub fn evaluate_test(pop: &Population, test: &Dataset) -> Result<Vec<(u64, f64)>, EngineError> {
    pop.members()
        .iter()
        .map(|m| {
            let model = m.model().ok_or(EngineError::MissingModel { key: m.key })?;
            if model.coefficients.len() != m.cardinality() {
                return Err(EngineError::Dimension {
                    key: m.key,
                    coefficients: model.coefficients.len(),
                    cardinality: m.cardinality(),
                });
            }
            let projected = project(test, &m.mask).map_err(|source| EvolutionError::Data { key: m.key, source })?;
            let classifier = |source| EvolutionError::Classifier { key: m.key, source };
            let scores = predict_scores(model, &projected).map_err(classifier)?;
            Ok((m.key, auc(&scores, projected.labels()).map_err(classifier)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{LRModel, TrainConfig};
    use crate::evolution::Evaluation;
    use crate::mask::FeatureMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn member(key: u64, mask: &str, fitness: f64) -> Individual {
        let mask: FeatureMask = mask.parse().unwrap();
        Individual {
            key,
            evaluation: Some(Evaluation {
                model: LRModel::zeros(mask.count_ones(), TrainConfig::default()),
                auc: fitness,
                fitness,
            }),
            mask,
        }
    }

    fn pop(members: Vec<Individual>) -> Population {
        let n = members[0].mask.len();
        Population::new(members, n).unwrap()
    }

    #[test]
    fn top_ps_across_islands() {
        let a = pop(vec![member(0, "10", 0.9), member(1, "01", 0.1)]);
        let b = pop(vec![member(0, "11", 0.5), member(1, "10", 0.3)]);
        let out = migrate(vec![a, b], 2, false).unwrap();
        let f: Vec<f64> = out.members().iter().map(|m| m.fitness().unwrap()).collect();
        assert_eq!(f, vec![0.9, 0.5]);
        let keys: Vec<u64> = out.members().iter().map(|m| m.key).collect();
        assert_eq!(keys, vec![0, 1]);
    }

    #[test]
    fn single_island_identity_up_to_order() {
        let a = pop(vec![member(0, "10", 0.2), member(1, "01", 0.7), member(2, "11", 0.4)]);
        let out = migrate(vec![a.clone()], 3, false).unwrap();
        let mut before: Vec<String> = a.members().iter().map(|m| m.mask.to_string()).collect();
        let mut after: Vec<String> = out.members().iter().map(|m| m.mask.to_string()).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn tie_breaks_on_cardinality_then_key() {
        let a = pop(vec![member(0, "111", 0.5), member(1, "100", 0.5), member(2, "010", 0.5)]);
        let out = migrate(vec![a], 3, false).unwrap();
        let masks: Vec<String> = out.members().iter().map(|m| m.mask.to_string()).collect();
        assert_eq!(masks, vec!["100", "010", "111"]);
    }

    #[test]
    fn errors() {
        let a = pop(vec![member(0, "10", 0.2)]);
        assert!(matches!(migrate(vec![a], 2, false), Err(EngineError::PopulationTooSmall { .. })));
        let raw = pop(vec![Individual::new(0, "10".parse().unwrap())]);
        assert!(migrate(vec![raw], 1, false).is_err());
    }

    #[test]
    fn dedup_prefers_distinct_masks() {
        let a = pop(vec![member(0, "10", 0.9), member(1, "01", 0.3)]);
        let b = pop(vec![member(0, "10", 0.9), member(1, "11", 0.1)]);
        let out = migrate(vec![a.clone(), b.clone()], 3, true).unwrap();
        let masks: Vec<String> = out.members().iter().map(|m| m.mask.to_string()).collect();
        assert_eq!(masks, vec!["10", "01", "11"]);
        let out = migrate(vec![a, b], 4, true).unwrap();
        assert_eq!(out.members()[3].mask.to_string(), "10");
    }

    #[test]
    fn survivors_match_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let islands: Vec<Population> = (0..rng.gen_range(1..5))
                .map(|_| {
                    let size = rng.gen_range(1..8);
                    pop((0..size)
                        .map(|k| {
                            let bits: String = (0..5).map(|_| if rng.gen_bool(0.5) { '1' } else { '0' }).collect();
                            let bits = if bits.contains('1') { bits } else { "00001".to_string() };
                            member(k, &bits, f64::from(rng.gen_range(0..6u8)) / 5.0)
                        })
                        .collect())
                })
                .collect();
            let total: usize = islands.iter().map(Population::len).sum();
            let ps = rng.gen_range(1..=total);
            let mut oracle: Vec<u64> = islands
                .iter()
                .flat_map(|p| p.members().iter().map(|m| (m.fitness().unwrap() * 5.0).round() as u64))
                .collect();
            oracle.sort_unstable_by(|a, b| b.cmp(a));
            oracle.truncate(ps);
            let out = migrate(islands, ps, false).unwrap();
            let got: Vec<u64> = out.members().iter().map(|m| (m.fitness().unwrap() * 5.0).round() as u64).collect();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn test_auc_cases() {
        let test = Dataset::from_rows(&[vec![-1.0, 3.0], vec![1.0, 3.0], vec![2.0, 3.0]], vec![0, 1, 1]).unwrap();
        let mut good = member(0, "10", 0.5);
        good.evaluation.as_mut().unwrap().model.coefficients = vec![2.0];
        let zero = member(1, "01", 0.5);
        let out = evaluate_test(&pop(vec![good, zero]), &test).unwrap();
        assert_eq!(out, vec![(0, 1.0), (1, 0.5)]);

        let mut wrong = member(0, "11", 0.5);
        wrong.evaluation.as_mut().unwrap().model.coefficients = vec![1.0];
        assert!(matches!(evaluate_test(&pop(vec![wrong]), &test), Err(EngineError::Dimension { .. })));
        let raw = Individual::new(0, "10".parse().unwrap());
        assert!(matches!(evaluate_test(&pop(vec![raw]), &test), Err(EngineError::MissingModel { .. })));
    }
}
