use serde::{Deserialize, Serialize};

use super::{EvolutionError, Individual, Population, MIN_POPULATION};
use crate::draw::{index_from_draw, DrawSource};
use crate::mask::FeatureMask;

/// How the real-valued mutant `best + MF * (s1 - s2)` becomes a bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binarization {
    /// Bit is 1 iff the mutant value is at least 0.5.
    #[default]
    Threshold,
    /// Bit is 1 with probability `1 / (1 + exp(-slope * (v - 0.5)))`,
    /// one draw per bit.
    Sigmoid { slope: f64 },
}

/// One mask: bit `j` is set iff the `j`-th draw is below 0.5, then
/// repaired from the same source.
pub fn init_mask(n_features: usize, draws: &mut dyn DrawSource) -> FeatureMask {
    let bits = (0..n_features).map(|_| draws.next_unit() < 0.5).collect();
    repair(FeatureMask::from_bits(bits), draws)
}

/// `ps` masks drawn individual-major from one source, keys `0..ps`.
pub fn init_population(
    ps: usize,
    n_features: usize,
    draws: &mut dyn DrawSource,
) -> Result<Population, EvolutionError> {
    if ps < MIN_POPULATION {
        return Err(EvolutionError::TooSmall { size: ps });
    }
    let members = (0..ps as u64)
        .map(|key| Individual::new(key, init_mask(n_features, draws)))
        .collect();
    Population::new(members, n_features)
}

/// DE/best/1 mutation with threshold binarization.
pub fn mutate(
    best: &FeatureMask,
    s1: &FeatureMask,
    s2: &FeatureMask,
    mf: f64,
) -> Result<FeatureMask, EvolutionError> {
    best.check_len(s1)?;
    best.check_len(s2)?;
    let bits = (0..best.len())
        .map(|j| mutant_value(best, s1, s2, mf, j) >= 0.5)
        .collect();
    Ok(FeatureMask::from_bits(bits))
}

fn mutant_value(best: &FeatureMask, s1: &FeatureMask, s2: &FeatureMask, mf: f64, j: usize) -> f64 {
    let bit = |m: &FeatureMask| f64::from(u8::from(m.get(j)));
    bit(best) + mf * (bit(s1) - bit(s2))
}

/// Mutation with a chosen binarization. Sigmoid mode consumes one draw per
/// bit; threshold mode consumes none.
pub fn mutate_with(
    best: &FeatureMask,
    s1: &FeatureMask,
    s2: &FeatureMask,
    mf: f64,
    binarization: Binarization,
    draws: &mut dyn DrawSource,
) -> Result<FeatureMask, EvolutionError> {
    match binarization {
        Binarization::Threshold => mutate(best, s1, s2, mf),
        Binarization::Sigmoid { slope } => {
            best.check_len(s1)?;
            best.check_len(s2)?;
            let bits = (0..best.len())
                .map(|j| {
                    let v = mutant_value(best, s1, s2, mf, j);
                    let p = 1.0 / (1.0 + (-slope * (v - 0.5)).exp());
                    draws.next_unit() < p
                })
                .collect();
            Ok(FeatureMask::from_bits(bits))
        }
    }
}

/// Binomial crossover. Exactly `len` draws are consumed in bit order; bit
/// `j` comes from the mutant when its draw is below `cr` or when `j` is the
/// forced index.
pub fn crossover(
    parent: &FeatureMask,
    mutant: &FeatureMask,
    cr: f64,
    forced_index: usize,
    draws: &mut dyn DrawSource,
) -> Result<FeatureMask, EvolutionError> {
    parent.check_len(mutant)?;
    if forced_index >= parent.len() {
        return Err(EvolutionError::ForcedIndex {
            index: forced_index,
            len: parent.len(),
        });
    }
    let bits = (0..parent.len())
        .map(|j| {
            let draw = draws.next_unit();
            if draw < cr || j == forced_index {
                mutant.get(j)
            } else {
                parent.get(j)
            }
        })
        .collect();
    Ok(FeatureMask::from_bits(bits))
}

/// Nonempty masks pass through untouched without consuming a draw. An
/// empty mask gets the single bit `floor(draw * N)`.
pub fn repair(mut mask: FeatureMask, draws: &mut dyn DrawSource) -> FeatureMask {
    if mask.any() || mask.is_empty() {
        return mask;
    }
    let index = index_from_draw(draws.next_unit(), mask.len());
    mask.set(index, true);
    mask
}

/// Two distinct donor positions, both different from `target`, from two
/// draws: the first picks among the `n - 1` others, the second among the
/// remaining `n - 2`.
pub fn pick_donors(target: usize, n: usize, draws: &mut dyn DrawSource) -> (usize, usize) {
    debug_assert!(n >= 3 && target < n);
    let mut s1 = index_from_draw(draws.next_unit(), n - 1);
    if s1 >= target {
        s1 += 1;
    }
    let (lo, hi) = if s1 < target { (s1, target) } else { (target, s1) };
    let mut s2 = index_from_draw(draws.next_unit(), n - 2);
    if s2 >= lo {
        s2 += 1;
    }
    if s2 >= hi {
        s2 += 1;
    }
    (s1, s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaosMapKind, ChaosState, ChaosStream};
    use crate::draw::{ScriptedDraws, UniformDraws};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(s: &str) -> FeatureMask {
        s.parse().unwrap()
    }

    #[test]
    fn chaotic_init_repairs_all_zero_mask() {
        let state = ChaosState {
            kind: ChaosMapKind::logistic(4.0).unwrap(),
            value: 0.3,
        };
        let (vals, _) = state.sequence(4);
        assert!(vals[..3].iter().all(|&v| v >= 0.5));
        let mut stream = ChaosStream::new(state);
        let mask = init_mask(3, &mut stream);
        assert_eq!(mask.count_ones(), 1);
        assert!(mask.get(index_from_draw(vals[3], 3)));

        let mut stream = ChaosStream::new(state);
        let pop = init_population(4, 3, &mut stream).unwrap();
        assert_eq!(pop.members()[0].mask, mask);
    }

    #[test]
    fn init_threshold_and_keys() {
        let mut low = ScriptedDraws::new(vec![0.1; 12]);
        let pop = init_population(4, 3, &mut low).unwrap();
        assert!(pop.members().iter().all(|i| i.mask == FeatureMask::ones(3)));
        let keys: Vec<u64> = pop.members().iter().map(|i| i.key).collect();
        assert_eq!(keys, vec![0, 1, 2, 3]);
        assert!(init_population(3, 3, &mut low).is_err());
    }

    #[test]
    fn init_deterministic() {
        let a = init_population(6, 9, &mut UniformDraws(ChaCha8Rng::seed_from_u64(1))).unwrap();
        let b = init_population(6, 9, &mut UniformDraws(ChaCha8Rng::seed_from_u64(1))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mutation_examples() {
        assert_eq!(mutate(&m("101"), &m("110"), &m("011"), 0.2).unwrap(), m("101"));
        assert_eq!(mutate(&m("0"), &m("1"), &m("0"), 0.6).unwrap(), m("1"));
        assert_eq!(mutate(&m("0"), &m("1"), &m("0"), 0.4).unwrap(), m("0"));
        assert_eq!(mutate(&m("1"), &m("0"), &m("1"), 0.6).unwrap(), m("0"));
        assert!(mutate(&m("10"), &m("1"), &m("0"), 0.5).is_err());
    }

    #[test]
    fn sigmoid_binarization_uses_draws() {
        let mut draws = ScriptedDraws::new(vec![0.995, 0.0]);
        let out = mutate_with(&m("11"), &m("00"), &m("00"), 0.2, Binarization::Sigmoid { slope: 10.0 }, &mut draws).unwrap();
        assert_eq!(out, m("01"));
        assert_eq!(draws.consumed(), 2);
    }

    #[test]
    fn crossover_examples() {
        let mut draws = ScriptedDraws::new(vec![0.3, 0.95, 0.1]);
        assert_eq!(crossover(&m("010"), &m("101"), 0.9, 1, &mut draws).unwrap(), m("101"));

        let mut draws = ScriptedDraws::new(vec![0.5; 4]);
        let trial = crossover(&m("0000"), &m("1111"), 0.0, 2, &mut draws).unwrap();
        assert_eq!(trial, m("0010"));
        assert_eq!(draws.consumed(), 4);

        let mut draws = ScriptedDraws::new(vec![0.99; 3]);
        assert_eq!(crossover(&m("000"), &m("110"), 1.0, 0, &mut draws).unwrap(), m("110"));

        let mut draws = ScriptedDraws::new(vec![0.5; 3]);
        assert!(matches!(
            crossover(&m("000"), &m("110"), 1.0, 3, &mut draws),
            Err(EvolutionError::ForcedIndex { .. })
        ));
    }

    #[test]
    fn repair_examples() {
        let mut none = ScriptedDraws::new(Vec::new());
        assert_eq!(repair(m("0101"), &mut none), m("0101"));
        let mut d = ScriptedDraws::new(vec![0.6]);
        assert_eq!(repair(m("0000"), &mut d), m("0010"));
        let mut d = ScriptedDraws::new(vec![1.0]);
        assert_eq!(repair(m("000"), &mut d), m("001"));
    }

    #[test]
    fn donor_picking_is_exhaustively_distinct() {
        for n in 3..8 {
            for target in 0..n {
                for a in 0..(n - 1) {
                    for b in 0..(n - 2) {
                        let u1 = (a as f64 + 0.5) / (n - 1) as f64;
                        let u2 = (b as f64 + 0.5) / (n - 2) as f64;
                        let mut d = ScriptedDraws::new(vec![u1, u2]);
                        let (s1, s2) = pick_donors(target, n, &mut d);
                        assert!(s1 < n && s2 < n);
                        assert!(s1 != target && s2 != target && s1 != s2);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn identical_donors_reproduce_best(bits in proptest::collection::vec(any::<bool>(), 1..30),
                                           donor in proptest::collection::vec(any::<bool>(), 1..30),
                                           mf in 0.0f64..=1.0) {
            let n = bits.len().min(donor.len());
            let best = FeatureMask::from_bits(bits[..n].to_vec());
            let s = FeatureMask::from_bits(donor[..n].to_vec());
            prop_assert_eq!(mutate(&best, &s, &s, mf).unwrap(), best);
        }

        #[test]
        fn variation_closure(seed in any::<u64>(), n in 1usize..40, cr in 0.0f64..=1.0, mf in 0.0f64..=1.0) {
            let mut rng = UniformDraws(ChaCha8Rng::seed_from_u64(seed));
            let a = init_mask(n, &mut rng);
            let b = init_mask(n, &mut rng);
            let c = init_mask(n, &mut rng);
            let mutant = mutate(&a, &b, &c, mf).unwrap();
            let forced = index_from_draw(rng.next_unit(), n);
            let trial = repair(crossover(&b, &mutant, cr, forced, &mut rng).unwrap(), &mut rng);
            prop_assert_eq!(trial.len(), n);
            prop_assert!(trial.count_ones() >= 1);
        }
    }
}
