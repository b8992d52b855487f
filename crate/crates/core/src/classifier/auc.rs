//! ROC AUC through the Mann-Whitney rank-sum statistic.

use super::ClassifierError;

/// Probability that a random positive outscores a random negative, ties
/// counting one half. O(n log n): one sort, midranks for tied groups.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, ClassifierError> {
    if scores.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ClassifierError::NanScore);
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ClassifierError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (0-based) share the 1-based midrank
        let midrank = (start + end + 1) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        pos_rank_sum += midrank * positives as f64;
        start = end;
    }

    let p = n_pos as f64;
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(scores: &[f64], labels: &[u8]) -> f64 {
        let mut credit = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if si > sj {
                        credit += 1.0;
                    } else if si == sj {
                        credit += 0.5;
                    }
                }
            }
        }
        credit / pairs
    }

    #[test]
    fn fixed_cases() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.9], &[1, 0]).unwrap(), 0.0);
        assert_eq!(auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert_eq!(auc(&[0.2, 0.5, 0.5, 0.8], &[0, 1, 0, 1]).unwrap(), 0.875);
    }

    #[test]
    fn errors() {
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(ClassifierError::SingleClass)));
        assert!(matches!(auc(&[0.1], &[1, 0]), Err(ClassifierError::LengthMismatch { .. })));
        assert!(matches!(auc(&[f64::NAN, 0.2], &[1, 0]), Err(ClassifierError::NanScore)));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec((0u8..10).prop_map(|k| f64::from(k) / 10.0), n),
                proptest::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn matches_pair_count((scores, labels) in instance()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let fast = auc(&scores, &labels).unwrap();
            prop_assert!((fast - brute_force(&scores, &labels)).abs() < 1e-12);
        }

        #[test]
        fn monotone_transform_invariant((scores, labels) in instance()) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&warped, &labels).unwrap());
        }

        #[test]
        fn negation_complements(
            labels in proptest::collection::vec(0u8..2, 2..40),
            seed in any::<u64>(),
        ) {
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            // distinct scores: a seeded permutation of 0..n
            let n = labels.len() as u64;
            let scores: Vec<f64> = (0..n).map(|i| ((i * 7919 + seed % 1000) % (n * 7919)) as f64).collect();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let total = auc(&scores, &labels).unwrap() + auc(&neg, &labels).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
