use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset};

/// A disjoint, class-stratified row subset of the training set owned by
/// one island.
#[derive(Debug, Clone, PartialEq)]
pub struct DataShard {
    pub island_id: usize,
    /// Row indices into the parent dataset, ascending.
    pub rows: Vec<usize>,
    pub data: Dataset,
}

fn class_rows(ds: &Dataset) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &y) in ds.labels().iter().enumerate() {
        out[usize::from(y)].push(i);
    }
    out
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Splits per class: `round(count * test_fraction)` rows of each class go
/// to test, drawn uniformly without replacement. Both outputs keep the
/// original row order.
pub fn stratified_split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut rows) in class_rows(ds).into_iter().enumerate() {
        let count = rows.len();
        let n_test = round_half_up(count as f64 * test_fraction);
        if count < 2 || n_test == 0 || n_test >= count {
            return Err(DataError::ClassTooSmall {
                class: class as u8,
                count,
                purpose: format!("split with test fraction {test_fraction}"),
            });
        }
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select_rows(&train), ds.select_rows(&test)))
}

/// Deals the rows of each class round-robin over `k` shards after a seeded
/// shuffle. The deal continues across classes so shard totals stay
/// balanced as well.
pub fn shard(train: &Dataset, k: usize, seed: u64) -> Result<Vec<DataShard>, DataError> {
    let rows_by_class = class_rows(train);
    for (class, rows) in rows_by_class.iter().enumerate() {
        if k == 0 || rows.len() < k {
            return Err(DataError::ClassTooSmall {
                class: class as u8,
                count: rows.len(),
                purpose: format!("fill {k} shards"),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assigned = vec![Vec::new(); k];
    let mut next = 0;
    for mut rows in rows_by_class {
        rows.shuffle(&mut rng);
        for r in rows {
            assigned[next].push(r);
            next = (next + 1) % k;
        }
    }
    Ok(assigned
        .into_iter()
        .enumerate()
        .map(|(island_id, mut rows)| {
            rows.sort_unstable();
            let data = train.select_rows(&rows);
            DataShard {
                island_id,
                rows,
                data,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(labels: &[u8]) -> Dataset {
        let values = (0..labels.len()).map(|i| i as f64).collect();
        Dataset::dense(values, 1, labels.to_vec()).unwrap()
    }

    #[test]
    fn split_rounding() {
        let ds = labelled(&[1, 1, 1, 1, 1, 1, 0, 0, 0, 0]);
        let (train, test) = stratified_split(&ds, 0.2, 5).unwrap();
        assert_eq!(test.class_counts(), [1, 1]);
        assert_eq!(train.n_rows(), 8);

        let ds = labelled(&[1, 1, 0, 0]);
        let (_, test) = stratified_split(&ds, 0.5, 1).unwrap();
        assert_eq!(test.class_counts(), [1, 1]);
    }

    #[test]
    fn split_is_deterministic_partition() {
        let labels: Vec<u8> = (0..57).map(|i| u8::from(i % 3 == 0)).collect();
        let ds = labelled(&labels);
        let a = stratified_split(&ds, 0.2, 9).unwrap();
        let b = stratified_split(&ds, 0.2, 9).unwrap();
        assert_eq!(a, b);
        let (train, test) = a;
        let mut ids: Vec<f64> = (0..train.n_rows())
            .map(|r| train.value(r, 0))
            .chain((0..test.n_rows()).map(|r| test.value(r, 0)))
            .collect();
        ids.sort_by(f64::total_cmp);
        assert_eq!(ids, (0..57).map(|i| i as f64).collect::<Vec<_>>());
        let [n0, n1] = ds.class_counts();
        let [t0, t1] = test.class_counts();
        let [r0, r1] = train.class_counts();
        assert_eq!((t0 + r0, t1 + r1), (n0, n1));
    }

    #[test]
    fn split_rejects_small_classes() {
        assert!(stratified_split(&labelled(&[1, 0, 0, 0]), 0.5, 0).is_err());
        assert!(stratified_split(&labelled(&[1, 1, 0, 0, 0, 0]), 0.1, 0).is_err());
        assert!(stratified_split(&labelled(&[1, 1, 0, 0]), 1.0, 0).is_err());
        assert!(stratified_split(&labelled(&[1, 1, 0, 0]), 0.0, 0).is_err());
    }

    #[test]
    fn shard_two_balanced() {
        let ds = labelled(&[1, 1, 1, 1, 0, 0, 0, 0]);
        let shards = shard(&ds, 2, 4).unwrap();
        assert_eq!(shards.len(), 2);
        for s in &shards {
            assert_eq!(s.data.class_counts(), [2, 2]);
        }
    }

    #[test]
    fn shard_single_is_identity() {
        let ds = labelled(&[1, 0, 1, 0, 0]);
        let shards = shard(&ds, 1, 8).unwrap();
        assert_eq!(shards[0].data, ds);
    }

    #[test]
    fn shard_exhaustive_invariants() {
        let ds = labelled(&[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        for k in 1..=5 {
            for seed in 0..50 {
                let shards = shard(&ds, k, seed).unwrap();
                let mut all: Vec<usize> = shards.iter().flat_map(|s| s.rows.clone()).collect();
                all.sort_unstable();
                assert_eq!(all, (0..10).collect::<Vec<_>>());
                for class in 0..2 {
                    let counts: Vec<usize> = shards.iter().map(|s| s.data.class_counts()[class]).collect();
                    let spread = counts.iter().max().unwrap() - counts.iter().min().unwrap();
                    assert!(spread <= 1, "k={k} seed={seed} counts={counts:?}");
                    assert!(counts.iter().all(|&c| c >= 1));
                }
            }
        }
        assert!(shard(&ds, 6, 0).is_err());
        assert!(shard(&ds, 0, 0).is_err());
    }
}
