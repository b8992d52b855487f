//! Synthetic binary classification data with a known set of informative
//! features.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use chaosfs::data::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Returns the offending field and a message.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.n_samples < 2 {
            return Err(("n_samples", format!("must be at least 2, got {}", self.n_samples)));
        }
        if self.n_features == 0 {
            return Err(("n_features", "must be at least 1".into()));
        }
        if self.n_informative == 0 || self.n_informative > self.n_features {
            return Err((
                "n_informative",
                format!("must lie in 1..={}, got {}", self.n_features, self.n_informative),
            ));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(("noise", format!("must be finite and non-negative, got {}", self.noise)));
        }
        Ok(())
    }

    /// A one-line description that is enough to regenerate the data.
    pub fn source(&self) -> String {
        format!(
            "synthetic:n_samples={},n_features={},n_informative={},noise={},seed={}",
            self.n_samples, self.n_features, self.n_informative, self.noise, self.seed
        )
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Ascending indices of the features the labels depend on.
    pub informative: Vec<usize>,
    /// Logit weight of each informative feature, same order.
    pub weights: Vec<f64>,
}

/// The sidecar written next to a generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: SyntheticSpec,
    pub informative: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Features are independent standard normals. The label is 1 when
/// `sum(w_j * x_j) + noise * e > 0` over the informative features, with
/// `|w_j|` uniform in [0.5, 1.5], a random sign and `e` standard normal.
pub fn generate(spec: &SyntheticSpec) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut informative = sample(&mut rng, spec.n_features, spec.n_informative).into_vec();
    informative.sort_unstable();
    let weights: Vec<f64> = informative
        .iter()
        .map(|_| {
            let magnitude = rng.gen_range(0.5..=1.5);
            if rng.gen_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();

    let mut values = Vec::with_capacity(spec.n_samples * spec.n_features);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let start = values.len();
        values.extend((0..spec.n_features).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let row = &values[start..];
        let signal: f64 = informative.iter().zip(&weights).map(|(&j, w)| w * row[j]).sum();
        let noise: f64 = rng.sample(StandardNormal);
        labels.push(u8::from(signal + spec.noise * noise > 0.0));
    }
    let dataset = Dataset::dense(values, spec.n_features, labels).expect("well-formed synthetic data");
    Synthetic {
        dataset,
        informative,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_features: usize, n_informative: usize) -> SyntheticSpec {
        SyntheticSpec {
            n_samples: 200,
            n_features,
            n_informative,
            noise: 0.1,
            seed: 3,
        }
    }

    #[test]
    fn validation() {
        assert!(spec(10, 3).validate().is_ok());
        assert_eq!(spec(10, 0).validate().unwrap_err().0, "n_informative");
        assert_eq!(spec(10, 11).validate().unwrap_err().0, "n_informative");
        assert_eq!(SyntheticSpec { noise: -1.0, ..spec(10, 3) }.validate().unwrap_err().0, "noise");
        assert_eq!(SyntheticSpec { n_samples: 1, ..spec(10, 3) }.validate().unwrap_err().0, "n_samples");
    }

    #[test]
    fn all_informative() {
        let s = generate(&spec(6, 6));
        assert_eq!(s.informative, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_balanced() {
        let a = generate(&spec(20, 4));
        let b = generate(&spec(20, 4));
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.informative, b.informative);
        let [neg, pos] = a.dataset.class_counts();
        assert!(neg > 60 && pos > 60, "{neg} / {pos}");
        let c = generate(&SyntheticSpec { seed: 4, ..spec(20, 4) });
        assert_ne!(a.dataset, c.dataset);
    }
}
